//! JSON run configuration. Every field has a default, so `{}` is the
//! reference setup: 64 elements at half-wavelength pitch, 2.7 MHz carrier
//! sampled at 10.9 MHz, 1918 samples and 65 angles over +-40 degrees.

use std::path::Path;

use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};
use snb_core::beamform::MvConfig;
use snb_core::geometry::uniform_angles;
use snb_core::neural::{AdamConfig, TrainConfig, UNetConfig};
use snb_core::sampling::CubeLayout;
use snb_core::simulate::{anechoic_cyst_phantom, point_grid_phantom, Phantom, PulseSpec, Sector, SimulationParams};
use snb_core::{AcquisitionConfig, ArrayGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySpec,
    pub acquisition: AcquisitionSpec,
    pub pulse: PulseFile,
    pub simulation: SimulationSpec,
    pub phantom: PhantomSpec,
    pub mv: MvSpec,
    pub network: NetworkSpec,
    pub training: TrainingSpec,
    pub display: DisplaySpec,
    /// Energy retained by each distortion-coefficient row window.
    pub energy_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometrySpec::default(),
            acquisition: AcquisitionSpec::default(),
            pulse: PulseFile::default(),
            simulation: SimulationSpec::default(),
            phantom: PhantomSpec::default(),
            mv: MvSpec::default(),
            network: NetworkSpec::default(),
            training: TrainingSpec::default(),
            display: DisplaySpec::default(),
            energy_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub elements: usize,
    /// Element pitch in meters; half a wavelength when absent.
    pub pitch: Option<f64>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            elements: 64,
            pitch: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionSpec {
    pub sound_speed: f64,
    pub carrier_hz: f64,
    pub sampling_hz: f64,
    pub samples: usize,
    pub angle_count: usize,
    pub half_span_deg: f64,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        let r = AcquisitionConfig::reference();
        Self {
            sound_speed: r.sound_speed,
            carrier_hz: r.carrier_hz,
            sampling_hz: r.sampling_hz,
            samples: r.samples,
            angle_count: r.angles.len(),
            half_span_deg: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseFile {
    pub fractional_bandwidth: f64,
}

impl Default for PulseFile {
    fn default() -> Self {
        Self {
            fractional_bandwidth: PulseSpec::with_carrier(1.0).fractional_bandwidth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub angular_sigma_deg: f64,
    pub reference_depth: f64,
    pub cutoff_sigmas: f64,
    /// Additive white noise level; none when absent.
    pub snr_db: Option<f64>,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        let p = SimulationParams::default();
        Self {
            angular_sigma_deg: p.angular_sigma.to_degrees(),
            reference_depth: p.reference_depth,
            cutoff_sigmas: p.cutoff_sigmas,
            snr_db: Some(30.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhantomSpec {
    Empty,
    PointGrid {
        depths_mm: Vec<f64>,
        angles_deg: Vec<f64>,
        amplitude: f64,
    },
    Cyst {
        r_min_mm: f64,
        r_max_mm: f64,
        half_span_deg: f64,
        center_depth_mm: f64,
        center_angle_deg: f64,
        radius_mm: f64,
        density_per_cm2: f64,
    },
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec::PointGrid {
            depths_mm: vec![20.0, 45.0, 70.0],
            angles_deg: vec![-15.0, 0.0, 15.0],
            amplitude: 1.0,
        }
    }
}

impl PhantomSpec {
    pub fn build(&self, seed: u64) -> Result<Phantom> {
        Ok(match self {
            PhantomSpec::Empty => Phantom {
                scatterers: Vec::new(),
                description: "empty".into(),
            },
            PhantomSpec::PointGrid {
                depths_mm,
                angles_deg,
                amplitude,
            } => {
                let depths: Vec<f64> = depths_mm.iter().map(|d| d * 1e-3).collect();
                let angles: Vec<f64> = angles_deg.iter().map(|a| a.to_radians()).collect();
                point_grid_phantom(&depths, &angles, *amplitude)?
            }
            PhantomSpec::Cyst {
                r_min_mm,
                r_max_mm,
                half_span_deg,
                center_depth_mm,
                center_angle_deg,
                radius_mm,
                density_per_cm2,
            } => {
                let half = half_span_deg.to_radians();
                let region = Sector {
                    r_min: r_min_mm * 1e-3,
                    r_max: r_max_mm * 1e-3,
                    theta_min: -half,
                    theta_max: half,
                };
                anechoic_cyst_phantom(
                    &region,
                    (center_depth_mm * 1e-3, center_angle_deg.to_radians()),
                    radius_mm * 1e-3,
                    *density_per_cm2,
                    seed,
                )?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MvSpec {
    /// Subaperture length; half the element count when absent.
    pub subaperture: Option<usize>,
    pub window: usize,
    pub loading: f64,
}

impl Default for MvSpec {
    fn default() -> Self {
        let d = MvConfig::for_elements(64);
        Self {
            subaperture: None,
            window: d.window,
            loading: d.loading,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    pub widths: [usize; 3],
    pub bottleneck: usize,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        let s = UNetConfig::standard(true);
        Self {
            widths: s.widths,
            bottleneck: s.bottleneck,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSpec {
    pub epochs: usize,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub lr: f64,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            val_fraction: t.val_fraction,
            lr: t.adam.lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisplaySpec {
    pub dynamic_range_db: f64,
    pub raster_width: usize,
    pub raster_height: usize,
}

impl Default for DisplaySpec {
    fn default() -> Self {
        Self {
            dynamic_range_db: 60.0,
            raster_width: 256,
            raster_height: 256,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.acquisition().validate()?;
        self.pulse()?;
        self.mv().validate(self.geometry.elements)?;
        self.network(CubeLayout::default()).validate()?;
        ensure!(
            self.energy_fraction > 0.0 && self.energy_fraction <= 1.0,
            "energy fraction must lie in (0, 1]"
        );
        ensure!(self.display.dynamic_range_db > 0.0, "dynamic range must be positive");
        ensure!(
            self.display.raster_width > 1 && self.display.raster_height > 1,
            "raster must be at least 2 x 2"
        );
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        let g = &self.geometry;
        Ok(match g.pitch {
            Some(p) => ArrayGeometry::uniform(g.elements, p)?,
            None => {
                ArrayGeometry::half_wavelength(g.elements, self.acquisition.sound_speed, self.acquisition.carrier_hz)?
            }
        })
    }

    pub fn acquisition(&self) -> AcquisitionConfig {
        let a = &self.acquisition;
        AcquisitionConfig {
            sound_speed: a.sound_speed,
            carrier_hz: a.carrier_hz,
            sampling_hz: a.sampling_hz,
            samples: a.samples,
            angles: uniform_angles(a.angle_count, a.half_span_deg.to_radians()),
            beam_support: None,
        }
    }

    pub fn pulse(&self) -> Result<PulseSpec> {
        Ok(PulseSpec::new(
            self.acquisition.carrier_hz,
            self.pulse.fractional_bandwidth,
        )?)
    }

    pub fn simulation(&self) -> SimulationParams {
        let s = &self.simulation;
        SimulationParams {
            angular_sigma: s.angular_sigma_deg.to_radians(),
            reference_depth: s.reference_depth,
            cutoff_sigmas: s.cutoff_sigmas,
        }
    }

    pub fn mv(&self) -> MvConfig {
        let base = MvConfig::for_elements(self.geometry.elements);
        MvConfig {
            subaperture: self.mv.subaperture.unwrap_or(base.subaperture),
            window: self.mv.window,
            loading: self.mv.loading,
        }
    }

    pub fn network(&self, layout: CubeLayout) -> UNetConfig {
        UNetConfig {
            in_channels: layout.in_channels(self.geometry.elements),
            widths: self.network.widths,
            bottleneck: self.network.bottleneck,
            pool_lateral: layout.pool_lateral(),
        }
    }

    pub fn train(&self, seed: u64) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            val_fraction: t.val_fraction,
            seed,
            adam: AdamConfig {
                lr: t.lr,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    /// The parts that fix the sampled data: geometry, acquisition and pulse.
    pub fn same_acquisition(&self, other: &RunConfig) -> bool {
        self.geometry == other.geometry && self.acquisition == other.acquisition && self.pulse == other.pulse
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_reference_setup() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
        let acq = cfg.acquisition();
        assert_eq!(acq, AcquisitionConfig::reference());
        let g = cfg.geometry().unwrap();
        assert_eq!(g.elements(), 64);
        assert!((g.pitch() - 1540.0 / (2.0 * 2.7e6)).abs() < 1e-15);
        assert_eq!(cfg.mv(), MvConfig::for_elements(64));
        assert_eq!(cfg.train(0).adam.lr, 3e-5);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig {
            phantom: PhantomSpec::Cyst {
                r_min_mm: 5.0,
                r_max_mm: 60.0,
                half_span_deg: 30.0,
                center_depth_mm: 35.0,
                center_angle_deg: 2.5,
                radius_mm: 4.0,
                density_per_cm2: 400.0,
            },
            simulation: SimulationSpec {
                snr_db: None,
                ..SimulationSpec::default()
            },
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"geometry": {"elemnts": 3}}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"energy_fraction": 1.5}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"mv": {"subaperture": 65}}"#).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn phantoms_build() {
        assert!(PhantomSpec::Empty.build(0).unwrap().is_empty());
        assert_eq!(PhantomSpec::default().build(0).unwrap().len(), 9);
    }
}
