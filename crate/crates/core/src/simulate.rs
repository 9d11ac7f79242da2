//! Synthetic channel data: point scatterers and speckle phantoms insonified by
//! a Gaussian-windowed pulse, received on every element with the delays of the
//! shared geometry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::geometry::{distance_dm, AcquisitionConfig, ArrayGeometry, RfFrame};

/// Transmit pulse: Gaussian envelope on a cosine carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub carrier_hz: f64,
    /// -6 dB spectral width divided by the carrier, in (0, 1].
    pub fractional_bandwidth: f64,
}

impl PulseSpec {
    pub fn new(carrier_hz: f64, fractional_bandwidth: f64) -> Result<Self> {
        if !(carrier_hz > 0.0) {
            return Err(invalid("pulse carrier must be positive"));
        }
        if !(fractional_bandwidth > 0.0 && fractional_bandwidth <= 1.0) {
            return Err(invalid(format!(
                "fractional bandwidth must be in (0, 1], got {fractional_bandwidth}"
            )));
        }
        Ok(Self {
            carrier_hz,
            fractional_bandwidth,
        })
    }

    /// 60% fractional bandwidth at the given carrier.
    pub fn with_carrier(carrier_hz: f64) -> Self {
        Self {
            carrier_hz,
            fractional_bandwidth: 0.6,
        }
    }

    /// Envelope standard deviation in seconds. The spectrum of
    /// `exp(-t^2 / 2s^2)` falls to half magnitude at `sqrt(2 ln 2) / (2 pi s)`
    /// from the carrier.
    pub fn sigma(&self) -> f64 {
        (2.0 * std::f64::consts::LN_2).sqrt() / (std::f64::consts::PI * self.fractional_bandwidth * self.carrier_hz)
    }
}

/// `g(t) = exp(-t^2 / 2 sigma^2) cos(2 pi f_c t)`.
pub fn pulse_waveform(spec: &PulseSpec, t: f64) -> f64 {
    let s = spec.sigma();
    (-t * t / (2.0 * s * s)).exp() * (2.0 * std::f64::consts::PI * spec.carrier_hz * t).cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    /// Distance from the array origin, meters.
    pub depth: f64,
    /// Direction from the array origin, radians.
    pub angle: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Phantom {
    pub scatterers: Vec<Scatterer>,
    pub description: String,
}

impl Phantom {
    pub fn len(&self) -> usize {
        self.scatterers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }

    /// Union of two phantoms.
    pub fn merged(&self, other: &Phantom) -> Phantom {
        let mut scatterers = self.scatterers.clone();
        scatterers.extend_from_slice(&other.scatterers);
        Phantom {
            scatterers,
            description: format!("{}+{}", self.description, other.description),
        }
    }
}

/// Scatterer model parameters that are not part of the acquisition itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationParams {
    /// Standard deviation of the Gaussian transmit angular sensitivity, radians.
    pub angular_sigma: f64,
    /// Reference depth of the 1/r spreading law, meters.
    pub reference_depth: f64,
    /// Pulse and angular weights are evaluated within this many standard
    /// deviations and treated as zero beyond.
    pub cutoff_sigmas: f64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            angular_sigma: 1.5f64.to_radians(),
            reference_depth: 0.01,
            cutoff_sigmas: 6.0,
        }
    }
}

/// Simulates one frame of channel data.
///
/// For transmit angle `theta` an echo from a scatterer at `(r, theta_s)`
/// reaches element `m` at `r/c + d_m(r/c; theta_s)/c` and is weighted by
/// `exp(-(theta - theta_s)^2 / 2 sigma^2) * r0 / r`. With `snr_db` set, white
/// Gaussian noise is added at that SNR relative to the clean frame RMS, drawn
/// from a ChaCha stream keyed by `(seed, angle, element)`.
pub fn simulate_rf(
    phantom: &Phantom,
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    pulse: &PulseSpec,
    params: &SimulationParams,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<RfFrame> {
    config.validate()?;
    let max_depth = config.max_depth();
    for s in &phantom.scatterers {
        if !(s.depth > 0.0) || s.depth > max_depth {
            return Err(invalid(format!(
                "scatterer at depth {:.4} m lies outside the imaging range (0, {:.4}] m",
                s.depth, max_depth
            )));
        }
        if !s.amplitude.is_finite() || !s.angle.is_finite() {
            return Err(invalid("scatterer parameters must be finite"));
        }
    }

    let m_count = geometry.elements();
    let n = config.samples;
    let c = config.sound_speed;
    let fs = config.sampling_hz;
    let sigma_t = pulse.sigma();
    let half_support = params.cutoff_sigmas * sigma_t;
    let max_dtheta = params.cutoff_sigmas * params.angular_sigma;

    let blocks: Vec<Vec<f64>> = config
        .angles
        .par_iter()
        .map(|&theta| {
            let mut block = vec![0.0; m_count * n];
            for s in &phantom.scatterers {
                let dtheta = theta - s.angle;
                if dtheta.abs() > max_dtheta {
                    continue;
                }
                let weight = (-dtheta * dtheta / (2.0 * params.angular_sigma * params.angular_sigma)).exp()
                    * (params.reference_depth / s.depth)
                    * s.amplitude;
                let t_hit = s.depth / c;
                for (m, row) in block.chunks_exact_mut(n).enumerate() {
                    let t_rx = t_hit + distance_dm(t_hit, s.angle, geometry.offset(m), c) / c;
                    let lo = ((t_rx - half_support) * fs).ceil().max(0.0) as usize;
                    let hi = ((t_rx + half_support) * fs).floor();
                    if hi < 0.0 {
                        continue;
                    }
                    let hi = (hi as usize).min(n - 1);
                    for (j, v) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
                        *v += weight * pulse_waveform(pulse, j as f64 / fs - t_rx);
                    }
                }
            }
            block
        })
        .collect();

    let mut data = Vec::with_capacity(config.n_angles() * m_count * n);
    for b in blocks {
        data.extend(b);
    }
    let mut frame = RfFrame::from_vec(config.n_angles(), m_count, n, data)?;

    if let Some(snr) = snr_db {
        add_noise(&mut frame, snr, seed);
    }
    Ok(frame)
}

fn add_noise(frame: &mut RfFrame, snr_db: f64, seed: u64) {
    let len = frame.data().len();
    let power = frame.data().iter().map(|v| v * v).sum::<f64>() / len as f64;
    let std = power.sqrt() * 10f64.powf(-snr_db / 20.0);
    if std == 0.0 {
        return;
    }
    let samples = frame.samples();
    // One stream per (angle, element) channel so parallel filling is order-free.
    frame
        .data_mut()
        .par_chunks_mut(samples)
        .enumerate()
        .for_each(|(channel, row)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(channel as u64);
            for v in row.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += std * z;
            }
        });
}

/// Cartesian product of depths and angles, all with the same amplitude.
pub fn point_grid_phantom(depths: &[f64], angles: &[f64], amplitude: f64) -> Result<Phantom> {
    if depths.is_empty() || angles.is_empty() {
        return Err(invalid("point grid needs at least one depth and one angle"));
    }
    let scatterers = depths
        .iter()
        .flat_map(|&depth| {
            angles.iter().map(move |&angle| Scatterer {
                depth,
                angle,
                amplitude,
            })
        })
        .collect();
    Ok(Phantom {
        scatterers,
        description: "point-grid".into(),
    })
}

/// Annular sector `r_min <= r <= r_max`, `theta_min <= theta <= theta_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub r_min: f64,
    pub r_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Sector {
    pub fn area(&self) -> f64 {
        0.5 * (self.r_max * self.r_max - self.r_min * self.r_min) * (self.theta_max - self.theta_min)
    }

    pub fn contains(&self, r: f64, theta: f64) -> bool {
        r >= self.r_min && r <= self.r_max && theta >= self.theta_min && theta <= self.theta_max
    }
}

/// Position in the imaging plane, `(x, z)` in meters, of polar point `(r, theta)`.
pub fn to_cartesian(r: f64, theta: f64) -> (f64, f64) {
    (r * theta.sin(), r * theta.cos())
}

/// Speckle phantom with a circular scatterer-free region.
///
/// `round(density * area)` points (density per cm^2) are drawn uniformly over
/// the sector with standard-normal amplitudes; those closer than
/// `cyst_radius` to the cyst center are removed.
pub fn anechoic_cyst_phantom(
    region: &Sector,
    cyst_center: (f64, f64),
    cyst_radius: f64,
    density_per_cm2: f64,
    seed: u64,
) -> Result<Phantom> {
    if !(region.r_min >= 0.0 && region.r_max > region.r_min && region.theta_max > region.theta_min) {
        return Err(invalid("degenerate sector"));
    }
    if !region.contains(cyst_center.0, cyst_center.1) {
        return Err(invalid("cyst center lies outside the phantom region"));
    }
    if !(density_per_cm2 >= 0.0) || !(cyst_radius >= 0.0) {
        return Err(invalid("density and cyst radius must be non-negative"));
    }
    let count = (density_per_cm2 * region.area() * 1e4).round() as usize;
    let (cx, cz) = to_cartesian(cyst_center.0, cyst_center.1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r2_lo = region.r_min * region.r_min;
    let r2_span = region.r_max * region.r_max - r2_lo;
    let mut scatterers = Vec::with_capacity(count);
    for _ in 0..count {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let amplitude: f64 = rng.sample(StandardNormal);
        let depth = (r2_lo + u * r2_span).sqrt();
        let angle = region.theta_min + v * (region.theta_max - region.theta_min);
        let (x, z) = to_cartesian(depth, angle);
        if (x - cx).hypot(z - cz) < cyst_radius || depth <= 0.0 {
            continue;
        }
        scatterers.push(Scatterer {
            depth,
            angle,
            amplitude,
        });
    }
    Ok(Phantom {
        scatterers,
        description: "anechoic-cyst".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_angles;
    use num_complex::Complex64;

    fn small_config(angles: Vec<f64>) -> AcquisitionConfig {
        AcquisitionConfig {
            angles,
            ..AcquisitionConfig::reference()
        }
    }

    #[test]
    fn pulse_peak_and_decay() {
        let p = PulseSpec::with_carrier(2.7e6);
        assert_eq!(pulse_waveform(&p, 0.0), 1.0);
        assert!(pulse_waveform(&p, 1e-4).abs() < 1e-300);
        assert!(pulse_waveform(&p, -1e-4).abs() < 1e-300);
    }

    #[test]
    fn pulse_spectral_width_matches_fractional_bandwidth() {
        let p = PulseSpec::with_carrier(2.7e6);
        // Sample densely over a long window so the DFT bins are fine.
        let fs = 200e6;
        let n = 1 << 16;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| {
                let t = (j as f64 - n as f64 / 2.0) / fs;
                Complex64::new(pulse_waveform(&p, t), 0.0)
            })
            .collect();
        crate::fft::plan_forward(n).process(&mut buf);
        let half = n / 2;
        let mags: Vec<f64> = buf[..half].iter().map(|c| c.norm()).collect();
        let (peak_k, peak) = mags
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        let target = peak / 2.0;
        let cross = |range: &mut dyn Iterator<Item = usize>| -> f64 {
            let mut prev = peak_k;
            for k in range {
                if mags[k] < target {
                    let f = (mags[prev] - target) / (mags[prev] - mags[k]);
                    return prev as f64 + f * (k as f64 - prev as f64);
                }
                prev = k;
            }
            panic!("no crossing");
        };
        let hi = cross(&mut ((peak_k + 1)..half));
        let lo = cross(&mut (0..peak_k).rev());
        let width_hz = (hi - lo) * fs / n as f64;
        let expected = 0.6 * 2.7e6;
        assert!((width_hz - expected).abs() < 0.05 * expected, "width {width_hz}");
        let peak_hz = peak_k as f64 * fs / n as f64;
        assert!((peak_hz - 2.7e6).abs() < 2.0 * fs / n as f64 + 1e4);
    }

    #[test]
    fn empty_phantom_gives_zero_frame() {
        let g = ArrayGeometry::half_wavelength(8, 1540.0, 2.7e6).unwrap();
        let cfg = small_config(vec![0.0, 0.1]);
        let f = simulate_rf(
            &Phantom::default(),
            &g,
            &cfg,
            &PulseSpec::with_carrier(2.7e6),
            &SimulationParams::default(),
            None,
            1,
        )
        .unwrap();
        assert!(f.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn echo_arrives_at_time_of_flight() {
        let g = ArrayGeometry::half_wavelength(65, 1540.0, 2.7e6).unwrap();
        assert_eq!(g.offset(32), 0.0);
        let cfg = small_config(vec![0.0]);
        let ph = point_grid_phantom(&[0.04], &[0.0], 1.0).unwrap();
        let f = simulate_rf(
            &ph,
            &g,
            &cfg,
            &PulseSpec::with_carrier(2.7e6),
            &SimulationParams::default(),
            None,
            0,
        )
        .unwrap();
        let ch = f.channel(0, 32);
        let argmax = (0..ch.len())
            .max_by(|&a, &b| ch[a].abs().total_cmp(&ch[b].abs()))
            .unwrap();
        let expected = (10.9e6f64 * 2.0 * 0.04 / 1540.0).round() as i64;
        assert_eq!(expected, 566);
        assert!((argmax as i64 - expected).abs() <= 1, "peak at {argmax}");
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let g = ArrayGeometry::half_wavelength(8, 1540.0, 2.7e6).unwrap();
        let cfg = small_config(vec![-0.05, 0.0, 0.05]);
        let ph = point_grid_phantom(&[0.03], &[0.0], 1.0).unwrap();
        let run = |seed| {
            simulate_rf(
                &ph,
                &g,
                &cfg,
                &PulseSpec::with_carrier(2.7e6),
                &SimulationParams::default(),
                Some(20.0),
                seed,
            )
            .unwrap()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a, b);
        assert_ne!(a, run(8));
    }

    #[test]
    fn rejects_scatterer_beyond_depth() {
        let g = ArrayGeometry::half_wavelength(8, 1540.0, 2.7e6).unwrap();
        let cfg = small_config(vec![0.0]);
        let ph = point_grid_phantom(&[0.2], &[0.0], 1.0).unwrap();
        let err = simulate_rf(
            &ph,
            &g,
            &cfg,
            &PulseSpec::with_carrier(2.7e6),
            &SimulationParams::default(),
            None,
            0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn superposition_scaling_and_mirror_symmetry() {
        let g = ArrayGeometry::half_wavelength(16, 1540.0, 2.7e6).unwrap();
        let cfg = small_config(uniform_angles(7, 0.1));
        let pulse = PulseSpec::with_carrier(2.7e6);
        let params = SimulationParams::default();
        let a = point_grid_phantom(&[0.02, 0.05], &[-0.03, 0.02], 1.0).unwrap();
        let b = anechoic_cyst_phantom(
            &Sector {
                r_min: 0.03,
                r_max: 0.04,
                theta_min: -0.1,
                theta_max: 0.1,
            },
            (0.035, 0.0),
            0.002,
            20.0,
            3,
        )
        .unwrap();
        let sim = |p: &Phantom, g: &ArrayGeometry| simulate_rf(p, g, &cfg, &pulse, &params, None, 0).unwrap();
        let fa = sim(&a, &g);
        let fb = sim(&b, &g);
        let fab = sim(&a.merged(&b), &g);
        let scale = fab.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for ((x, y), z) in fa.data().iter().zip(fb.data()).zip(fab.data()) {
            assert!((x + y - z).abs() <= 1e-12 * scale);
        }

        let mut scaled = a.clone();
        scaled.scatterers.iter_mut().for_each(|s| s.amplitude *= -2.5);
        let fs = sim(&scaled, &g);
        for (x, y) in fa.data().iter().zip(fs.data()) {
            assert!((-2.5 * x - y).abs() <= 1e-12 * scale);
        }

        let mut mirrored = a.merged(&b);
        mirrored.scatterers.iter_mut().for_each(|s| s.angle = -s.angle);
        let flipped = ArrayGeometry::from_offsets(g.offsets().iter().map(|d| -d).collect()).unwrap();
        let fm = sim(&mirrored, &flipped);
        let na = cfg.n_angles();
        for a_idx in 0..na {
            let lhs = fab.angle(a_idx);
            let rhs = fm.angle(na - 1 - a_idx);
            for (x, y) in lhs.iter().zip(rhs) {
                assert!((x - y).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn point_grid_counts() {
        assert_eq!(point_grid_phantom(&[0.04], &[0.0], 1.0).unwrap().len(), 1);
        let p = point_grid_phantom(&[0.02, 0.04, 0.06], &[-0.1, 0.0, 0.1], 1.0).unwrap();
        assert_eq!(p.len(), 9);
        assert!(p.scatterers.iter().all(|s| s.amplitude == 1.0));
        assert!(point_grid_phantom(&[], &[0.0], 1.0).is_err());
    }

    #[test]
    fn cyst_phantom_counts_and_exclusion() {
        // 4 cm^2 sector: r in [3, 5] cm, span 4 / 8 rad.
        let region = Sector {
            r_min: 0.03,
            r_max: 0.05,
            theta_min: -0.25,
            theta_max: 0.25,
        };
        assert!((region.area() * 1e4 - 4.0).abs() < 1e-12);
        let center = (0.04, 0.0);
        let radius = 0.0015;
        let p = anechoic_cyst_phantom(&region, center, radius, 250.0, 11).unwrap();
        let tol = 3.0 * 1000f64.sqrt();
        assert!((p.len() as f64 - 1000.0).abs() <= tol, "count {}", p.len());
        let (cx, cz) = to_cartesian(center.0, center.1);
        for s in &p.scatterers {
            let (x, z) = to_cartesian(s.depth, s.angle);
            assert!((x - cx).hypot(z - cz) >= radius);
            assert!(region.contains(s.depth, s.angle));
        }
        assert!(anechoic_cyst_phantom(&region, center, radius, 0.0, 1)
            .unwrap()
            .is_empty());
        assert!(anechoic_cyst_phantom(&region, center, 1.0, 250.0, 1)
            .unwrap()
            .is_empty());
        assert!(anechoic_cyst_phantom(&region, (0.07, 0.0), radius, 250.0, 1).is_err());
    }
}
