//! Sub-sampling schemes, degraded channel reconstruction and assembly of
//! three-angle training cubes.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::beamform::fourier::{degraded_reconstruct, dft_coeffs, subnyquist_select, SpectrumSet};
use crate::beamform::qtable::{fd_time_align, fd_time_align_exact, QTable};
use crate::beamform::{mv_line, MvConfig};
use crate::error::{invalid, shape, Error, Result};
use crate::geometry::{AcquisitionConfig, ArrayGeometry, BeamLine, RfFrame};
use crate::neural::Tensor3;
use crate::simulate::PulseSpec;

/// Line length of the reference acquisition.
pub const REFERENCE_SAMPLES: usize = 1918;
/// Coefficients kept per line by the 5-fold temporal scheme at the reference length.
pub const X5_COEFFICIENTS: usize = 400;
/// Coefficients kept per line by the 9-fold temporal scheme at the reference length.
pub const X9_COEFFICIENTS: usize = 220;
/// Elements kept by the default sparse receive aperture.
pub const SPARSE_ELEMENTS: usize = 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeLabel {
    Full,
    X5,
    X9,
    X11,
}

impl SchemeLabel {
    pub const ALL: [SchemeLabel; 4] = [SchemeLabel::Full, SchemeLabel::X5, SchemeLabel::X9, SchemeLabel::X11];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeLabel::Full => "full",
            SchemeLabel::X5 => "x5",
            SchemeLabel::X9 => "x9",
            SchemeLabel::X11 => "x11",
        }
    }
}

impl fmt::Display for SchemeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown scheme '{s}' (expected full, x5, x9 or x11)")))
    }
}

/// Retained temporal coefficients and receive elements.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingScheme {
    pub label: SchemeLabel,
    pub samples: usize,
    pub elements: usize,
    /// Contiguous spectral coefficients kept per channel.
    pub temporal_k: usize,
    /// Sorted receive elements that are kept.
    pub kept_elements: Vec<usize>,
}

impl SamplingScheme {
    /// The scheme's coefficient budget, scaled by `samples / 1918` for other
    /// line lengths. `x11` needs the 64-element sparse pattern.
    pub fn new(label: SchemeLabel, samples: usize, elements: usize) -> Result<Self> {
        if samples < 2 || elements == 0 {
            return Err(invalid(format!(
                "cannot sub-sample {elements} channels of {samples} samples"
            )));
        }
        let half = samples / 2 + 1;
        let scaled = |k: usize| {
            ((samples * k) as f64 / REFERENCE_SAMPLES as f64)
                .round()
                .clamp(1.0, half as f64) as usize
        };
        let (temporal_k, kept_elements) = match label {
            SchemeLabel::Full => (half, (0..elements).collect()),
            SchemeLabel::X5 => (scaled(X5_COEFFICIENTS), (0..elements).collect()),
            SchemeLabel::X9 => (scaled(X9_COEFFICIENTS), (0..elements).collect()),
            SchemeLabel::X11 => (scaled(X5_COEFFICIENTS), default_sparse_pattern(elements)?),
        };
        Ok(Self {
            label,
            samples,
            elements,
            temporal_k,
            kept_elements,
        })
    }

    /// Real samples retained per kept element: the full line for the
    /// Nyquist-rate scheme, one per kept coefficient otherwise.
    pub fn retained_per_element(&self) -> usize {
        match self.label {
            SchemeLabel::Full => self.samples,
            _ => self.temporal_k,
        }
    }

    /// Full-frame value count over retained value count.
    pub fn reduction_factor(&self) -> f64 {
        (self.samples * self.elements) as f64 / (self.retained_per_element() * self.kept_elements.len()) as f64
    }

    /// Spectral indices retained by this scheme for a pulse at `pulse`.
    pub fn band(&self, pulse: &PulseSpec, sampling_hz: f64) -> Result<Vec<usize>> {
        let all = SpectrumSet {
            coeffs: Vec::new(),
            kept: (0..self.samples / 2 + 1).collect(),
            samples: self.samples,
            sampling_hz,
        };
        Ok(subnyquist_select(&all, self.temporal_k, pulse)?.spectra.kept)
    }
}

/// 27 of 64 elements: eight-element dense flanks, a sparse core with
/// stride 4 mirrored about the array center, and one central element.
/// Apart from the central element the set is symmetric under `m -> 63 - m`.
pub fn default_sparse_pattern(elements: usize) -> Result<Vec<usize>> {
    if elements != 64 {
        return Err(invalid(format!(
            "the sparse pattern is defined for 64 elements, not {elements}"
        )));
    }
    let mut kept: Vec<usize> = (0..8).chain(56..64).collect();
    for m in [11, 15, 19, 23, 27] {
        kept.push(m);
        kept.push(63 - m);
    }
    kept.push(31);
    kept.sort_unstable();
    Ok(kept)
}

/// Zero-fills the channels of omitted elements in every angle.
pub fn spatial_subsample(frame: &mut RfFrame, kept_elements: &[usize]) -> Result<()> {
    if kept_elements.is_empty() {
        return Err(invalid("at least one element must be kept"));
    }
    if let Some(&m) = kept_elements.iter().find(|&&m| m >= frame.elements()) {
        return Err(invalid(format!(
            "element {m} outside a {}-element frame",
            frame.elements()
        )));
    }
    let mut keep = vec![false; frame.elements()];
    kept_elements.iter().for_each(|&m| keep[m] = true);
    for a in 0..frame.n_angles() {
        for (m, &k) in keep.iter().enumerate() {
            if !k {
                frame.channel_mut(a, m).fill(0.0);
            }
        }
    }
    Ok(())
}

/// One distortion table per angle covering exactly the scheme's band.
pub fn build_scheme_tables(
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    scheme: &SamplingScheme,
    pulse: &PulseSpec,
    energy_fraction: f64,
) -> Result<Vec<QTable>> {
    let band = scheme.band(pulse, config.sampling_hz)?;
    (0..config.n_angles())
        .map(|a| QTable::build_rows(geometry, config, a, energy_fraction, &band))
        .collect()
}

/// Degraded per-element channels and the mean share of alignment terms
/// whose source coefficient was discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradedFrame {
    pub frame: RfFrame,
    pub dropped_fraction: f64,
}

/// Per angle and element: spectrum, band selection, frequency-domain
/// alignment, zero-filled inverse transform; then element omission.
/// `tables = None` aligns with the untruncated operator.
pub fn make_degraded_channels(
    frame: &RfFrame,
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    scheme: &SamplingScheme,
    tables: Option<&[QTable]>,
    pulse: &PulseSpec,
) -> Result<DegradedFrame> {
    frame.check(geometry, config)?;
    let (n_angles, m, n) = (frame.n_angles(), frame.elements(), frame.samples());
    if scheme.samples != n || scheme.elements != m {
        return Err(shape(format!(
            "scheme for {}x{} channels applied to {m}x{n}",
            scheme.elements, scheme.samples
        )));
    }
    if let Some(t) = tables {
        if t.len() != n_angles {
            return Err(Error::Config(format!(
                "{} distortion tables for {n_angles} angles",
                t.len()
            )));
        }
        for (a, table) in t.iter().enumerate() {
            if table.samples() != n || table.elements() != m || table.theta() != config.angles[a] {
                return Err(Error::Config(format!(
                    "distortion table {a} was built for another configuration"
                )));
            }
        }
    }
    let per_angle: Vec<(Vec<f64>, f64)> = (0..n_angles)
        .into_par_iter()
        .map(|a| {
            let spectra = dft_coeffs(frame.angle(a), m, config.sampling_hz)?;
            let selected = subnyquist_select(&spectra, scheme.temporal_k, pulse)?.spectra;
            let aligned = match tables {
                Some(t) => fd_time_align(&selected, &t[a])?,
                None => fd_time_align_exact(&selected, geometry, config, a)?,
            };
            let mut out = Vec::with_capacity(m * n);
            for row in &aligned.spectra.coeffs {
                out.extend(degraded_reconstruct(row, &aligned.spectra.kept, n)?);
            }
            Ok((out, aligned.dropped_fraction))
        })
        .collect::<Result<_>>()?;
    let dropped_fraction = per_angle.iter().map(|p| p.1).sum::<f64>() / n_angles as f64;
    let data = per_angle.into_iter().flat_map(|p| p.0).collect();
    let mut degraded = RfFrame::from_vec(n_angles, m, n, data)?;
    if scheme.kept_elements.len() != m {
        spatial_subsample(&mut degraded, &scheme.kept_elements)?;
    }
    Ok(DegradedFrame {
        frame: degraded,
        dropped_fraction,
    })
}

/// Minimum-variance lines of a fully sampled frame, one per angle.
pub fn mv_targets(
    frame: &RfFrame,
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    mv: &MvConfig,
) -> Result<Vec<BeamLine>> {
    (0..config.n_angles())
        .map(|a| mv_line(frame, a, geometry, config, mv))
        .collect()
}

/// Arrangement of a three-angle cube in the network input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CubeLayout {
    /// `[depth x elements x angles]`; pooled along depth and elements.
    #[default]
    ElementsD2,
    /// `[depth x angles x elements]`; pooled along depth only.
    AnglesD2,
}

impl CubeLayout {
    pub fn as_str(&self) -> &'static str {
        match self {
            CubeLayout::ElementsD2 => "elements-d2",
            CubeLayout::AnglesD2 => "angles-d2",
        }
    }

    /// Network input channels for `elements` receive channels.
    pub fn in_channels(&self, elements: usize) -> usize {
        match self {
            CubeLayout::ElementsD2 => 3,
            CubeLayout::AnglesD2 => elements,
        }
    }

    pub fn pool_lateral(&self) -> bool {
        matches!(self, CubeLayout::ElementsD2)
    }
}

impl FromStr for CubeLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elements-d2" => Ok(CubeLayout::ElementsD2),
            "angles-d2" => Ok(CubeLayout::AnglesD2),
            _ => Err(invalid(format!(
                "unknown layout '{s}' (expected elements-d2 or angles-d2)"
            ))),
        }
    }
}

/// Network input for interior angle `a`: angles `a-1, a, a+1`.
pub fn cube_input(degraded: &RfFrame, a: usize, layout: CubeLayout) -> Result<Tensor3> {
    let (n_angles, m, n) = (degraded.n_angles(), degraded.elements(), degraded.samples());
    if a == 0 || a + 1 >= n_angles {
        return Err(invalid(format!(
            "angle {a} has no neighbours on both sides among {n_angles}"
        )));
    }
    let mut t = match layout {
        CubeLayout::ElementsD2 => Tensor3::zeros(n, m, 3),
        CubeLayout::AnglesD2 => Tensor3::zeros(n, 3, m),
    };
    for c in 0..3 {
        for e in 0..m {
            let ch = degraded.channel(a + c - 1, e);
            for (i, &v) in ch.iter().enumerate() {
                match layout {
                    CubeLayout::ElementsD2 => t.set(i, e, c, v),
                    CubeLayout::AnglesD2 => t.set(i, c, e, v),
                }
            }
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub input: Tensor3,
    pub target: BeamLine,
    pub angle_index: usize,
}

/// One sample per interior angle; the edge angles yield none.
pub fn slice_cubes(degraded: &RfFrame, targets: &[BeamLine], layout: CubeLayout) -> Result<Vec<TrainingSample>> {
    let n_angles = degraded.n_angles();
    if n_angles < 3 {
        return Err(invalid(format!("need at least 3 angles, got {n_angles}")));
    }
    if targets.len() != n_angles {
        return Err(shape(format!("{} targets for {n_angles} angles", targets.len())));
    }
    (1..n_angles - 1)
        .map(|a| {
            if targets[a].len() != degraded.samples() {
                return Err(shape(format!("target {a} has {} samples", targets[a].len())));
            }
            Ok(TrainingSample {
                input: cube_input(degraded, a, layout)?,
                target: targets[a].clone(),
                angle_index: a,
            })
        })
        .collect()
}

/// Divides inputs and targets by the largest target magnitude and returns
/// that scale.
pub fn normalize_dataset(samples: &mut [TrainingSample]) -> Result<f64> {
    let peak = samples
        .iter()
        .flat_map(|s| s.target.samples.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(invalid("dataset targets are all zero"));
    }
    scale_samples(samples, 1.0 / peak);
    Ok(peak)
}

/// Restores the original amplitudes of a normalized dataset.
pub fn denormalize_dataset(samples: &mut [TrainingSample], scale: f64) {
    scale_samples(samples, scale);
}

fn scale_samples(samples: &mut [TrainingSample], factor: f64) {
    if factor == 1.0 {
        return;
    }
    for s in samples {
        s.input.data_mut().iter_mut().for_each(|v| *v *= factor);
        s.target.samples.iter_mut().for_each(|v| *v *= factor);
    }
}
