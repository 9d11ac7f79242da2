//! Time-domain alignment and delay-and-sum.

use crate::error::{shape, Result};
use crate::geometry::{delay_tau, AcquisitionConfig, ArrayGeometry, BeamLine, RfFrame};

/// Time-aligned channels of one angle, `data[j * elements + m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedCube {
    pub samples: usize,
    pub elements: usize,
    pub angle: f64,
    pub data: Vec<f64>,
}

impl AlignedCube {
    pub fn new(samples: usize, elements: usize, angle: f64, data: Vec<f64>) -> Result<Self> {
        if data.len() != samples * elements {
            return Err(shape(format!(
                "aligned cube payload {} != {samples}x{elements}",
                data.len()
            )));
        }
        Ok(Self {
            samples,
            elements,
            angle,
            data,
        })
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.elements..(j + 1) * self.elements]
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        (0..self.samples).map(|j| self.data[j * self.elements + m]).collect()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
    }
}

/// Linear-interpolation read of one aligned sample:
/// `lo * x[base] + hi * x[base + 1]`, with taps beyond the record set to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tap {
    pub base: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Tap {
    const ZERO: Tap = Tap {
        base: 0,
        lo: 0.0,
        hi: 0.0,
    };

    #[inline]
    pub fn apply(&self, x: &[f64]) -> f64 {
        let mut v = self.lo * x[self.base];
        if self.hi != 0.0 {
            v += self.hi * x[self.base + 1];
        }
        v
    }
}

/// Interpolation taps realizing `phi_m(tau_m(t_j; theta))` for every output
/// sample, masked by the beam support `[0, T_B]`.
///
/// Delays are evaluated in sample units so the origin element maps sample
/// `j` onto exactly `j`.
pub(crate) fn alignment_taps(delta_m: f64, theta: f64, support: f64, config: &AcquisitionConfig) -> Vec<Tap> {
    let n = config.samples;
    let fs = config.sampling_hz;
    let delta_samples = delta_m * fs / config.sound_speed;
    let last_active = support * fs;
    (0..n)
        .map(|j| {
            if j as f64 > last_active {
                return Tap::ZERO;
            }
            let p = delay_tau(j as f64, theta, delta_samples, 1.0);
            let base = p.floor();
            if !(base >= 0.0) || base > (n - 1) as f64 {
                return Tap::ZERO;
            }
            let base = base as usize;
            let frac = p - base as f64;
            let hi = if base + 1 < n { frac } else { 0.0 };
            Tap {
                base,
                lo: 1.0 - frac,
                hi,
            }
        })
        .collect()
}

/// Aligns the channels of angle `a` onto the origin element's time axis.
pub fn time_align(
    frame: &RfFrame,
    a: usize,
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
) -> Result<AlignedCube> {
    frame.check(geometry, config)?;
    time_align_channels(frame.angle(a), geometry, config, config.angles[a], config.support(a))
}

/// Aligns `[element][sample]` channels for steering angle `theta`.
pub fn time_align_channels(
    channels: &[f64],
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    theta: f64,
    support: f64,
) -> Result<AlignedCube> {
    let n = config.samples;
    let m_count = geometry.elements();
    if channels.len() != n * m_count {
        return Err(shape(format!(
            "{} channel values, expected {m_count}x{n}",
            channels.len()
        )));
    }
    let mut data = vec![0.0; n * m_count];
    for m in 0..m_count {
        let taps = alignment_taps(geometry.offset(m), theta, support, config);
        let x = &channels[m * n..(m + 1) * n];
        for (j, tap) in taps.iter().enumerate() {
            data[j * m_count + m] = tap.apply(x);
        }
    }
    AlignedCube::new(n, m_count, theta, data)
}

/// Unweighted mean of the aligned channels.
pub fn das(aligned: &AlignedCube) -> BeamLine {
    let inv = aligned.elements as f64;
    let samples = (0..aligned.samples)
        .map(|j| aligned.row(j).iter().sum::<f64>() / inv)
        .collect();
    BeamLine::new(samples, aligned.angle)
}
