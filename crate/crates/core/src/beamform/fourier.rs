//! Fourier-series coefficients of real channel data, sub-Nyquist band
//! selection and the zero-filled inverse transform used to bring partial
//! spectra back to the time domain.
//!
//! Normalization: forward coefficients carry `1/N`, the inverse transform is
//! unnormalized, so a full spectrum inverts to the original samples.

use num_complex::Complex64;

use crate::error::{invalid, shape, Result};
use crate::fft;
use crate::simulate::PulseSpec;

/// Per-element coefficients on a shared set of non-negative indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSet {
    /// `coeffs[m][i]` is `c_m[kept[i]]`.
    pub coeffs: Vec<Vec<Complex64>>,
    /// Sorted, unique indices in `[0, N/2]`.
    pub kept: Vec<usize>,
    /// Length of the original real signals.
    pub samples: usize,
    pub sampling_hz: f64,
}

impl SpectrumSet {
    pub fn elements(&self) -> usize {
        self.coeffs.len()
    }

    /// Position of index `k` in `kept`, if present.
    pub fn position(&self, k: usize) -> Option<usize> {
        self.kept.binary_search(&k).ok()
    }

    /// Retained real values per element: one per real-valued bin (DC and
    /// Nyquist), two per complex bin.
    pub fn stored_values_per_element(&self) -> usize {
        self.kept.len()
    }
}

/// Largest non-negative index of a real length-`n` spectrum.
pub fn half_spectrum_len(n: usize) -> usize {
    n / 2 + 1
}

/// `c_m[k] = (1/N) sum_j phi_m[j] e^{-2 pi i k j / N}` for `k = 0..=N/2`.
pub fn dft_coeffs(channels: &[f64], elements: usize, sampling_hz: f64) -> Result<SpectrumSet> {
    if elements == 0 || !channels.len().is_multiple_of(elements) {
        return Err(shape(format!(
            "{} values do not split into {elements} channels",
            channels.len()
        )));
    }
    let n = channels.len() / elements;
    let half = half_spectrum_len(n);
    let coeffs = channels
        .chunks_exact(n)
        .map(|x| {
            let mut full = fft::forward(x);
            full.truncate(half);
            full
        })
        .collect();
    Ok(SpectrumSet {
        coeffs,
        kept: (0..half).collect(),
        samples: n,
        sampling_hz,
    })
}

/// Result of a band selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub spectra: SpectrumSet,
    /// Set when the requested count exceeded the available band.
    pub clipped: Option<String>,
}

/// Keeps the `count` contiguous indices centered on the pulse's spectral
/// peak `round(f_c N / f_s)`, shifted inward if the band would leave the
/// currently kept range.
pub fn subnyquist_select(spectra: &SpectrumSet, count: usize, pulse: &PulseSpec) -> Result<Selection> {
    if count == 0 {
        return Err(invalid("sub-Nyquist selection needs at least one coefficient"));
    }
    let available = spectra.kept.len();
    let mut clipped = None;
    let count = if count > available {
        clipped = Some(format!("requested {count} coefficients, only {available} available"));
        available
    } else {
        count
    };
    let center = (pulse.carrier_hz * spectra.samples as f64 / spectra.sampling_hz).round() as usize;
    // Position of the kept index closest to the center.
    let pos = match spectra.kept.binary_search(&center) {
        Ok(p) => p,
        Err(p) => {
            if p == 0 {
                0
            } else if p >= available {
                available - 1
            } else if spectra.kept[p] - center < center - spectra.kept[p - 1] {
                p
            } else {
                p - 1
            }
        }
    };
    let start = pos.saturating_sub(count / 2).min(available - count);
    let range = start..start + count;
    let kept = spectra.kept[range.clone()].to_vec();
    let coeffs = spectra.coeffs.iter().map(|c| c[range.clone()].to_vec()).collect();
    Ok(Selection {
        spectra: SpectrumSet {
            coeffs,
            kept,
            samples: spectra.samples,
            sampling_hz: spectra.sampling_hz,
        },
        clipped,
    })
}

/// Beam coefficients `c[k] = (1/M) sum_m c^_m[k]` on the aligned index set.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpectrum {
    pub coeffs: Vec<Complex64>,
    pub kept: Vec<usize>,
    pub samples: usize,
}

pub fn fd_beamform(aligned: &SpectrumSet) -> BeamSpectrum {
    let m = aligned.elements() as f64;
    let coeffs = (0..aligned.kept.len())
        .map(|i| aligned.coeffs.iter().map(|row| row[i]).sum::<Complex64>() / m)
        .collect();
    BeamSpectrum {
        coeffs,
        kept: aligned.kept.clone(),
        samples: aligned.samples,
    }
}

/// Embeds coefficients at `kept` into a length-`n` spectrum, restores the
/// negative half by conjugate symmetry, inverts and returns the real part.
pub fn degraded_reconstruct(coeffs: &[Complex64], kept: &[usize], n: usize) -> Result<Vec<f64>> {
    if coeffs.len() != kept.len() {
        return Err(shape(format!(
            "{} coefficients for {} indices",
            coeffs.len(),
            kept.len()
        )));
    }
    let half = half_spectrum_len(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (&k, &c) in kept.iter().zip(coeffs) {
        if k >= half {
            return Err(invalid(format!(
                "index {k} outside the non-negative half of a length-{n} spectrum"
            )));
        }
        buf[k] = c;
        if k != 0 && 2 * k != n {
            buf[n - k] = c.conj();
        }
    }
    fft::inverse_in_place(&mut buf);
    Ok(buf.iter().map(|c| c.re).collect())
}
