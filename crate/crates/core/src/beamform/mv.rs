//! Minimum-variance (Capon) beamforming with spatial smoothing over
//! subapertures, temporal averaging and relative diagonal loading.

use rayon::prelude::*;

use crate::beamform::time::AlignedCube;
use crate::error::{invalid, Result};
use crate::geometry::BeamLine;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvConfig {
    /// Subaperture length `L`.
    pub subaperture: usize,
    /// Temporal averaging window in samples (odd).
    pub window: usize,
    /// Diagonal loading relative to `trace(R) / L`.
    pub loading: f64,
}

impl MvConfig {
    /// `L = M/2`, 15-sample window, 1% loading.
    pub fn for_elements(elements: usize) -> Self {
        Self {
            subaperture: (elements / 2).max(1),
            window: 15,
            loading: 0.01,
        }
    }

    pub fn validate(&self, elements: usize) -> Result<()> {
        if self.subaperture == 0 || self.subaperture > elements {
            return Err(invalid(format!(
                "subaperture {} must lie in [1, {elements}]",
                self.subaperture
            )));
        }
        if self.window.is_multiple_of(2) {
            return Err(invalid("temporal window must be odd"));
        }
        if !(self.loading > 0.0) {
            return Err(invalid("diagonal loading must be positive"));
        }
        Ok(())
    }
}

/// Packed upper triangle index for an `l x l` symmetric matrix.
#[inline]
fn tri(l: usize, a: usize, b: usize) -> usize {
    a * l - a * (a + 1) / 2 + b
}

/// Sum of subaperture outer products at one depth, packed upper triangle.
fn instantaneous_covariance(row: &[f64], l: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let subapertures = row.len() - l + 1;
    for p in 0..subapertures {
        let x = &row[p..p + l];
        for a in 0..l {
            let xa = x[a];
            let base = tri(l, a, a);
            for (k, &xb) in x[a..].iter().enumerate() {
                out[base + k] += xa * xb;
            }
        }
    }
}

/// Solves `A y = 1` for symmetric positive-definite `A` (packed upper
/// triangle) by Cholesky factorization. Returns `None` if `A` is not PD.
fn solve_ones(packed: &[f64], l: usize) -> Option<Vec<f64>> {
    // Dense lower factor, row-major.
    let mut chol = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..=i {
            let mut s = packed[tri(l, j, i)];
            for k in 0..j {
                s -= chol[i * l + k] * chol[j * l + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                chol[i * l + i] = s.sqrt();
            } else {
                chol[i * l + j] = s / chol[j * l + j];
            }
        }
    }
    let mut y = vec![1.0; l];
    for i in 0..l {
        let mut s = y[i];
        for k in 0..i {
            s -= chol[i * l + k] * y[k];
        }
        y[i] = s / chol[i * l + i];
    }
    for i in (0..l).rev() {
        let mut s = y[i];
        for k in i + 1..l {
            s -= chol[k * l + i] * y[k];
        }
        y[i] = s / chol[i * l + i];
    }
    Some(y)
}

/// Minimum-variance beamformed line with steering vector of ones.
///
/// Weights are `R~^{-1} 1 / (1^T R~^{-1} 1)` with
/// `R~ = R + loading * trace(R) / L * I`, where `R` sums subaperture outer
/// products over the temporal window centered at each depth. The output is
/// the weighted mean of the subaperture vectors. The weights do not depend on
/// the overall scale of `R`, so the averaging normalizations are omitted.
pub fn mv_beamform(aligned: &AlignedCube, cfg: &MvConfig) -> Result<BeamLine> {
    let m = aligned.elements;
    cfg.validate(m)?;
    let l = cfg.subaperture;
    let n = aligned.samples;
    let packed_len = l * (l + 1) / 2;
    let subapertures = m - l + 1;
    let half = cfg.window / 2;

    let instantaneous: Vec<f64> = {
        let mut buf = vec![0.0; n * packed_len];
        buf.par_chunks_mut(packed_len)
            .enumerate()
            .for_each(|(j, out)| instantaneous_covariance(aligned.row(j), l, out));
        buf
    };

    let samples: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let lo = j.saturating_sub(half);
            let hi = (j + half).min(n - 1);
            let mut r = vec![0.0; packed_len];
            for k in lo..=hi {
                let src = &instantaneous[k * packed_len..(k + 1) * packed_len];
                r.iter_mut().zip(src).for_each(|(d, s)| *d += s);
            }
            let trace: f64 = (0..l).map(|a| r[tri(l, a, a)]).sum();
            if !(trace > 0.0) {
                return 0.0;
            }
            let load = cfg.loading * trace / l as f64;
            for a in 0..l {
                r[tri(l, a, a)] += load;
            }
            let Some(y) = solve_ones(&r, l) else {
                return 0.0;
            };
            let norm: f64 = y.iter().sum();
            let row = aligned.row(j);
            let mut out = 0.0;
            for p in 0..subapertures {
                let x = &row[p..p + l];
                out += x.iter().zip(&y).map(|(xi, yi)| xi * (yi / norm)).sum::<f64>();
            }
            out / subapertures as f64
        })
        .collect();

    let line = BeamLine::new(samples, aligned.angle);
    debug_assert!(line.samples.iter().all(|v| v.is_finite()));
    Ok(line)
}
