//! B-mode display chain: envelope detection, log compression and sector scan
//! conversion.

use num_complex::Complex64;

use crate::fft;
use crate::geometry::AcquisitionConfig;

/// Magnitude of the analytic signal, with the Hilbert transform computed in
/// the frequency domain (negative frequencies zeroed, positive doubled).
pub fn envelope(line: &[f64]) -> Vec<f64> {
    let n = line.len();
    if n == 0 {
        return Vec::new();
    }
    let mut spec: Vec<Complex64> = line.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::plan_forward(n).process(&mut spec);
    // Bins 1..ceil(n/2) are positive frequencies; the Nyquist bin (even n) is kept once.
    let positive_end = n.div_ceil(2);
    for c in spec.iter_mut().take(positive_end).skip(1) {
        *c *= 2.0;
    }
    let negative_start = if n.is_multiple_of(2) { n / 2 + 1 } else { positive_end };
    for c in spec.iter_mut().skip(negative_start) {
        *c = Complex64::new(0.0, 0.0);
    }
    fft::inverse_in_place(&mut spec);
    let s = 1.0 / n as f64;
    spec.iter().map(|c| c.norm() * s).collect()
}

/// `clamp(1 + 20 log10(env / max) / DR, 0, 1)`; an all-zero input stays zero.
pub fn log_compress(env: &[f64], dynamic_range_db: f64) -> Vec<f64> {
    let peak = env.iter().fold(0.0f64, |m, &v| m.max(v));
    log_compress_with_peak(env, peak, dynamic_range_db)
}

/// Log compression against an externally supplied peak, so several lines of
/// one image share a reference.
pub fn log_compress_with_peak(env: &[f64], peak: f64, dynamic_range_db: f64) -> Vec<f64> {
    if !(peak > 0.0) {
        return vec![0.0; env.len()];
    }
    env.iter()
        .map(|&v| {
            if v <= 0.0 {
                return 0.0;
            }
            (1.0 + 20.0 * (v / peak).log10() / dynamic_range_db).clamp(0.0, 1.0)
        })
        .collect()
}

/// B-mode image from beamformed lines: per-line envelope, then log
/// compression against the image-wide peak. Row-major `[line][sample]`.
pub fn bmode(lines: &[Vec<f64>], dynamic_range_db: f64) -> Vec<f64> {
    let envs: Vec<Vec<f64>> = lines.iter().map(|l| envelope(l)).collect();
    let peak = envs.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    envs.iter()
        .flat_map(|e| log_compress_with_peak(e, peak, dynamic_range_db))
        .collect()
}

/// Cartesian raster in the imaging plane, row-major `[z][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub x0: f64,
    pub dx: f64,
    pub z0: f64,
    pub dz: f64,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn position(&self, row: usize, col: usize) -> (f64, f64) {
        (self.x0 + col as f64 * self.dx, self.z0 + row as f64 * self.dz)
    }
}

/// Bilinear resampling of a polar image `[angle][sample]` onto a
/// `width x height` grid covering the sector. Angles must be increasing and
/// uniformly spaced; pixels outside the sector are zero.
pub fn scan_convert(polar: &[f64], config: &AcquisitionConfig, width: usize, height: usize) -> Raster {
    let n_angles = config.n_angles();
    let n = config.samples;
    assert_eq!(polar.len(), n_angles * n, "polar image does not match configuration");
    let r_max = config.depth_of_sample((n - 1) as f64);
    let th0 = config.angles[0];
    let th1 = config.angles[n_angles - 1];
    let x_extent = r_max * th0.sin().abs().max(th1.sin().abs());
    let x0 = -x_extent;
    let dx = if width > 1 {
        2.0 * x_extent / (width - 1) as f64
    } else {
        0.0
    };
    let dz = if height > 1 { r_max / (height - 1) as f64 } else { 0.0 };
    let dr = config.axial_spacing();
    let dth = if n_angles > 1 {
        (th1 - th0) / (n_angles - 1) as f64
    } else {
        0.0
    };

    let mut data = vec![0.0; width * height];
    for row in 0..height {
        let z = row as f64 * dz;
        for col in 0..width {
            let x = x0 + col as f64 * dx;
            let r = x.hypot(z);
            let th = x.atan2(z);
            let fr = r / dr;
            if fr > (n - 1) as f64 {
                continue;
            }
            let fa = if n_angles > 1 { (th - th0) / dth } else { 0.0 };
            let tol = 1e-9;
            if fa < -tol || fa > (n_angles - 1) as f64 + tol {
                continue;
            }
            let fa = fa.clamp(0.0, (n_angles - 1) as f64);
            let a0 = (fa.floor() as usize).min(n_angles.saturating_sub(2));
            let wa = if n_angles > 1 { fa - a0 as f64 } else { 0.0 };
            let r0 = (fr.floor() as usize).min(n - 2);
            let wr = fr - r0 as f64;
            let a1 = (a0 + 1).min(n_angles - 1);
            let v00 = polar[a0 * n + r0];
            let v01 = polar[a0 * n + r0 + 1];
            let v10 = polar[a1 * n + r0];
            let v11 = polar[a1 * n + r0 + 1];
            let v0 = v00 + wr * (v01 - v00);
            let v1 = v10 + wr * (v11 - v10);
            data[row * width + col] = v0 + wa * (v1 - v0);
        }
    }
    Raster {
        width,
        height,
        x0,
        dx,
        z0: 0.0,
        dz,
        data,
    }
}
