//! Image-quality measures: FWHM of point targets, contrast-to-noise ratio,
//! structural similarity and normalized RMS error.

use crate::beamform::display::Raster;
use crate::error::{invalid, shape, Error, Result};
use crate::geometry::AcquisitionConfig;
use crate::simulate::to_cartesian;

/// `||x - ref|| / ||ref||`.
pub fn nrmse(x: &[f64], reference: &[f64]) -> Result<f64> {
    if x.len() != reference.len() {
        return Err(shape(format!(
            "{} values against a reference of {}",
            x.len(),
            reference.len()
        )));
    }
    let den: f64 = reference.iter().map(|v| v * v).sum();
    if !(den > 0.0) {
        return Err(invalid("reference has zero norm"));
    }
    let num: f64 = x.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((num / den).sqrt())
}

/// Full width at half maximum of a non-negative profile, in units of
/// `spacing`. Half-maximum crossings on both sides of the global peak are
/// located by linear interpolation.
pub fn fwhm(profile: &[f64], spacing: f64) -> Result<f64> {
    let (peak_idx, peak) =
        profile.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            },
        );
    if !(peak > 0.0) {
        return Err(Error::MeasurementUndefined("profile has no positive peak".into()));
    }
    let half = 0.5 * peak;
    let left = (0..peak_idx)
        .rev()
        .find(|&i| profile[i] <= half)
        .map(|i| i as f64 + (half - profile[i]) / (profile[i + 1] - profile[i]));
    let right = (peak_idx + 1..profile.len())
        .find(|&i| profile[i] <= half)
        .map(|i| i as f64 - (half - profile[i]) / (profile[i - 1] - profile[i]));
    match (left, right) {
        (Some(l), Some(r)) => Ok((r - l) * spacing),
        _ => Err(Error::MeasurementUndefined(
            "half maximum not reached on both sides of the peak".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResolution {
    pub lateral_mm: f64,
    pub axial_mm: f64,
}

/// Lateral and axial FWHM in millimetres of a point target, measured on
/// per-angle envelopes `[angle][sample]`. The peak is searched within
/// `search` angles and samples of the nominal position; profiles extend
/// `half_window` angles laterally and samples axially around the peak.
pub fn point_resolution(
    envelopes: &[Vec<f64>],
    config: &AcquisitionConfig,
    angles: &[f64],
    depth: f64,
    angle: f64,
    search: usize,
    half_window: (usize, usize),
) -> Result<PointResolution> {
    if envelopes.len() != angles.len() || angles.len() < 2 {
        return Err(shape("need one envelope per angle and at least two angles"));
    }
    let n = envelopes[0].len();
    let j0 = (depth / config.axial_spacing()).round() as isize;
    let a0 = angles
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - angle).abs().total_cmp(&(y.1 - angle).abs()))
        .map(|p| p.0)
        .expect("non-empty") as isize;
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for a in (a0 - search as isize).max(0)..=(a0 + search as isize).min(angles.len() as isize - 1) {
        for j in (j0 - search as isize).max(0)..=(j0 + search as isize).min(n as isize - 1) {
            let v = envelopes[a as usize][j as usize];
            if v > best.2 {
                best = (a as usize, j as usize, v);
            }
        }
    }
    let (pa, pj, _) = best;
    let (wa, wj) = half_window;
    let lat: Vec<f64> = (pa.saturating_sub(wa)..=(pa + wa).min(angles.len() - 1))
        .map(|a| envelopes[a][pj])
        .collect();
    let ax: Vec<f64> = envelopes[pa][pj.saturating_sub(wj)..=(pj + wj).min(n - 1)].to_vec();
    let dtheta = (angles[angles.len() - 1] - angles[0]) / (angles.len() - 1) as f64;
    let r = pj as f64 * config.axial_spacing();
    Ok(PointResolution {
        lateral_mm: fwhm(&lat, r * dtheta * 1e3)?,
        axial_mm: fwhm(&ax, config.axial_spacing() * 1e3)?,
    })
}

/// Region of a scan-converted image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionSpec {
    /// Pixel-space disk.
    Disk { row: f64, col: f64, radius: f64 },
    /// Disk centred at polar position `(r, theta)`, radius in metres.
    PolarDisk { r: f64, theta: f64, radius: f64 },
    /// Annulus around a polar position, radii in metres.
    PolarRing { r: f64, theta: f64, inner: f64, outer: f64 },
    /// Polar rectangle in range and angle.
    SectorRect {
        r_min: f64,
        r_max: f64,
        theta_min: f64,
        theta_max: f64,
    },
}

impl RegionSpec {
    pub fn contains(&self, image: &Raster, row: usize, col: usize) -> bool {
        let (x, z) = image.position(row, col);
        let near = |r: f64, theta: f64| {
            let (cx, cz) = to_cartesian(r, theta);
            (x - cx).hypot(z - cz)
        };
        match *self {
            RegionSpec::Disk {
                row: r0,
                col: c0,
                radius,
            } => (row as f64 - r0).hypot(col as f64 - c0) <= radius,
            RegionSpec::PolarDisk { r, theta, radius } => near(r, theta) <= radius,
            RegionSpec::PolarRing { r, theta, inner, outer } => {
                let d = near(r, theta);
                d >= inner && d <= outer
            }
            RegionSpec::SectorRect {
                r_min,
                r_max,
                theta_min,
                theta_max,
            } => {
                let (r, th) = (x.hypot(z), x.atan2(z));
                (r_min..=r_max).contains(&r) && (theta_min..=theta_max).contains(&th)
            }
        }
    }

    pub fn values(&self, image: &Raster) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for row in 0..image.height {
            for col in 0..image.width {
                if self.contains(image, row, col) {
                    out.push(image.at(row, col));
                }
            }
        }
        if out.is_empty() {
            return Err(invalid(format!("region {self:?} covers no pixels")));
        }
        Ok(out)
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `|mu_c - mu_b| / sigma_b` on a log-compressed image.
pub fn cnr(image: &Raster, cyst: &RegionSpec, background: &RegionSpec) -> Result<f64> {
    cnr_values(&cyst.values(image)?, &background.values(image)?)
}

/// CNR from already extracted region samples.
pub fn cnr_values(cyst: &[f64], background: &[f64]) -> Result<f64> {
    if cyst.is_empty() || background.is_empty() {
        return Err(invalid("empty region"));
    }
    let (mc, _) = mean_std(cyst);
    let (mb, sb) = mean_std(background);
    if !(sb > 0.0) {
        return Err(invalid("background has zero variance"));
    }
    Ok((mc - mb).abs() / sb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SsimWindow {
    /// Square window with equal weights.
    Uniform(usize),
    /// `size x size` Gaussian weights with the given standard deviation.
    Gaussian { size: usize, sigma: f64 },
}

impl Default for SsimWindow {
    fn default() -> Self {
        SsimWindow::Uniform(8)
    }
}

/// Mean SSIM over all window positions (stride 1) of two row-major
/// `height x width` images, with `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2` and
/// `L` the value range of `reference` (1 if the reference is constant).
pub fn ssim(x: &[f64], reference: &[f64], width: usize, height: usize, window: SsimWindow) -> Result<f64> {
    let (lo, hi) = reference
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = if hi > lo { hi - lo } else { 1.0 };
    ssim_with_range(x, reference, width, height, range, window)
}

pub fn ssim_with_range(
    x: &[f64],
    y: &[f64],
    width: usize,
    height: usize,
    range: f64,
    window: SsimWindow,
) -> Result<f64> {
    if x.len() != width * height || y.len() != width * height {
        return Err(shape(format!(
            "images of {} and {} values for {width}x{height}",
            x.len(),
            y.len()
        )));
    }
    if !(range > 0.0) {
        return Err(invalid("dynamic range must be positive"));
    }
    let weights = match window {
        SsimWindow::Uniform(s) => vec![1.0 / (s * s) as f64; s * s],
        SsimWindow::Gaussian { size, sigma } => {
            let c = (size as f64 - 1.0) / 2.0;
            let mut w: Vec<f64> = (0..size * size)
                .map(|k| {
                    let (i, j) = ((k / size) as f64 - c, (k % size) as f64 - c);
                    (-(i * i + j * j) / (2.0 * sigma * sigma)).exp()
                })
                .collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            w
        }
    };
    let size = (weights.len() as f64).sqrt() as usize;
    if size == 0 || size > width || size > height {
        return Err(shape(format!(
            "{size}x{size} window does not fit a {width}x{height} image"
        )));
    }
    let c1 = (0.01 * range).powi(2);
    let c2 = (0.03 * range).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..=height - size {
        for q0 in 0..=width - size {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..size {
                let base = (r0 + i) * width + q0;
                for j in 0..size {
                    let w = weights[i * size + j];
                    let (a, b) = (x[base + j], y[base + j]);
                    mx += w * a;
                    my += w * b;
                    sxx += w * a * a;
                    syy += w * b * b;
                    sxy += w * a * b;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cov = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}
