//! Image-quality figures of a beamformed frame measured against the
//! phantom it was simulated from.

use anyhow::{ensure, Result};
use snb_core::beamform::{bmode, envelope, scan_convert};
use snb_core::metrics::{nrmse, point_resolution, ssim, PointResolution, RegionSpec, SsimWindow};
use snb_core::AcquisitionConfig;

use crate::config::{DisplaySpec, PhantomSpec};
use crate::render;

/// Method/scheme pairs reported by `evaluate`, in output order. The
/// iterative compressed-sensing reconstruction rows of the comparison
/// (three schemes) are not implemented and never appear.
pub const REPORT_ROWS: [(&str, &str); 5] = [
    ("das", "full"),
    ("mv", "full"),
    ("proposed", "x5"),
    ("proposed", "x9"),
    ("proposed", "x11"),
];

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "scheme",
    "lateral_fwhm_mm",
    "axial_fwhm_mm",
    "cnr",
    "ssim_vs_mv",
    "nrmse_vs_mv",
];

/// Method, scheme and scores of one report row.
pub type ReportRow = (String, String, Scores);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scores {
    pub lateral_fwhm_mm: Option<f64>,
    pub axial_fwhm_mm: Option<f64>,
    pub cnr: Option<f64>,
    pub ssim_vs_mv: Option<f64>,
    pub nrmse_vs_mv: Option<f64>,
}

impl Scores {
    pub fn fields(&self, method: &str, scheme: &str) -> Vec<String> {
        vec![
            method.into(),
            scheme.into(),
            render::field(self.lateral_fwhm_mm),
            render::field(self.axial_fwhm_mm),
            render::field(self.cnr),
            render::field(self.ssim_vs_mv),
            render::field(self.nrmse_vs_mv),
        ]
    }
}

/// Acquisition restricted to the interior angles, matching network output.
pub fn interior(config: &AcquisitionConfig) -> AcquisitionConfig {
    let n = config.angles.len();
    AcquisitionConfig {
        angles: config.angles[1..n - 1].to_vec(),
        beam_support: None,
        ..config.clone()
    }
}

/// Lateral and axial FWHM of each grid point; points that cannot be
/// measured (peak near the image edge, profile not falling to half) are
/// skipped.
pub fn point_resolutions(
    lines: &[Vec<f64>],
    config: &AcquisitionConfig,
    depths: &[f64],
    angles: &[f64],
) -> Vec<PointResolution> {
    let envs: Vec<Vec<f64>> = lines.iter().map(|l| envelope(l)).collect();
    let dtheta = (config.angles[config.angles.len() - 1] - config.angles[0]) / (config.angles.len() - 1) as f64;
    let gap = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    };
    let lateral = ((gap(angles) / 2.0 / dtheta).floor() as usize).clamp(2, 16);
    let axial = ((gap(depths) / 2.0 / config.axial_spacing()).floor() as usize).clamp(4, 64);
    let mut out = Vec::new();
    for &d in depths {
        for &t in angles {
            if let Ok(r) = point_resolution(&envs, config, &config.angles, d, t, 2, (lateral, axial)) {
                out.push(r);
            }
        }
    }
    out
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// CNR of a scan-converted B-mode image: a disk of 0.7 cyst radii against
/// a ring from 1.3 to 2 radii around the same centre.
pub fn cyst_cnr(
    lines: &[Vec<f64>],
    config: &AcquisitionConfig,
    display: &DisplaySpec,
    center: (f64, f64),
    radius: f64,
) -> Result<f64> {
    let img = bmode(lines, display.dynamic_range_db);
    let raster = scan_convert(&img, config, display.raster_width, display.raster_height);
    let (r, theta) = center;
    Ok(snb_core::metrics::cnr(
        &raster,
        &RegionSpec::PolarDisk {
            r,
            theta,
            radius: 0.7 * radius,
        },
        &RegionSpec::PolarRing {
            r,
            theta,
            inner: 1.3 * radius,
            outer: 2.0 * radius,
        },
    )?)
}

/// SSIM of polar B-mode images `[depth][angle]` with the default window.
pub fn bmode_ssim(lines: &[Vec<f64>], reference: &[Vec<f64>], dynamic_range_db: f64) -> Result<f64> {
    ensure!(
        lines.len() == reference.len() && !lines.is_empty(),
        "images differ in line count"
    );
    let n = lines[0].len();
    let to_img = |ls: &[Vec<f64>]| {
        let b = bmode(ls, dynamic_range_db);
        (0..n)
            .flat_map(|j| (0..ls.len()).map(move |a| (a, j)))
            .map(|(a, j)| b[a * n + j])
            .collect::<Vec<f64>>()
    };
    Ok(ssim(
        &to_img(lines),
        &to_img(reference),
        lines.len(),
        n,
        SsimWindow::default(),
    )?)
}

/// All scores of one image. `lines` and `mv` cover the interior angles of
/// `config`.
pub fn score(
    lines: &[Vec<f64>],
    mv: &[Vec<f64>],
    config: &AcquisitionConfig,
    phantom: &PhantomSpec,
    display: &DisplaySpec,
) -> Result<Scores> {
    let inner = interior(config);
    ensure!(
        lines.len() == inner.angles.len() && mv.len() == lines.len(),
        "expected one line per interior angle"
    );
    let mut s = Scores::default();
    match phantom {
        PhantomSpec::PointGrid {
            depths_mm, angles_deg, ..
        } => {
            let depths: Vec<f64> = depths_mm.iter().map(|d| d * 1e-3).collect();
            let angles: Vec<f64> = angles_deg.iter().map(|a| a.to_radians()).collect();
            let res = point_resolutions(lines, &inner, &depths, &angles);
            s.lateral_fwhm_mm = mean(res.iter().map(|r| r.lateral_mm));
            s.axial_fwhm_mm = mean(res.iter().map(|r| r.axial_mm));
        }
        PhantomSpec::Cyst {
            center_depth_mm,
            center_angle_deg,
            radius_mm,
            ..
        } => {
            let center = (center_depth_mm * 1e-3, center_angle_deg.to_radians());
            s.cnr = cyst_cnr(lines, &inner, display, center, radius_mm * 1e-3).ok();
        }
        PhantomSpec::Empty => {}
    }
    let flat = |ls: &[Vec<f64>]| ls.iter().flatten().copied().collect::<Vec<f64>>();
    s.nrmse_vs_mv = nrmse(&flat(lines), &flat(mv)).ok();
    s.ssim_vs_mv = bmode_ssim(lines, mv, display.dynamic_range_db).ok();
    Ok(s)
}
