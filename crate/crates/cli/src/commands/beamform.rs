use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde_json::json;
use snb_core::beamform::{bmode, das_line, envelope, mv_line, scan_convert};
use snb_core::metrics::nrmse;
use snb_core::sampling::{make_degraded_channels, SchemeLabel};
use snb_core::{AcquisitionConfig, ArrayGeometry, BeamLine, RfFrame};

use super::{open_frame, open_tables, samples_of, scheme, TableSet};
use crate::config::RunConfig;
use crate::manifest::{Manifest, OutputSet};
use crate::render;
use crate::snb1::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Das,
    Mv,
    FdDas,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Das => "das",
            Method::Mv => "mv",
            Method::FdDas => "fd-das",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "das" => Method::Das,
            "mv" => Method::Mv,
            "fd-das" => Method::FdDas,
            _ => bail!("unknown method '{s}' (expected das, mv or fd-das)"),
        })
    }
}

pub struct BeamformArgs {
    pub frame: PathBuf,
    pub method: Method,
    pub scheme: SchemeLabel,
    pub tables: Option<PathBuf>,
    pub check: bool,
    pub raster: bool,
    pub out: PathBuf,
}

pub fn das_lines(frame: &RfFrame, g: &ArrayGeometry, acq: &AcquisitionConfig) -> Result<Vec<BeamLine>> {
    Ok((0..acq.n_angles())
        .into_par_iter()
        .map(|a| das_line(frame, a, g, acq))
        .collect::<snb_core::Result<_>>()?)
}

pub fn mv_lines(frame: &RfFrame, cfg: &RunConfig) -> Result<Vec<BeamLine>> {
    let (g, acq, mv) = (cfg.geometry()?, cfg.acquisition(), cfg.mv());
    Ok((0..acq.n_angles())
        .map(|a| mv_line(frame, a, &g, &acq, &mv))
        .collect::<snb_core::Result<_>>()?)
}

/// Frequency-domain DAS from the scheme's coefficients: the degraded
/// aligned channels averaged over the kept elements.
pub fn fd_das_lines(frame: &RfFrame, cfg: &RunConfig, tables: &TableSet) -> Result<Vec<BeamLine>> {
    let (g, acq) = (cfg.geometry()?, cfg.acquisition());
    let sch = scheme(cfg, tables.label)?;
    let degraded = make_degraded_channels(frame, &g, &acq, &sch, tables.tables.as_deref(), &cfg.pulse()?)?.frame;
    let n = acq.samples;
    let norm = 1.0 / sch.kept_elements.len() as f64;
    Ok((0..acq.n_angles())
        .map(|a| {
            let mut line = vec![0.0; n];
            for &m in &sch.kept_elements {
                line.iter_mut().zip(degraded.channel(a, m)).for_each(|(l, v)| *l += v);
            }
            line.iter_mut().for_each(|v| *v *= norm);
            BeamLine::new(line, acq.angles[a])
        })
        .collect())
}

/// Writes the lines, their envelopes, the polar B-mode image and,
/// optionally, the scan-converted raster.
pub(crate) fn add_images(
    out: &mut OutputSet,
    lines: &[Vec<f64>],
    acq: &AcquisitionConfig,
    cfg: &RunConfig,
    raster: bool,
) -> Result<()> {
    let n = acq.samples;
    let flat: Vec<f64> = lines.iter().flatten().copied().collect();
    out.add_tensor("lines.snb", &Tensor::f64(vec![lines.len(), n], flat)?);
    let env: Vec<f64> = lines.iter().flat_map(|l| envelope(l)).collect();
    out.add_tensor("envelope.snb", &Tensor::f64(vec![lines.len(), n], env)?);
    let img = bmode(lines, cfg.display.dynamic_range_db);
    out.add("bmode.pgm", render::polar_pgm(&img, lines.len(), n)?);
    if raster {
        let (w, h) = (cfg.display.raster_width, cfg.display.raster_height);
        let r = scan_convert(&img, acq, w, h);
        out.add("raster.pgm", render::pgm(w, h, &r.data)?);
    }
    Ok(())
}

/// Returns the manifest hash and, with `check`, the NRMSE of the output
/// against time-domain DAS.
pub fn beamform(args: &BeamformArgs) -> Result<(String, Option<f64>)> {
    let fa = open_frame(&args.frame)?;
    let cfg = &fa.config;
    let (g, acq) = (cfg.geometry()?, cfg.acquisition());
    let mut inputs = vec![fa.art.input_ref("frame")];
    let tables = match &args.tables {
        Some(dir) => {
            let t = open_tables(dir, cfg)?;
            ensure!(
                t.label == args.scheme,
                "tables in {} were built for scheme {}, not {}",
                dir.display(),
                t.label.as_str(),
                args.scheme.as_str()
            );
            inputs.push(t.art.input_ref("tables"));
            Some(t)
        }
        None => None,
    };
    if args.method != Method::FdDas && args.scheme != SchemeLabel::Full {
        bail!(
            "{} beamforms fully sampled data only; use fd-das for scheme {}",
            args.method.as_str(),
            args.scheme.as_str()
        );
    }
    let lines = match args.method {
        Method::Das => das_lines(&fa.frame, &g, &acq)?,
        Method::Mv => mv_lines(&fa.frame, cfg)?,
        Method::FdDas => {
            let t = tables
                .as_ref()
                .context("fd-das needs distortion tables (--tables, built by qcoef)")?;
            fd_das_lines(&fa.frame, cfg, t)?
        }
    };
    let lines = samples_of(&lines);
    let check = if args.check {
        let reference = samples_of(&das_lines(&fa.frame, &g, &acq)?);
        let flat = |ls: &[Vec<f64>]| ls.iter().flatten().copied().collect::<Vec<f64>>();
        let e = nrmse(&flat(&lines), &flat(&reference))?;
        println!(
            "check: {} ({}) vs das NRMSE = {e:.3e}",
            args.method.as_str(),
            args.scheme.as_str()
        );
        Some(e)
    } else {
        None
    };
    let mut out = OutputSet::new(&args.out);
    add_images(&mut out, &lines, &acq, cfg, args.raster)?;
    let mut m = Manifest::new("beamform", cfg);
    m.scheme = Some(args.scheme.as_str().into());
    m.inputs = inputs;
    m.details = json!({ "method": args.method.as_str(), "check_nrmse_vs_das": check });
    Ok((out.commit(m)?, check))
}
