use std::path::PathBuf;

use anyhow::{bail, ensure, Result};
use serde_json::json;
use snb_core::neural;
use snb_core::sampling::make_degraded_channels;
use snb_core::BeamLine;

use super::beamform::{add_images, das_lines, mv_lines};
use super::{
    open_checkpoint, open_dataset, open_frame, open_tables, samples_of, scheme, Checkpoint, FrameArtifact, TableSet,
};
use crate::evaluation::{score, ReportRow, Scores, CSV_HEADER, REPORT_ROWS};
use crate::manifest::{InputRef, Manifest, OutputSet};
use crate::render;

pub struct PredictArgs {
    pub frame: PathBuf,
    pub checkpoint: PathBuf,
    pub tables: Option<PathBuf>,
    pub raster: bool,
    pub out: PathBuf,
}

/// Network lines for the interior angles of a fully sampled frame, which is
/// degraded with the checkpoint's own scheme and tables.
fn network_lines(fa: &FrameArtifact, ck: &Checkpoint, tables: Option<&TableSet>) -> Result<Vec<BeamLine>> {
    ensure!(
        fa.config.same_acquisition(&ck.config),
        "frame {} does not match the acquisition the checkpoint was trained on",
        fa.art.dir.display()
    );
    if let Some(t) = tables {
        ensure!(
            t.label == ck.label,
            "tables are for scheme {}, checkpoint for {}",
            t.label.as_str(),
            ck.label.as_str()
        );
    }
    let cfg = &ck.config;
    let (g, acq) = (cfg.geometry()?, cfg.acquisition());
    let sch = scheme(cfg, ck.label)?;
    let t = tables.and_then(|t| t.tables.as_deref());
    let degraded = make_degraded_channels(&fa.frame, &g, &acq, &sch, t, &cfg.pulse()?)?.frame;
    Ok(neural::predict(
        &degraded,
        &acq.angles,
        &ck.best()?,
        ck.details.scale,
        ck.layout,
    )?)
}

fn checkpoint_tables(ck: &Checkpoint, dir: &Option<PathBuf>) -> Result<Option<TableSet>> {
    let candidates = match dir {
        Some(d) => vec![open_tables(d, &ck.config)?],
        None => Vec::new(),
    };
    let found = ck.matching_tables(&candidates)?.is_some();
    if !found && !candidates.is_empty() {
        bail!(
            "checkpoint {} was trained without distortion tables; omit --tables",
            ck.art.dir.display()
        );
    }
    Ok(candidates.into_iter().next())
}

pub fn predict(args: &PredictArgs) -> Result<String> {
    let fa = open_frame(&args.frame)?;
    let ck = open_checkpoint(&args.checkpoint)?;
    let tables = checkpoint_tables(&ck, &args.tables)?;
    let lines = samples_of(&network_lines(&fa, &ck, tables.as_ref())?);
    let mut inputs = vec![fa.art.input_ref("frame"), ck.art.input_ref("checkpoint")];
    inputs.extend(tables.as_ref().map(|t| t.art.input_ref("tables")));
    let mut out = OutputSet::new(&args.out);
    let inner = crate::evaluation::interior(&fa.config.acquisition());
    add_images(&mut out, &lines, &inner, &fa.config, args.raster)?;
    let mut m = Manifest::new("predict", &fa.config);
    m.scheme = Some(ck.label.as_str().into());
    m.layout = Some(ck.layout.as_str().into());
    m.inputs = inputs;
    m.details = json!({ "lines": "interior angles" });
    out.commit(m)
}

pub struct EvaluateArgs {
    pub frame: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub tables: Vec<PathBuf>,
    /// Datasets whose manifest must be the one a checkpoint was trained on.
    pub datasets: Vec<PathBuf>,
    pub out: PathBuf,
}

/// Scores DAS and MV of the frame and the network of every checkpoint.
/// Writes `metrics.csv` with one row per entry of [`REPORT_ROWS`]; rows
/// without a checkpoint keep their metric fields empty.
pub fn evaluate(args: &EvaluateArgs) -> Result<(String, Vec<ReportRow>)> {
    let fa = open_frame(&args.frame)?;
    let cfg = &fa.config;
    let (g, acq) = (cfg.geometry()?, cfg.acquisition());
    let cks = args
        .checkpoints
        .iter()
        .map(|p| open_checkpoint(p))
        .collect::<Result<Vec<_>>>()?;
    for (i, a) in cks.iter().enumerate() {
        if cks[..i].iter().any(|b| b.label == a.label) {
            bail!("two checkpoints for scheme {}", a.label.as_str());
        }
    }
    let mut inputs: Vec<InputRef> = vec![fa.art.input_ref("frame")];
    for d in &args.datasets {
        let ds = open_dataset(d)?;
        if !cks.iter().any(|c| c.details.dataset == ds.art.hash) {
            bail!(
                "refusing dataset {}: no checkpoint records manifest {}",
                d.display(),
                ds.art.hash
            );
        }
        inputs.push(ds.art.input_ref("dataset"));
    }
    let table_sets = args
        .tables
        .iter()
        .map(|p| open_tables(p, cfg))
        .collect::<Result<Vec<_>>>()?;
    let inner_of = |lines: Vec<BeamLine>| samples_of(&lines[1..lines.len() - 1]);
    let das = inner_of(das_lines(&fa.frame, &g, &acq)?);
    let mv = inner_of(mv_lines(&fa.frame, cfg)?);
    let mut images = vec![("das", "full", das.clone()), ("mv", "full", mv.clone())];
    for ck in &cks {
        let t = ck.matching_tables(&table_sets)?;
        inputs.push(ck.art.input_ref("checkpoint"));
        inputs.extend(t.map(|t| t.art.input_ref("tables")));
        images.push(("proposed", ck.label.as_str(), samples_of(&network_lines(&fa, ck, t)?)));
    }
    let mut rows = Vec::new();
    let mut out = OutputSet::new(&args.out);
    let inner = crate::evaluation::interior(&acq);
    for (method, sch) in REPORT_ROWS {
        let s = match images.iter().find(|(m, s, _)| *m == method && *s == sch) {
            Some((_, _, lines)) => {
                let img = snb_core::beamform::bmode(lines, cfg.display.dynamic_range_db);
                out.add(
                    &format!("{method}_{sch}.pgm"),
                    render::polar_pgm(&img, lines.len(), inner.samples)?,
                );
                score(lines, &mv, &acq, &cfg.phantom, &cfg.display)?
            }
            None => Scores::default(),
        };
        rows.push((method.to_string(), sch.to_string(), s));
    }
    let table: Vec<Vec<String>> = rows.iter().map(|(m, s, sc)| sc.fields(m, s)).collect();
    out.add("metrics.csv", render::csv(&CSV_HEADER, &table)?);
    let mut m = Manifest::new("evaluate", cfg);
    m.inputs = inputs;
    m.details = json!({ "rows": REPORT_ROWS.len() });
    Ok((out.commit(m)?, rows))
}
