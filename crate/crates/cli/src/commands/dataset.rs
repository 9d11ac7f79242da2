use std::path::PathBuf;

use anyhow::{ensure, Result};
use serde_json::json;
use snb_core::sampling::{make_degraded_channels, mv_targets, normalize_dataset, slice_cubes, CubeLayout, SchemeLabel};

use super::{load_config, open_frame, open_tables, scheme, DatasetDetails, INPUTS_FILE, META_FILE, TARGETS_FILE};
use crate::manifest::{Manifest, OutputSet};
use crate::snb1::Tensor;

pub struct MakeDatasetArgs {
    pub frames: Vec<PathBuf>,
    /// Overrides the MV, network and training sections of the frames' own
    /// configuration; its acquisition must agree with theirs.
    pub config: Option<PathBuf>,
    pub scheme: SchemeLabel,
    pub layout: CubeLayout,
    pub tables: Option<PathBuf>,
    pub out: PathBuf,
}

/// Degraded cubes of every interior angle with their MV targets, scaled
/// by the largest target magnitude.
pub fn make_dataset(args: &MakeDatasetArgs) -> Result<String> {
    ensure!(!args.frames.is_empty(), "make-dataset needs at least one frame");
    let frames = args.frames.iter().map(|p| open_frame(p)).collect::<Result<Vec<_>>>()?;
    let cfg = match &args.config {
        Some(p) => load_config(Some(p))?,
        None => frames[0].config.clone(),
    };
    for f in &frames {
        ensure!(
            f.config.same_acquisition(&cfg),
            "frame {} has a different geometry or acquisition",
            f.art.dir.display()
        );
    }
    let mut inputs: Vec<_> = frames.iter().map(|f| f.art.input_ref("frame")).collect();
    let tables = match &args.tables {
        Some(dir) => {
            let t = open_tables(dir, &cfg)?;
            ensure!(
                t.label == args.scheme,
                "tables were built for scheme {}, not {}",
                t.label.as_str(),
                args.scheme.as_str()
            );
            inputs.push(t.art.input_ref("tables"));
            Some(t)
        }
        None => None,
    };
    let (g, acq, pulse, mv) = (cfg.geometry()?, cfg.acquisition(), cfg.pulse()?, cfg.mv());
    let sch = scheme(&cfg, args.scheme)?;
    let mut samples = Vec::new();
    let mut frame_of = Vec::new();
    let mut dropped = 0.0;
    for (i, f) in frames.iter().enumerate() {
        let t = tables.as_ref().and_then(|t| t.tables.as_deref());
        let degraded = make_degraded_channels(&f.frame, &g, &acq, &sch, t, &pulse)?;
        dropped += degraded.dropped_fraction;
        let targets = mv_targets(&f.frame, &g, &acq, &mv)?;
        let cubes = slice_cubes(&degraded.frame, &targets, args.layout)?;
        frame_of.extend(std::iter::repeat_n(i, cubes.len()));
        samples.extend(cubes);
        log::info!("frame {} of {}: {} samples", i + 1, frames.len(), samples.len());
    }
    let scale = normalize_dataset(&mut samples)?;
    let (d1, d2, d3) = samples[0].input.dims();
    let s = samples.len();
    let mut flat_in = Vec::with_capacity(s * d1 * d2 * d3);
    let mut flat_t = Vec::with_capacity(s * d1);
    let mut meta = Vec::with_capacity(3 * s);
    for (smp, &fi) in samples.iter().zip(&frame_of) {
        flat_in.extend_from_slice(smp.input.data());
        flat_t.extend_from_slice(&smp.target.samples);
        meta.extend([fi as f64, smp.angle_index as f64, smp.target.angle]);
    }
    let mut out = OutputSet::new(&args.out);
    out.add_tensor(INPUTS_FILE, &Tensor::f64(vec![s, d1, d2, d3], flat_in)?);
    out.add_tensor(TARGETS_FILE, &Tensor::f64(vec![s, d1], flat_t)?);
    out.add_tensor(META_FILE, &Tensor::f64(vec![s, 3], meta)?);
    let details = DatasetDetails {
        frames: frames.len(),
        sample_count: s,
        input_dims: [d1, d2, d3],
        scale,
        mean_dropped_fraction: dropped / frames.len() as f64,
        tables: tables.as_ref().map(|t| t.art.hash.clone()),
    };
    let mut m = Manifest::new("make-dataset", &cfg);
    m.scheme = Some(args.scheme.as_str().into());
    m.layout = Some(args.layout.as_str().into());
    m.inputs = inputs;
    m.details = json!({ "dataset": details });
    let hash = out.commit(m)?;
    log::info!("wrote {s} samples ({}) to {}", args.scheme.as_str(), args.out.display());
    Ok(hash)
}
