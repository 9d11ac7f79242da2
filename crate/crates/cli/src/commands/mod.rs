//! One function per subcommand plus the loaders for the artifacts they
//! exchange.

mod beamform;
mod dataset;
mod evaluate;
mod qcoef;
mod simulate;
mod train;

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use snb_core::beamform::QTable;
use snb_core::neural::{Tensor3, UNetParams};
use snb_core::sampling::{CubeLayout, SamplingScheme, SchemeLabel, TrainingSample};
use snb_core::{BeamLine, RfFrame};

pub use beamform::{beamform, BeamformArgs, Method};
pub use dataset::{make_dataset, MakeDatasetArgs};
pub use evaluate::{evaluate, predict, EvaluateArgs, PredictArgs};
pub use qcoef::{qcoef, QcoefArgs};
pub use simulate::{simulate, SimulateArgs};
pub use train::{train, TrainArgs};

use crate::config::RunConfig;
use crate::manifest::Artifact;

pub fn parse_scheme(s: &str) -> Result<SchemeLabel> {
    Ok(s.parse()?)
}

pub fn parse_layout(s: &str) -> Result<CubeLayout> {
    Ok(s.parse()?)
}

pub fn scheme(cfg: &RunConfig, label: SchemeLabel) -> Result<SamplingScheme> {
    Ok(SamplingScheme::new(
        label,
        cfg.acquisition.samples,
        cfg.geometry.elements,
    )?)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// A simulated frame and the configuration it was simulated with.
pub struct FrameArtifact {
    pub art: Artifact,
    pub config: RunConfig,
    pub frame: RfFrame,
}

pub const FRAME_FILE: &str = "frame.snb";

pub fn open_frame(dir: &Path) -> Result<FrameArtifact> {
    let art = Artifact::open(dir, "simulate")?;
    let config = art.manifest.config.clone();
    let (dims, data) = art.tensor(FRAME_FILE)?.into_f64()?;
    ensure!(dims.len() == 3, "frame tensor must have rank 3, found {dims:?}");
    let frame = RfFrame::from_vec(dims[0], dims[1], dims[2], data)?;
    frame.check(&config.geometry()?, &config.acquisition())?;
    Ok(FrameArtifact { art, config, frame })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablesDetails {
    pub cache_key: String,
    pub energy_fraction: f64,
    /// No tables stored; alignment uses the untruncated operator.
    pub exact: bool,
    pub angles: usize,
    pub rows: usize,
    pub stored_values: usize,
}

/// Distortion tables of one scheme, or the untruncated operator.
pub struct TableSet {
    pub art: Artifact,
    pub label: SchemeLabel,
    pub details: TablesDetails,
    pub tables: Option<Vec<QTable>>,
}

pub fn table_file(a: usize) -> String {
    format!("table_{a:03}.snb")
}

pub fn index_file(a: usize) -> String {
    format!("index_{a:03}.snb")
}

/// Opens a `qcoef` output and checks that it was built for the sampled
/// data described by `cfg`.
pub fn open_tables(dir: &Path, cfg: &RunConfig) -> Result<TableSet> {
    let art = Artifact::open(dir, "qcoef")?;
    ensure!(
        art.manifest.config.same_acquisition(cfg),
        "tables in {} were built for another geometry or acquisition",
        dir.display()
    );
    let label = parse_scheme(
        art.manifest
            .scheme
            .as_deref()
            .context("tables manifest names no scheme")?,
    )?;
    let details: TablesDetails = art.manifest.detail("tables")?;
    let tables = if details.exact {
        None
    } else {
        let g = cfg.geometry()?;
        let acq = cfg.acquisition();
        let mut v = Vec::with_capacity(details.angles);
        for a in 0..details.angles {
            let (_, values) = art.tensor(&table_file(a))?.into_c128()?;
            let (dims, index) = art.tensor(&index_file(a))?.into_f64()?;
            ensure!(dims.len() == 2 && dims[0] == 3, "index {a} must be 3 x rows");
            let r = dims[1];
            let rows: Vec<usize> = index[..r].iter().map(|&v| v as usize).collect();
            let n_first: Vec<i64> = index[r..2 * r].iter().map(|&v| v as i64).collect();
            let widths: Vec<usize> = index[2 * r..].iter().map(|&v| v as usize).collect();
            let key = snb_core::beamform::qtable::table_key(&g, &acq, a, details.energy_fraction, &rows);
            v.push(QTable::from_parts(
                acq.angles[a],
                acq.samples,
                g.elements(),
                details.energy_fraction,
                key,
                rows,
                n_first,
                widths,
                values,
            )?);
        }
        Some(v)
    };
    Ok(TableSet {
        art,
        label,
        details,
        tables,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDetails {
    pub frames: usize,
    pub sample_count: usize,
    pub input_dims: [usize; 3],
    /// Amplitude the stored inputs and targets were divided by.
    pub scale: f64,
    pub mean_dropped_fraction: f64,
    /// Manifest hash of the distortion tables, absent for the exact operator.
    pub tables: Option<String>,
}

pub struct DatasetArtifact {
    pub art: Artifact,
    pub config: RunConfig,
    pub label: SchemeLabel,
    pub layout: CubeLayout,
    pub details: DatasetDetails,
}

pub const INPUTS_FILE: &str = "inputs.snb";
pub const TARGETS_FILE: &str = "targets.snb";
pub const META_FILE: &str = "samples.snb";

pub fn open_dataset(dir: &Path) -> Result<DatasetArtifact> {
    let art = Artifact::open(dir, "make-dataset")?;
    let config = art.manifest.config.clone();
    let label = parse_scheme(art.manifest.scheme.as_deref().context("dataset names no scheme")?)?;
    let layout = parse_layout(art.manifest.layout.as_deref().context("dataset names no layout")?)?;
    let details = art.manifest.detail("dataset")?;
    Ok(DatasetArtifact {
        art,
        config,
        label,
        layout,
        details,
    })
}

impl DatasetArtifact {
    /// The normalized training samples.
    pub fn samples(&self) -> Result<Vec<TrainingSample>> {
        let (idims, inputs) = self.art.tensor(INPUTS_FILE)?.into_f64()?;
        let (tdims, targets) = self.art.tensor(TARGETS_FILE)?.into_f64()?;
        let (mdims, meta) = self.art.tensor(META_FILE)?.into_f64()?;
        let s = self.details.sample_count;
        let [d1, d2, d3] = self.details.input_dims;
        ensure!(idims == [s, d1, d2, d3], "inputs have dims {idims:?}");
        ensure!(tdims == [s, d1], "targets have dims {tdims:?}");
        ensure!(mdims == [s, 3], "sample table has dims {mdims:?}");
        let per = d1 * d2 * d3;
        (0..s)
            .map(|i| {
                Ok(TrainingSample {
                    input: Tensor3::from_vec(d1, d2, d3, inputs[i * per..(i + 1) * per].to_vec())?,
                    target: BeamLine::new(targets[i * d1..(i + 1) * d1].to_vec(), meta[3 * i + 2]),
                    angle_index: meta[3 * i + 1] as usize,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointDetails {
    pub dataset: String,
    pub tables: Option<String>,
    pub scale: f64,
    pub epochs_requested: usize,
    pub epochs_done: usize,
    pub best_epoch: Option<usize>,
    pub parameters: usize,
}

pub struct Checkpoint {
    pub art: Artifact,
    pub config: RunConfig,
    pub label: SchemeLabel,
    pub layout: CubeLayout,
    pub details: CheckpointDetails,
}

pub const BEST_FILE: &str = "best.snb";

pub fn open_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let art = Artifact::open(dir, "train")?;
    let config = art.manifest.config.clone();
    let label = parse_scheme(art.manifest.scheme.as_deref().context("checkpoint names no scheme")?)?;
    let layout = parse_layout(art.manifest.layout.as_deref().context("checkpoint names no layout")?)?;
    let details = art.manifest.detail("checkpoint")?;
    Ok(Checkpoint {
        art,
        config,
        label,
        layout,
        details,
    })
}

impl Checkpoint {
    pub fn best(&self) -> Result<UNetParams> {
        let (_, v) = self.art.tensor(BEST_FILE)?.into_f64()?;
        Ok(UNetParams::from_values(&self.config.network(self.layout), v)?)
    }

    /// The tables among `candidates` this checkpoint was trained with, or
    /// `None` when it used the untruncated operator.
    pub fn matching_tables<'a>(&self, candidates: &'a [TableSet]) -> Result<Option<&'a TableSet>> {
        match &self.details.tables {
            None => Ok(None),
            Some(h) => match candidates.iter().find(|t| &t.art.hash == h) {
                Some(t) => Ok(Some(t)),
                None => bail!(
                    "checkpoint {} was trained on tables {h}; pass them with --tables",
                    self.art.dir.display()
                ),
            },
        }
    }
}

/// Lines as plain vectors.
pub fn samples_of(lines: &[BeamLine]) -> Vec<Vec<f64>> {
    lines.iter().map(|l| l.samples.clone()).collect()
}
