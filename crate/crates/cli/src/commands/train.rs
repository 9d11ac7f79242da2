use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use serde_json::json;
use snb_core::neural::{self, AdamState, EpochRecord, TrainHistory, TrainState, UNetParams};

use super::{open_checkpoint, open_dataset, CheckpointDetails, DatasetArtifact, BEST_FILE};
use crate::config::RunConfig;
use crate::manifest::{Manifest, OutputSet};
use crate::render;
use crate::snb1::Tensor;

pub struct TrainArgs {
    pub dataset: PathBuf,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub seed: u64,
    /// Continue the run stored in `out`.
    pub resume: bool,
    pub out: PathBuf,
}

pub const HISTORY_HEADER: [&str; 4] = ["epoch", "train_smsle", "val_smsle", "seconds"];

fn history_csv(h: &TrainHistory) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = h
        .records
        .iter()
        .map(|r| {
            vec![
                r.epoch.to_string(),
                render::field(Some(r.train_smsle)),
                render::field(Some(r.val_smsle)),
                render::field(Some(r.seconds)),
            ]
        })
        .collect();
    render::csv(&HISTORY_HEADER, &rows)
}

fn read_history(path: &std::path::Path, seed: u64) -> Result<TrainHistory> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut records = Vec::new();
    for row in r.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> { Ok(row.get(i).context("short history row")?.parse()?) };
        records.push(EpochRecord {
            epoch: row.get(0).context("short history row")?.parse()?,
            train_smsle: f(1)?,
            val_smsle: f(2)?,
            seconds: f(3)?,
        });
    }
    Ok(TrainHistory { seed, records })
}

fn save(
    out: &std::path::Path,
    state: &TrainState,
    ds: &DatasetArtifact,
    cfg: &RunConfig,
    seed: u64,
    epochs_requested: usize,
) -> Result<String> {
    let p = state.params.len();
    let mut files = OutputSet::new(out);
    files.add_tensor(BEST_FILE, &Tensor::f64(vec![p], state.best.values().to_vec())?);
    files.add_tensor("last.snb", &Tensor::f64(vec![p], state.params.values().to_vec())?);
    files.add_tensor("adam_m.snb", &Tensor::f64(vec![p], state.adam.m.clone())?);
    files.add_tensor("adam_v.snb", &Tensor::f64(vec![p], state.adam.v.clone())?);
    files.add_tensor(
        "state.snb",
        &Tensor::f64(vec![2], vec![state.adam.step as f64, state.best_score])?,
    );
    let losses: Vec<f64> = state
        .history
        .records
        .iter()
        .flat_map(|r| [r.train_smsle, r.val_smsle])
        .collect();
    files.add_tensor(
        "losses.snb",
        &Tensor::f64(vec![state.history.records.len(), 2], losses)?,
    );
    files.add_timing("history.csv", history_csv(&state.history)?);
    let details = CheckpointDetails {
        dataset: ds.art.hash.clone(),
        tables: ds.details.tables.clone(),
        scale: ds.details.scale,
        epochs_requested,
        epochs_done: state.epochs_done(),
        best_epoch: state.history.best_epoch(),
        parameters: p,
    };
    let mut m = Manifest::new("train", cfg);
    m.seed = Some(seed);
    m.scheme = Some(ds.label.as_str().into());
    m.layout = Some(ds.layout.as_str().into());
    m.inputs = vec![ds.art.input_ref("dataset")];
    m.details = json!({ "checkpoint": details });
    files.commit(m)
}

fn load_state(out: &std::path::Path, ds: &DatasetArtifact, cfg: &RunConfig, seed: u64) -> Result<TrainState> {
    let ck = open_checkpoint(out)?;
    ensure!(
        ck.details.dataset == ds.art.hash,
        "checkpoint in {} was trained on another dataset",
        out.display()
    );
    ensure!(
        ck.art.manifest.seed == Some(seed),
        "checkpoint in {} used another seed",
        out.display()
    );
    ensure!(
        ck.config.training.lr == cfg.training.lr,
        "checkpoint in {} used another learning rate",
        out.display()
    );
    let net = cfg.network(ds.layout);
    let vec = |name: &str| -> Result<Vec<f64>> { Ok(ck.art.tensor(name)?.into_f64()?.1) };
    let params = UNetParams::from_values(&net, vec("last.snb")?)?;
    let best = ck.best()?;
    let scalars = vec("state.snb")?;
    ensure!(scalars.len() == 2, "malformed state.snb");
    let mut adam = AdamState::new(cfg.train(seed).adam, params.len())?;
    adam.m = vec("adam_m.snb")?;
    adam.v = vec("adam_v.snb")?;
    adam.step = scalars[0] as _;
    ensure!(
        adam.m.len() == params.len() && adam.v.len() == params.len(),
        "optimizer moments do not match the network"
    );
    let mut history = read_history(&ck.art.path("history.csv"), seed)?;
    let losses = vec("losses.snb")?;
    ensure!(
        losses.len() == 2 * history.records.len(),
        "loss table does not match history.csv"
    );
    for (r, l) in history.records.iter_mut().zip(losses.chunks(2)) {
        r.train_smsle = l[0];
        r.val_smsle = l[1];
    }
    Ok(TrainState {
        params,
        adam,
        best,
        best_score: scalars[1],
        history,
    })
}

/// Trains on a dataset, checkpointing after every epoch. Returns the
/// final state.
pub fn train(args: &TrainArgs) -> Result<TrainState> {
    let ds = open_dataset(&args.dataset)?;
    let mut cfg = ds.config.clone();
    if let Some(e) = args.epochs {
        cfg.training.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.training.lr = lr;
    }
    let tc = cfg.train(args.seed);
    tc.validate()?;
    let net = cfg.network(ds.layout);
    let samples = ds.samples()?;
    let resume = if args.resume {
        Some(load_state(&args.out, &ds, &cfg, args.seed)?)
    } else {
        None
    };
    if let Some(s) = &resume {
        log::info!("resuming {} after epoch {}", args.out.display(), s.epochs_done());
    }
    let mut failure = None;
    let state = neural::train(&samples, &net, &tc, resume, |s| {
        let r = s.history.records.last().expect("one record per epoch");
        log::info!(
            "epoch {} train {:.5} val {:.5} ({:.1} s)",
            r.epoch,
            r.train_smsle,
            r.val_smsle,
            r.seconds
        );
        if failure.is_none() {
            if let Err(e) = save(&args.out, s, &ds, &cfg, args.seed, tc.epochs) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.context("writing checkpoint"));
    }
    save(&args.out, &state, &ds, &cfg, args.seed, tc.epochs)?;
    Ok(state)
}
