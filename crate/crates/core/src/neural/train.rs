//! Mini-batch training with a fixed-order gradient reduction, so the
//! parameter trajectory depends only on the seed, the data and the
//! configuration.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::loss::{smsle_loss, SMSLE_EPS};
use super::optim::{AdamConfig, AdamState};
use super::unet::{UNetConfig, UNetParams};
use crate::error::{invalid, shape, Result};
use crate::geometry::{BeamLine, RfFrame};
use crate::rng::{split_seed, stream_rng};
use crate::sampling::{cube_input, CubeLayout, TrainingSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub seed: u64,
    pub smsle_eps: f64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 16,
            val_fraction: 0.2,
            seed: 0,
            smsle_eps: SMSLE_EPS,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(invalid("validation fraction must lie in [0, 1)"));
        }
        if !(self.smsle_eps > 0.0) {
            return Err(invalid("loss epsilon must be positive"));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_smsle: f64,
    /// NaN when the split has no validation samples.
    pub val_smsle: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub seed: u64,
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    /// Epoch whose parameters were kept.
    pub fn best_epoch(&self) -> Option<usize> {
        let score = |r: &EpochRecord| {
            if r.val_smsle.is_nan() {
                r.train_smsle
            } else {
                r.val_smsle
            }
        };
        let mut best: Option<(usize, f64)> = None;
        for r in &self.records {
            if best.is_none_or(|(_, s)| score(r) < s) {
                best = Some((r.epoch, score(r)));
            }
        }
        best.map(|b| b.0)
    }
}

/// Everything needed to continue a run bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: UNetParams,
    pub adam: AdamState,
    pub best: UNetParams,
    pub best_score: f64,
    pub history: TrainHistory,
}

impl TrainState {
    pub fn fresh(net: &UNetConfig, cfg: &TrainConfig) -> Result<Self> {
        let params = UNetParams::init(net, split_seed(cfg.seed, 2))?;
        let adam = AdamState::new(cfg.adam, params.len())?;
        Ok(Self {
            best: params.clone(),
            params,
            adam,
            best_score: f64::INFINITY,
            history: TrainHistory {
                seed: cfg.seed,
                records: Vec::new(),
            },
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.history.records.len()
    }
}

/// Training and validation indices: a seeded permutation whose first
/// `round(len * val_fraction)` entries (at most `len - 1`) validate.
pub fn split_indices(len: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut stream_rng(split_seed(seed, 0), 0));
    let n_val = ((len as f64 * val_fraction).round() as usize).min(len.saturating_sub(1));
    let val = idx[..n_val].to_vec();
    (idx[n_val..].to_vec(), val)
}

/// Loss and parameter gradient for one sample.
pub fn sample_gradient(params: &UNetParams, sample: &TrainingSample, eps: f64) -> Result<(f64, Vec<f64>)> {
    let (pred, cache) = params.forward_cached(&sample.input)?;
    let (loss, dpred) = smsle_loss(&pred, &sample.target.samples, eps)?;
    Ok((loss, params.backward(&cache, &dpred)?))
}

/// Mean-reduced loss and gradient of a batch. Per-sample work may run in
/// parallel; the reduction runs in batch order.
pub fn batch_gradient(params: &UNetParams, batch: &[&TrainingSample], eps: f64) -> Result<(f64, Vec<f64>)> {
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|s| sample_gradient(params, s, eps))
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    let inv = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok((loss * inv, grad))
}

/// Mean loss over `samples` without gradients.
pub fn evaluate_loss(params: &UNetParams, samples: &[&TrainingSample], eps: f64) -> Result<f64> {
    let losses: Vec<f64> = samples
        .par_iter()
        .map(|s| Ok(smsle_loss(&params.forward(&s.input)?, &s.target.samples, eps)?.0))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Trains until `cfg.epochs` epochs are recorded, continuing from `resume`
/// if given. `on_epoch` sees the state after every epoch. The returned
/// state's `best` holds the parameters of the best epoch (validation loss,
/// or training loss when there is no validation split).
pub fn train(
    samples: &[TrainingSample],
    net: &UNetConfig,
    cfg: &TrainConfig,
    resume: Option<TrainState>,
    mut on_epoch: impl FnMut(&TrainState),
) -> Result<TrainState> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(invalid("training needs at least one sample"));
    }
    let mut state = match resume {
        Some(s) => {
            if s.params.config() != net || s.history.seed != cfg.seed {
                return Err(invalid("resumed state belongs to a different configuration or seed"));
            }
            s
        }
        None => TrainState::fresh(net, cfg)?,
    };
    let (train_idx, val_idx) = split_indices(samples.len(), cfg.val_fraction, cfg.seed);
    let val: Vec<&TrainingSample> = val_idx.iter().map(|&i| &samples[i]).collect();

    for epoch in state.epochs_done()..cfg.epochs {
        let start = Instant::now();
        let mut order = train_idx.clone();
        order.shuffle(&mut stream_rng(split_seed(cfg.seed, 1), epoch as u64));
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainingSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (loss, grad) = batch_gradient(&state.params, &batch, cfg.smsle_eps)?;
            loss_sum += loss * batch.len() as f64;
            state.adam.update(state.params.values_mut(), &grad)?;
        }
        let train_smsle = loss_sum / order.len() as f64;
        let val_smsle = if val.is_empty() {
            f64::NAN
        } else {
            evaluate_loss(&state.params, &val, cfg.smsle_eps)?
        };
        let score = if val.is_empty() { train_smsle } else { val_smsle };
        if score < state.best_score {
            state.best_score = score;
            state.best = state.params.clone();
        }
        state.history.records.push(EpochRecord {
            epoch: epoch + 1,
            train_smsle,
            val_smsle,
            seconds: start.elapsed().as_secs_f64(),
        });
        on_epoch(&state);
    }
    Ok(state)
}

/// De-normalized network lines for every interior angle of a degraded cube.
pub fn predict(
    degraded: &RfFrame,
    angles: &[f64],
    params: &UNetParams,
    scale: f64,
    layout: CubeLayout,
) -> Result<Vec<BeamLine>> {
    if angles.len() != degraded.n_angles() {
        return Err(shape(format!(
            "{} angles for a {}-angle cube",
            angles.len(),
            degraded.n_angles()
        )));
    }
    if degraded.n_angles() < 3 {
        return Err(invalid("prediction needs at least 3 angles"));
    }
    let expected = layout.in_channels(degraded.elements());
    if params.config().in_channels != expected || params.config().pool_lateral != layout.pool_lateral() {
        return Err(shape("cube layout does not match the trained network"));
    }
    (1..degraded.n_angles() - 1)
        .into_par_iter()
        .map(|a| {
            let mut input = cube_input(degraded, a, layout)?;
            input.data_mut().iter_mut().for_each(|v| *v /= scale);
            let out = params.forward(&input)?;
            Ok(BeamLine::new(out.into_iter().map(|v| v * scale).collect(), angles[a]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradcheck::random_tensor;

    fn tiny_net() -> UNetConfig {
        UNetConfig {
            in_channels: 3,
            widths: [2, 2, 4],
            bottleneck: 4,
            pool_lateral: true,
        }
    }

    fn toy_samples(count: usize) -> Vec<TrainingSample> {
        (0..count)
            .map(|i| {
                let input = random_tensor(16, 4, 3, i as u64, 0.0);
                // Target: the mean of the middle-angle channels.
                let target = (0..16)
                    .map(|d| (0..4).map(|e| input.get(d, e, 1)).sum::<f64>() / 4.0)
                    .collect();
                TrainingSample {
                    input,
                    target: BeamLine::new(target, 0.0),
                    angle_index: 1,
                }
            })
            .collect()
    }

    #[test]
    fn zero_epochs_return_initial_parameters() {
        let net = tiny_net();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let state = train(&toy_samples(1), &net, &cfg, None, |_| {}).unwrap();
        assert_eq!(state.best, UNetParams::init(&net, split_seed(0, 2)).unwrap());
        assert!(state.history.records.is_empty());
        assert!(train(&[], &net, &cfg, None, |_| {}).is_err());
    }

    #[test]
    fn split_covers_every_sample_once() {
        let (t, v) = split_indices(10, 0.2, 4);
        assert_eq!(v.len(), 2);
        let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_indices(1, 0.2, 4).1.len(), 0);
    }

    #[test]
    fn training_is_deterministic_and_resumable() {
        let net = tiny_net();
        let data = toy_samples(10);
        let cfg = TrainConfig {
            epochs: 4,
            batch_size: 3,
            seed: 9,
            adam: AdamConfig {
                lr: 1e-3,
                ..Default::default()
            },
            ..Default::default()
        };
        let strip = |s: &TrainState| {
            s.history
                .records
                .iter()
                .map(|r| (r.train_smsle, r.val_smsle))
                .collect::<Vec<_>>()
        };
        let a = train(&data, &net, &cfg, None, |_| {}).unwrap();
        let b = train(&data, &net, &cfg, None, |_| {}).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(strip(&a), strip(&b));

        let half = train(&data, &net, &TrainConfig { epochs: 2, ..cfg }, None, |_| {}).unwrap();
        let resumed = train(&data, &net, &cfg, Some(half), |_| {}).unwrap();
        assert_eq!(resumed.params, a.params);
        assert_eq!(resumed.best, a.best);
        assert_eq!(strip(&resumed), strip(&a));
    }

    #[test]
    fn batch_gradient_ignores_sample_order() {
        let net = UNetParams::init(&tiny_net(), 1).unwrap();
        let data = toy_samples(4);
        let fwd: Vec<&TrainingSample> = data.iter().collect();
        let rev: Vec<&TrainingSample> = data.iter().rev().collect();
        let (la, ga) = batch_gradient(&net, &fwd, SMSLE_EPS).unwrap();
        let (lb, gb) = batch_gradient(&net, &rev, SMSLE_EPS).unwrap();
        assert!((la - lb).abs() <= 1e-15 * la.abs());
        let scale = ga.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(ga.iter().zip(&gb).all(|(a, b)| (a - b).abs() <= 1e-13 * scale));
    }

    #[test]
    fn loss_decreases_on_a_learnable_map() {
        let net = tiny_net();
        let data = toy_samples(12);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 4,
            seed: 1,
            adam: AdamConfig {
                lr: 3e-3,
                ..Default::default()
            },
            ..Default::default()
        };
        let state = train(&data, &net, &cfg, None, |_| {}).unwrap();
        let first = state.history.records[0].train_smsle;
        let last = state.history.records.last().unwrap().train_smsle;
        assert!(last < first, "{first} -> {last}");
        assert!(state.history.best_epoch().is_some());
    }

    #[test]
    fn prediction_of_zero_cube_with_zero_biases_is_zero() {
        let net = UNetParams::init(&tiny_net(), 2).unwrap();
        let lines = predict(&RfFrame::zeros(5, 4, 16), &[0.0; 5], &net, 2.0, CubeLayout::ElementsD2).unwrap();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.samples.iter().all(|&v| v == 0.0)));
        assert!(predict(&RfFrame::zeros(5, 4, 16), &[0.0; 5], &net, 2.0, CubeLayout::AnglesD2).is_err());
    }
}
