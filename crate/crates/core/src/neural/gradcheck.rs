//! Central finite-difference checks of every differentiable operation.
//!
//! Each check evaluates a scalar objective `L = sum(r * y)` with a fixed random
//! `r`, compares the analytic gradient with `(L(p + h) - L(p - h)) / 2h` and
//! reports the largest relative error. Relative errors are taken against
//! `max(|analytic|, |numeric|)`, floored at 1e-3 of the largest numeric
//! component so that near-zero entries are judged on an absolute scale.

use rand::seq::SliceRandom;
use rand::Rng;

use super::layers::*;
use super::loss::{smsle_loss, SMSLE_EPS};
use super::tensor::Tensor3;
use super::unet::{UNetConfig, UNetParams};
use crate::rng::stream_rng;

/// Uniform entries in `[-1, 1]` with magnitude at least `min_abs`.
pub fn random_tensor(d1: usize, d2: usize, d3: usize, seed: u64, min_abs: f64) -> Tensor3 {
    let v = random_vec(d1 * d2 * d3, seed, min_abs);
    Tensor3::from_vec(d1, d2, d3, v).expect("sizes agree")
}

pub fn random_vec(len: usize, seed: u64, min_abs: f64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0x6772_6164);
    (0..len)
        .map(|_| {
            let mag = min_abs + (1.0 - min_abs) * rng.random::<f64>();
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Distinct values spaced `1 / len` apart in random order, so small
/// perturbations never change a max-pooling decision.
fn distinct_tensor(d1: usize, d2: usize, d3: usize, seed: u64) -> Tensor3 {
    let len = d1 * d2 * d3;
    let mut v: Vec<f64> = (0..len).map(|i| i as f64 / len as f64 - 0.5).collect();
    v.shuffle(&mut stream_rng(seed, 0x706f_6f6c));
    Tensor3::from_vec(d1, d2, d3, v).expect("sizes agree")
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-3 * scale;
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let denom = a.abs().max(n.abs()).max(floor);
            if denom == 0.0 {
                0.0
            } else {
                (a - n).abs() / denom
            }
        })
        .fold(0.0, f64::max)
}

/// Central differences of `f` with respect to every entry of `x`.
pub fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn tensor_like(t: &Tensor3, v: &[f64]) -> Tensor3 {
    Tensor3::from_vec(t.d1(), t.d2(), t.d3(), v.to_vec()).expect("same size")
}

const H: f64 = 1e-5;

fn conv_check(size: usize, seed: u64) -> f64 {
    let (cin, cout) = (2, 3);
    let x = random_tensor(7, 5, cin, seed, 0.0);
    let k = random_vec(size * size * cin * cout, seed + 1, 0.0);
    let b = random_vec(cout, seed + 2, 0.0);
    let r = random_tensor(7, 5, cout, seed + 3, 0.0);
    let mut dk = vec![0.0; k.len()];
    let mut db = vec![0.0; cout];
    let dx = conv_backward(&x, &k, size, &r, &mut dk, &mut db).unwrap();
    let obj = |x: &Tensor3, k: &[f64], b: &[f64]| dot(conv_forward(x, k, b, size).unwrap().data(), r.data());
    let nx = numeric_gradient(x.data(), H, |v| obj(&tensor_like(&x, v), &k, &b));
    let nk = numeric_gradient(&k, H, |v| obj(&x, v, &b));
    let nb = numeric_gradient(&b, H, |v| obj(&x, &k, v));
    max_relative_error(dx.data(), &nx)
        .max(max_relative_error(&dk, &nk))
        .max(max_relative_error(&db, &nb))
}

fn prelu_check(seed: u64) -> f64 {
    let x = random_tensor(7, 5, 2, seed, 0.05);
    let a = random_vec(2, seed + 1, 0.0);
    let r = random_tensor(7, 5, 2, seed + 2, 0.0);
    let mut da = vec![0.0; 2];
    let dx = prelu_backward(&x, &a, &r, &mut da).unwrap();
    let obj = |x: &Tensor3, a: &[f64]| dot(prelu_forward(x, a).unwrap().data(), r.data());
    let nx = numeric_gradient(x.data(), H, |v| obj(&tensor_like(&x, v), &a));
    let na = numeric_gradient(&a, H, |v| obj(&x, v));
    max_relative_error(dx.data(), &nx).max(max_relative_error(&da, &na))
}

fn pool_check(lateral: bool, seed: u64) -> f64 {
    let x = distinct_tensor(8, 6, 2, seed);
    let (y, arg) = maxpool_forward(&x, lateral).unwrap();
    let r = random_tensor(y.d1(), y.d2(), y.d3(), seed + 1, 0.0);
    let dx = maxpool_backward(&r, &arg, x.dims()).unwrap();
    let nx = numeric_gradient(x.data(), H, |v| {
        dot(
            maxpool_forward(&tensor_like(&x, v), lateral).unwrap().0.data(),
            r.data(),
        )
    });
    max_relative_error(dx.data(), &nx)
}

fn upsample_check(lateral: bool, seed: u64) -> f64 {
    let x = random_tensor(4, 3, 2, seed, 0.0);
    let y = upsample_forward(&x, lateral);
    let r = random_tensor(y.d1(), y.d2(), y.d3(), seed + 1, 0.0);
    let dx = upsample_backward(&r, lateral).unwrap();
    let nx = numeric_gradient(x.data(), H, |v| {
        dot(upsample_forward(&tensor_like(&x, v), lateral).data(), r.data())
    });
    max_relative_error(dx.data(), &nx)
}

fn concat_check(seed: u64) -> f64 {
    let a = random_tensor(4, 3, 2, seed, 0.0);
    let b = random_tensor(4, 3, 3, seed + 1, 0.0);
    let r = random_tensor(4, 3, 5, seed + 2, 0.0);
    let (da, db) = split_channels(&r, 2).unwrap();
    let na = numeric_gradient(a.data(), H, |v| {
        dot(concat_channels(&tensor_like(&a, v), &b).unwrap().data(), r.data())
    });
    let nb = numeric_gradient(b.data(), H, |v| {
        dot(concat_channels(&a, &tensor_like(&b, v)).unwrap().data(), r.data())
    });
    max_relative_error(da.data(), &na).max(max_relative_error(db.data(), &nb))
}

fn sum_check(seed: u64) -> f64 {
    let x = random_tensor(6, 4, 1, seed, 0.0);
    let r = random_vec(6, seed + 1, 0.0);
    let dx = sum_reduce_backward(&r, 4);
    let nx = numeric_gradient(x.data(), H, |v| dot(&sum_reduce(&tensor_like(&x, v)).unwrap(), &r));
    max_relative_error(dx.data(), &nx)
}

/// SMSLE gradient on random 32-vectors with entries away from the kink at 0.
pub fn smsle_check(seed: u64) -> f64 {
    let pred = random_vec(32, seed, 0.05);
    let target = random_vec(32, seed + 1, 0.0);
    let (_, g) = smsle_loss(&pred, &target, SMSLE_EPS).unwrap();
    let n = numeric_gradient(&pred, H, |v| smsle_loss(v, &target, SMSLE_EPS).unwrap().0);
    max_relative_error(&g, &n)
}

/// Named maximum relative errors of every layer-level check.
pub fn layer_checks(seed: u64) -> Vec<(&'static str, f64)> {
    vec![
        ("conv3x3", conv_check(3, seed)),
        ("conv1x1", conv_check(1, seed + 10)),
        ("prelu", prelu_check(seed + 20)),
        ("maxpool_d1", pool_check(false, seed + 30)),
        ("maxpool_d1d2", pool_check(true, seed + 40)),
        ("upsample_d1", upsample_check(false, seed + 50)),
        ("upsample_d1d2", upsample_check(true, seed + 60)),
        ("concat", concat_check(seed + 70)),
        ("sum_reduce", sum_check(seed + 80)),
        ("smsle", smsle_check(seed + 90)),
    ]
}

/// Full-network check on a 16 x 4 x 3 input with two channels per level.
/// Biases and slopes are randomized so every parameter has a nonzero effect.
pub fn network_check(pool_lateral: bool, seed: u64) -> f64 {
    let cfg = UNetConfig {
        in_channels: 3,
        widths: [2, 2, 2],
        bottleneck: 2,
        pool_lateral,
    };
    let mut net = UNetParams::init(&cfg, seed).unwrap();
    let noise = random_vec(net.len(), seed + 1, 0.0);
    let ranges: Vec<_> = net
        .layout()
        .tensors()
        .iter()
        .filter(|t| !t.name.ends_with("kernel"))
        .map(|t| t.range.clone())
        .collect();
    for i in ranges.into_iter().flatten() {
        net.values_mut()[i] += 0.1 * noise[i];
    }
    let x = random_tensor(16, 4, 3, seed + 2, 0.0);
    let r = random_vec(16, seed + 3, 0.0);
    let (_, cache) = net.forward_cached(&x).unwrap();
    let analytic = net.backward(&cache, &r).unwrap();
    let base = net.values().to_vec();
    let numeric = numeric_gradient(&base, 1e-6, |p| {
        let probe = UNetParams::from_values(&cfg, p.to_vec()).unwrap();
        dot(&probe.forward(&x).unwrap(), &r)
    });
    max_relative_error(&analytic, &numeric)
}
