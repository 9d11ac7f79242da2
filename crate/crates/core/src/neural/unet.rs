//! Encoder-decoder network mapping a `[depth x lateral x channels]` cube to
//! one beamformed line.
//!
//! Three contracting blocks (two 3x3 conv + PReLU, then max pooling), a
//! bottleneck block, three expanding blocks (upsampling, skip
//! concatenation, two 3x3 conv + PReLU), a 1x1 projection to one channel
//! and a summation over the lateral dimension. All parameters live in one
//! flat vector whose layout is described by [`UNetLayout`].

use std::ops::Range;

use super::layers::*;
use super::tensor::Tensor3;
use crate::error::{invalid, shape, Result};
use crate::rng::stream_rng;
use rand_distr::{Distribution, Normal};

/// Pooling levels between input and bottleneck.
pub const LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UNetConfig {
    pub in_channels: usize,
    /// Output channels of the three contracting levels.
    pub widths: [usize; LEVELS],
    pub bottleneck: usize,
    /// Pool and upsample along d2 as well as d1.
    pub pool_lateral: bool,
}

impl UNetConfig {
    /// 16/32/64 channels with 128 at the bottleneck, three input channels.
    pub fn standard(pool_lateral: bool) -> Self {
        Self {
            in_channels: 3,
            widths: [16, 32, 64],
            bottleneck: 128,
            pool_lateral,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.bottleneck == 0 || self.widths.contains(&0) {
            return Err(invalid("network widths must be positive"));
        }
        Ok(())
    }

    /// Padded extents for an `n x m` input.
    pub fn padded_dims(&self, n: usize, m: usize) -> (usize, usize) {
        let f = 1 << LEVELS;
        let m_pad = if self.pool_lateral { m.div_ceil(f) * f } else { m };
        (n.div_ceil(f) * f, m_pad)
    }
}

/// Named parameter tensor inside the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Block {
    cin: usize,
    cout: usize,
    w1: Range<usize>,
    b1: Range<usize>,
    a1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    a2: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UNetLayout {
    encoders: Vec<Block>,
    bottleneck: Block,
    /// Indexed by level; executed from the deepest level up.
    decoders: Vec<Block>,
    proj_w: Range<usize>,
    proj_b: Range<usize>,
    tensors: Vec<ParamTensor>,
    total: usize,
}

struct Builder {
    tensors: Vec<ParamTensor>,
    offset: usize,
}

impl Builder {
    fn push(&mut self, name: String, shape: Vec<usize>) -> Range<usize> {
        let len: usize = shape.iter().product();
        let range = self.offset..self.offset + len;
        self.offset += len;
        self.tensors.push(ParamTensor {
            name,
            shape,
            range: range.clone(),
        });
        range
    }

    fn block(&mut self, name: &str, cin: usize, cout: usize) -> Block {
        Block {
            cin,
            cout,
            w1: self.push(format!("{name}.conv1.kernel"), vec![3, 3, cin, cout]),
            b1: self.push(format!("{name}.conv1.bias"), vec![cout]),
            a1: self.push(format!("{name}.prelu1.slope"), vec![cout]),
            w2: self.push(format!("{name}.conv2.kernel"), vec![3, 3, cout, cout]),
            b2: self.push(format!("{name}.conv2.bias"), vec![cout]),
            a2: self.push(format!("{name}.prelu2.slope"), vec![cout]),
        }
    }
}

impl UNetLayout {
    pub fn new(config: &UNetConfig) -> Result<Self> {
        config.validate()?;
        let mut b = Builder {
            tensors: Vec::new(),
            offset: 0,
        };
        let w = config.widths;
        let encoders = (0..LEVELS)
            .map(|l| {
                b.block(
                    &format!("enc{l}"),
                    if l == 0 { config.in_channels } else { w[l - 1] },
                    w[l],
                )
            })
            .collect();
        let bottleneck = b.block("bottleneck", w[LEVELS - 1], config.bottleneck);
        let mut decoders: Vec<Block> = (0..LEVELS)
            .rev()
            .map(|l| {
                let below = if l == LEVELS - 1 { config.bottleneck } else { w[l + 1] };
                b.block(&format!("dec{l}"), below + w[l], w[l])
            })
            .collect();
        decoders.reverse();
        let proj_w = b.push("proj.kernel".into(), vec![1, 1, w[0], 1]);
        let proj_b = b.push("proj.bias".into(), vec![1]);
        Ok(Self {
            encoders,
            bottleneck,
            decoders,
            proj_w,
            proj_b,
            tensors: b.tensors,
            total: b.offset,
        })
    }

    pub fn tensors(&self) -> &[ParamTensor] {
        &self.tensors
    }

    pub fn total(&self) -> usize {
        self.total
    }
}

/// Draws `len` values from `N(0, 2 / fan_in)`.
pub fn he_normal_init(len: usize, fan_in: usize, seed: u64, stream: u64) -> Vec<f64> {
    let std = (2.0 / fan_in as f64).sqrt();
    let dist = Normal::new(0.0, std).expect("finite standard deviation");
    let mut rng = stream_rng(seed, stream);
    (0..len).map(|_| dist.sample(&mut rng)).collect()
}

/// Initial PReLU slope.
pub const INITIAL_SLOPE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct UNetParams {
    config: UNetConfig,
    layout: UNetLayout,
    values: Vec<f64>,
}

struct BlockCache {
    x: Tensor3,
    z1: Tensor3,
    a1: Tensor3,
    z2: Tensor3,
}

/// Intermediate activations kept for the backward pass.
pub struct ForwardCache {
    n: usize,
    m: usize,
    padded: (usize, usize),
    encoders: Vec<BlockCache>,
    skip_channels: Vec<usize>,
    pools: Vec<(Vec<usize>, (usize, usize, usize))>,
    bottleneck: BlockCache,
    decoders: Vec<BlockCache>,
    proj_in: Tensor3,
}

impl UNetParams {
    /// He-normal kernels, zero biases, PReLU slopes at [`INITIAL_SLOPE`].
    pub fn init(config: &UNetConfig, seed: u64) -> Result<Self> {
        let layout = UNetLayout::new(config)?;
        let mut values = vec![0.0; layout.total];
        for (idx, t) in layout.tensors.iter().enumerate() {
            let dst = &mut values[t.range.clone()];
            if t.name.ends_with("kernel") {
                let fan_in = t.shape[0] * t.shape[1] * t.shape[2];
                dst.copy_from_slice(&he_normal_init(dst.len(), fan_in, seed, idx as u64));
            } else if t.name.ends_with("slope") {
                dst.fill(INITIAL_SLOPE);
            }
        }
        Ok(Self {
            config: *config,
            layout,
            values,
        })
    }

    pub fn from_values(config: &UNetConfig, values: Vec<f64>) -> Result<Self> {
        let layout = UNetLayout::new(config)?;
        if values.len() != layout.total {
            return Err(shape(format!(
                "{} parameters, network needs {}",
                values.len(),
                layout.total
            )));
        }
        Ok(Self {
            config: *config,
            layout,
            values,
        })
    }

    pub fn config(&self) -> &UNetConfig {
        &self.config
    }

    pub fn layout(&self) -> &UNetLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_input(&self, input: &Tensor3) -> Result<()> {
        if input.d3() != self.config.in_channels {
            return Err(shape(format!(
                "input has {} channels, network expects {}",
                input.d3(),
                self.config.in_channels
            )));
        }
        if input.d1() == 0 || input.d2() == 0 {
            return Err(shape("empty network input"));
        }
        Ok(())
    }

    fn block_forward(&self, b: &Block, x: Tensor3) -> Result<(Tensor3, BlockCache)> {
        let p = &self.values;
        let z1 = conv_forward(&x, &p[b.w1.clone()], &p[b.b1.clone()], 3)?;
        let a1 = prelu_forward(&z1, &p[b.a1.clone()])?;
        let z2 = conv_forward(&a1, &p[b.w2.clone()], &p[b.b2.clone()], 3)?;
        let out = prelu_forward(&z2, &p[b.a2.clone()])?;
        Ok((out, BlockCache { x, z1, a1, z2 }))
    }

    fn block_backward(&self, b: &Block, c: &BlockCache, dout: &Tensor3, grads: &mut [f64]) -> Result<Tensor3> {
        let p = &self.values;
        let dz2 = prelu_backward(&c.z2, &p[b.a2.clone()], dout, &mut grads[b.a2.clone()])?;
        let (dw2, db2) = grads[b.w2.start..b.b2.end].split_at_mut(b.w2.len());
        let da1 = conv_backward(&c.a1, &p[b.w2.clone()], 3, &dz2, dw2, db2)?;
        let dz1 = prelu_backward(&c.z1, &p[b.a1.clone()], &da1, &mut grads[b.a1.clone()])?;
        let (dw1, db1) = grads[b.w1.start..b.b1.end].split_at_mut(b.w1.len());
        conv_backward(&c.x, &p[b.w1.clone()], 3, &dz1, dw1, db1)
    }

    /// Predicted line of length `input.d1()`.
    pub fn forward(&self, input: &Tensor3) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn forward_cached(&self, input: &Tensor3) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(input)?;
        let (n, m) = (input.d1(), input.d2());
        let padded = self.config.padded_dims(n, m);
        let lateral = self.config.pool_lateral;

        let mut x = input.padded(padded.0, padded.1);
        let mut encoders = Vec::with_capacity(LEVELS);
        let mut skips = Vec::with_capacity(LEVELS);
        let mut pools = Vec::with_capacity(LEVELS);
        for b in &self.layout.encoders {
            let (out, cache) = self.block_forward(b, x)?;
            let (pooled, arg) = maxpool_forward(&out, lateral)?;
            pools.push((arg, out.dims()));
            encoders.push(cache);
            skips.push(out);
            x = pooled;
        }
        let (mut y, bottleneck) = self.block_forward(&self.layout.bottleneck, x)?;
        let skip_channels: Vec<usize> = skips.iter().map(|s| s.d3()).collect();
        let mut decoders: Vec<Option<BlockCache>> = (0..LEVELS).map(|_| None).collect();
        for l in (0..LEVELS).rev() {
            let up = upsample_forward(&y, lateral);
            let cat = concat_channels(&up, &skips[l])?;
            let (out, cache) = self.block_forward(&self.layout.decoders[l], cat)?;
            decoders[l] = Some(cache);
            y = out;
        }
        let p = &self.values;
        let proj = conv_forward(&y, &p[self.layout.proj_w.clone()], &p[self.layout.proj_b.clone()], 1)?;
        let out = sum_reduce(&proj.cropped(n, m))?;
        let cache = ForwardCache {
            n,
            m,
            padded,
            encoders,
            skip_channels,
            pools,
            bottleneck,
            decoders: decoders.into_iter().map(|c| c.expect("every level ran")).collect(),
            proj_in: y,
        };
        Ok((out, cache))
    }

    /// Parameter gradient for the upstream gradient `dout` of the output.
    pub fn backward(&self, cache: &ForwardCache, dout: &[f64]) -> Result<Vec<f64>> {
        if dout.len() != cache.n {
            return Err(shape(format!(
                "{} output gradients for {} outputs",
                dout.len(),
                cache.n
            )));
        }
        let lateral = self.config.pool_lateral;
        let mut grads = vec![0.0; self.layout.total];
        let dproj = sum_reduce_backward(dout, cache.m).padded(cache.padded.0, cache.padded.1);
        let (dw, db) = grads[self.layout.proj_w.start..self.layout.proj_b.end].split_at_mut(self.layout.proj_w.len());
        let mut dy = conv_backward(
            &cache.proj_in,
            &self.values[self.layout.proj_w.clone()],
            1,
            &dproj,
            dw,
            db,
        )?;

        let mut dskips: Vec<Option<Tensor3>> = (0..LEVELS).map(|_| None).collect();
        for (l, slot) in dskips.iter_mut().enumerate() {
            let dcat = self.block_backward(&self.layout.decoders[l], &cache.decoders[l], &dy, &mut grads)?;
            let up_channels = dcat.d3() - cache.skip_channels[l];
            let (dup, dskip) = split_channels(&dcat, up_channels)?;
            *slot = Some(dskip);
            dy = upsample_backward(&dup, lateral)?;
        }
        let mut dx = self.block_backward(&self.layout.bottleneck, &cache.bottleneck, &dy, &mut grads)?;
        for l in (0..LEVELS).rev() {
            let (arg, dims) = &cache.pools[l];
            let mut dout_l = maxpool_backward(&dx, arg, *dims)?;
            let ds = dskips[l].take().expect("filled above");
            dout_l.data_mut().iter_mut().zip(ds.data()).for_each(|(a, b)| *a += b);
            dx = self.block_backward(&self.layout.encoders[l], &cache.encoders[l], &dout_l, &mut grads)?;
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradcheck;

    #[test]
    fn layout_is_consistent() {
        let cfg = UNetConfig::standard(false);
        let layout = UNetLayout::new(&cfg).unwrap();
        let mut next = 0;
        for t in layout.tensors() {
            assert_eq!(t.range.start, next);
            assert_eq!(t.range.len(), t.shape.iter().product::<usize>());
            next = t.range.end;
        }
        assert_eq!(next, layout.total());
        let dec0 = layout.tensors().iter().find(|t| t.name == "dec0.conv1.kernel").unwrap();
        assert_eq!(dec0.shape, vec![3, 3, 32 + 16, 16]);
        let dec2 = layout.tensors().iter().find(|t| t.name == "dec2.conv1.kernel").unwrap();
        assert_eq!(dec2.shape, vec![3, 3, 128 + 64, 64]);
    }

    #[test]
    fn zero_input_and_zero_biases_give_zero_output() {
        let cfg = UNetConfig {
            in_channels: 3,
            widths: [4, 4, 8],
            bottleneck: 8,
            pool_lateral: false,
        };
        let net = UNetParams::init(&cfg, 3).unwrap();
        let out = net.forward(&Tensor3::zeros(37, 5, 3)).unwrap();
        assert_eq!(out.len(), 37);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_length_matches_depth() {
        for lateral in [false, true] {
            let cfg = UNetConfig {
                in_channels: 3,
                widths: [2, 2, 2],
                bottleneck: 2,
                pool_lateral: lateral,
            };
            let net = UNetParams::init(&cfg, 1).unwrap();
            for (n, m) in [(1918, 3), (400, 6), (9, 1)] {
                let x = gradcheck::random_tensor(n, m, 3, 5, 0.0);
                let y = net.forward(&x).unwrap();
                assert_eq!(y.len(), n);
                assert!(y.iter().all(|v| v.is_finite()));
            }
        }
        let net = UNetParams::init(&UNetConfig::standard(false), 1).unwrap();
        assert!(net.forward(&Tensor3::zeros(8, 2, 2)).is_err());
    }

    #[test]
    fn initialization_is_reproducible() {
        let cfg = UNetConfig::standard(true);
        assert_eq!(UNetParams::init(&cfg, 11).unwrap(), UNetParams::init(&cfg, 11).unwrap());
        assert_ne!(
            UNetParams::init(&cfg, 11).unwrap().values(),
            UNetParams::init(&cfg, 12).unwrap().values()
        );
    }

    #[test]
    fn he_normal_moments() {
        let fan_in = 3 * 3 * 16;
        let draws = he_normal_init(100_000, fan_in, 42, 0);
        assert_eq!(draws, he_normal_init(100_000, fan_in, 42, 0));
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let std = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let expected = (2.0 / fan_in as f64).sqrt();
        assert!((std / expected - 1.0).abs() < 0.05);
        assert!(mean.abs() < 3.0 * expected / n.sqrt());
    }

    #[test]
    fn network_gradient_matches_finite_differences() {
        for lateral in [false, true] {
            let err = gradcheck::network_check(lateral, 17);
            assert!(err < 1e-5, "lateral={lateral}: relative error {err:e}");
        }
    }
}
