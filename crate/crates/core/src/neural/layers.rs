//! Forward and backward passes of the network's building blocks. Backward
//! functions accumulate parameter gradients into caller-owned buffers and
//! return the gradient with respect to the layer input.

use super::tensor::Tensor3;
use crate::error::{invalid, shape, Result};

fn check_conv(x: &Tensor3, kernel: &[f64], bias: &[f64], size: usize) -> Result<()> {
    if size.is_multiple_of(2) {
        return Err(invalid(format!("kernel size {size} must be odd")));
    }
    let expected = size * size * x.d3() * bias.len();
    if kernel.len() != expected {
        return Err(invalid(format!(
            "kernel has {} values, expected {size}x{size}x{}x{}",
            kernel.len(),
            x.d3(),
            bias.len()
        )));
    }
    Ok(())
}

/// Rows of `[d1 * d2][size * size * c]` holding each pixel's zero-padded
/// neighbourhood, ordered like the kernel taps.
fn im2col(x: &Tensor3, size: usize) -> Vec<f64> {
    let (d1, d2, c) = x.dims();
    let r = size / 2;
    let k = size * size * c;
    let src = x.data();
    let mut cols = vec![0.0; d1 * d2 * k];
    for i in 0..d1 {
        for di in 0..size {
            let Some(ii) = (i + di).checked_sub(r).filter(|&v| v < d1) else {
                continue;
            };
            for dj in 0..size {
                let lo = r.saturating_sub(dj);
                let hi = (d2 + r).saturating_sub(dj).min(d2);
                for j in lo..hi {
                    let jj = j + dj - r;
                    let dst = ((i * d2 + j) * k) + (di * size + dj) * c;
                    let s = (ii * d2 + jj) * c;
                    cols[dst..dst + c].copy_from_slice(&src[s..s + c]);
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`].
fn col2im(cols: &[f64], d1: usize, d2: usize, c: usize, size: usize) -> Tensor3 {
    let r = size / 2;
    let k = size * size * c;
    let mut out = vec![0.0; d1 * d2 * c];
    for i in 0..d1 {
        for di in 0..size {
            let Some(ii) = (i + di).checked_sub(r).filter(|&v| v < d1) else {
                continue;
            };
            for dj in 0..size {
                let lo = r.saturating_sub(dj);
                let hi = (d2 + r).saturating_sub(dj).min(d2);
                for j in lo..hi {
                    let jj = j + dj - r;
                    let s = ((i * d2 + j) * k) + (di * size + dj) * c;
                    let d = (ii * d2 + jj) * c;
                    out[d..d + c].iter_mut().zip(&cols[s..s + c]).for_each(|(o, v)| *o += v);
                }
            }
        }
    }
    Tensor3::from_vec(d1, d2, c, out).expect("sizes agree")
}

/// `c = alpha * a * b + beta * c` on row-major buffers, with optional
/// transposes given through the strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: callers pass buffers of at least m*k, k*n and m*n values
    // laid out according to the given strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Calls `f(i, ii, tap, dj, lo, hi)` for every output row `i`, in-bounds
/// input row `ii` and kernel tap, with the output columns `lo..hi` whose
/// input column `j + dj - size / 2` lies inside the image.
fn for_each_tap(d1: usize, d2: usize, size: usize, mut f: impl FnMut(usize, usize, usize, usize, usize, usize)) {
    let r = size / 2;
    for i in 0..d1 {
        for di in 0..size {
            let Some(ii) = (i + di).checked_sub(r).filter(|&v| v < d1) else {
                continue;
            };
            for dj in 0..size {
                let lo = r.saturating_sub(dj);
                let hi = (d2 + r).saturating_sub(dj).min(d2);
                f(i, ii, di * size + dj, dj, lo, hi);
            }
        }
    }
}

fn direct_forward<const CO: usize>(x: &Tensor3, kernel: &[f64], size: usize, out: &mut [f64]) {
    let (d1, d2, cin) = x.dims();
    let r = size / 2;
    let xd = x.data();
    for_each_tap(d1, d2, size, |i, ii, tap, dj, lo, hi| {
        let w = &kernel[tap * cin * CO..(tap + 1) * cin * CO];
        for j in lo..hi {
            let xs = &xd[(ii * d2 + j + dj - r) * cin..][..cin];
            let o: &mut [f64; CO] = (&mut out[(i * d2 + j) * CO..][..CO]).try_into().expect("CO values");
            for (&xv, wr) in xs.iter().zip(w.chunks_exact(CO)) {
                for (ov, &wv) in o.iter_mut().zip(wr) {
                    *ov += xv * wv;
                }
            }
        }
    });
}

fn direct_backward<const CO: usize>(
    x: &Tensor3,
    kernel: &[f64],
    size: usize,
    g: &[f64],
    dkernel: &mut [f64],
    dx: &mut [f64],
) {
    let (d1, d2, cin) = x.dims();
    let r = size / 2;
    let xd = x.data();
    for_each_tap(d1, d2, size, |i, ii, tap, dj, lo, hi| {
        let w = &kernel[tap * cin * CO..(tap + 1) * cin * CO];
        let dw = &mut dkernel[tap * cin * CO..(tap + 1) * cin * CO];
        for j in lo..hi {
            let gs: &[f64; CO] = g[(i * d2 + j) * CO..][..CO].try_into().expect("CO values");
            let at = (ii * d2 + j + dj - r) * cin;
            let xs = &xd[at..at + cin];
            let dxs = &mut dx[at..at + cin];
            for ci in 0..cin {
                let wr = &w[ci * CO..(ci + 1) * CO];
                let dwr = &mut dw[ci * CO..(ci + 1) * CO];
                let xv = xs[ci];
                let mut acc = 0.0;
                for co in 0..CO {
                    dwr[co] += xv * gs[co];
                    acc += wr[co] * gs[co];
                }
                dxs[ci] += acc;
            }
        }
    });
}

/// Narrow layers are memory-bound under im2col; they run as direct loops.
fn narrow(cout: usize) -> bool {
    matches!(cout, 1 | 2 | 4 | 8 | 16)
}

/// Same-padded 2-D cross-correlation over dims 1-2. `kernel` is laid out
/// `[size][size][c_in][c_out]`, `bias` has `c_out` entries.
pub fn conv_forward(x: &Tensor3, kernel: &[f64], bias: &[f64], size: usize) -> Result<Tensor3> {
    check_conv(x, kernel, bias, size)?;
    let (d1, d2, cin) = x.dims();
    let cout = bias.len();
    let p = d1 * d2;
    let k = size * size * cin;
    let mut out: Vec<f64> = bias.iter().copied().cycle().take(p * cout).collect();
    if size > 1 && narrow(cout) {
        match cout {
            1 => direct_forward::<1>(x, kernel, size, &mut out),
            2 => direct_forward::<2>(x, kernel, size, &mut out),
            4 => direct_forward::<4>(x, kernel, size, &mut out),
            8 => direct_forward::<8>(x, kernel, size, &mut out),
            _ => direct_forward::<16>(x, kernel, size, &mut out),
        }
        return Tensor3::from_vec(d1, d2, cout, out);
    }
    let cols;
    let a = if size == 1 {
        x.data()
    } else {
        cols = im2col(x, size);
        &cols
    };
    gemm(p, k, cout, a, (k, 1), kernel, (cout, 1), 1.0, &mut out);
    Tensor3::from_vec(d1, d2, cout, out)
}

/// Gradients of [`conv_forward`]. Accumulates into `dkernel` and `dbias`;
/// returns the input gradient.
pub fn conv_backward(
    x: &Tensor3,
    kernel: &[f64],
    size: usize,
    dy: &Tensor3,
    dkernel: &mut [f64],
    dbias: &mut [f64],
) -> Result<Tensor3> {
    check_conv(x, kernel, dbias, size)?;
    let (d1, d2, cin) = x.dims();
    let cout = dbias.len();
    if dy.dims() != (d1, d2, cout) || dkernel.len() != kernel.len() {
        return Err(shape("convolution gradient buffers do not match the layer"));
    }
    let p = d1 * d2;
    let k = size * size * cin;
    let g = dy.data();
    for px in g.chunks_exact(cout) {
        dbias.iter_mut().zip(px).for_each(|(b, v)| *b += v);
    }
    if size > 1 && narrow(cout) {
        let mut dx = vec![0.0; p * cin];
        match cout {
            1 => direct_backward::<1>(x, kernel, size, g, dkernel, &mut dx),
            2 => direct_backward::<2>(x, kernel, size, g, dkernel, &mut dx),
            4 => direct_backward::<4>(x, kernel, size, g, dkernel, &mut dx),
            8 => direct_backward::<8>(x, kernel, size, g, dkernel, &mut dx),
            _ => direct_backward::<16>(x, kernel, size, g, dkernel, &mut dx),
        }
        return Tensor3::from_vec(d1, d2, cin, dx);
    }
    let cols;
    let a = if size == 1 {
        x.data()
    } else {
        cols = im2col(x, size);
        &cols
    };
    gemm(k, p, cout, a, (1, k), g, (cout, 1), 1.0, dkernel);
    let mut dcols = vec![0.0; p * k];
    gemm(p, cout, k, g, (cout, 1), kernel, (1, cout), 0.0, &mut dcols);
    if size == 1 {
        return Tensor3::from_vec(d1, d2, cin, dcols);
    }
    Ok(col2im(&dcols, d1, d2, cin, size))
}

fn check_slopes(x: &Tensor3, slopes: &[f64]) -> Result<()> {
    if slopes.len() != x.d3() {
        return Err(invalid(format!("{} slopes for {} channels", slopes.len(), x.d3())));
    }
    Ok(())
}

/// `y = x` for `x >= 0`, `a_c x` otherwise.
pub fn prelu_forward(x: &Tensor3, slopes: &[f64]) -> Result<Tensor3> {
    check_slopes(x, slopes)?;
    let (d1, d2, c) = x.dims();
    let data = x
        .data()
        .chunks_exact(c)
        .flat_map(|px| px.iter().zip(slopes).map(|(&v, &a)| if v >= 0.0 { v } else { a * v }))
        .collect();
    Tensor3::from_vec(d1, d2, c, data)
}

pub fn prelu_backward(x: &Tensor3, slopes: &[f64], dy: &Tensor3, dslopes: &mut [f64]) -> Result<Tensor3> {
    check_slopes(x, slopes)?;
    if dy.dims() != x.dims() || dslopes.len() != slopes.len() {
        return Err(shape("activation gradient buffers do not match the layer"));
    }
    let c = x.d3();
    let mut dx = Tensor3::zeros(x.d1(), x.d2(), c);
    for ((px, gx), dpx) in x
        .data()
        .chunks_exact(c)
        .zip(dy.data().chunks_exact(c))
        .zip(dx.data_mut().chunks_exact_mut(c))
    {
        for ch in 0..c {
            if px[ch] >= 0.0 {
                dpx[ch] = gx[ch];
            } else {
                dpx[ch] = slopes[ch] * gx[ch];
                dslopes[ch] += px[ch] * gx[ch];
            }
        }
    }
    Ok(dx)
}

/// Factor-2 max pooling along d1, and along d2 as well when `lateral`.
/// Returns the pooled tensor and, per output element, the flat input index
/// of the selected maximum (first one on ties).
pub fn maxpool_forward(x: &Tensor3, lateral: bool) -> Result<(Tensor3, Vec<usize>)> {
    let (d1, d2, c) = x.dims();
    if d1 % 2 != 0 || (lateral && d2 % 2 != 0) {
        return Err(invalid(format!("cannot pool a {d1}x{d2} grid by 2")));
    }
    let f2 = if lateral { 2 } else { 1 };
    let (o1, o2) = (d1 / 2, d2 / f2);
    let mut out = Tensor3::zeros(o1, o2, c);
    let mut arg = vec![0usize; o1 * o2 * c];
    for i in 0..o1 {
        for j in 0..o2 {
            for ch in 0..c {
                let mut best = x.index(2 * i, f2 * j, ch);
                for (a, b) in [(0, 1), (1, 0), (1, 1)] {
                    if b == 1 && !lateral {
                        continue;
                    }
                    let k = x.index(2 * i + a, f2 * j + b, ch);
                    if x.data()[k] > x.data()[best] {
                        best = k;
                    }
                }
                let o = out.index(i, j, ch);
                out.data_mut()[o] = x.data()[best];
                arg[o] = best;
            }
        }
    }
    Ok((out, arg))
}

pub fn maxpool_backward(dy: &Tensor3, argmax: &[usize], input_dims: (usize, usize, usize)) -> Result<Tensor3> {
    if argmax.len() != dy.len() {
        return Err(shape("pooling gradient does not match the recorded selection"));
    }
    let mut dx = Tensor3::zeros(input_dims.0, input_dims.1, input_dims.2);
    for (&k, &g) in argmax.iter().zip(dy.data()) {
        dx.data_mut()[k] += g;
    }
    Ok(dx)
}

/// Nearest-neighbour factor-2 upsampling along d1 (and d2 when `lateral`).
pub fn upsample_forward(x: &Tensor3, lateral: bool) -> Tensor3 {
    let (d1, d2, c) = x.dims();
    let f2 = if lateral { 2 } else { 1 };
    let mut out = Tensor3::zeros(2 * d1, f2 * d2, c);
    for i in 0..2 * d1 {
        for j in 0..f2 * d2 {
            out.pixel_mut(i, j).copy_from_slice(x.pixel(i / 2, j / f2));
        }
    }
    out
}

pub fn upsample_backward(dy: &Tensor3, lateral: bool) -> Result<Tensor3> {
    let (d1, d2, c) = dy.dims();
    let f2 = if lateral { 2 } else { 1 };
    if d1 % 2 != 0 || d2 % f2 != 0 {
        return Err(shape(format!("{d1}x{d2} gradient is not an upsampled grid")));
    }
    let mut dx = Tensor3::zeros(d1 / 2, d2 / f2, c);
    for i in 0..d1 {
        for j in 0..d2 {
            let g = dy.pixel(i, j);
            dx.pixel_mut(i / 2, j / f2).iter_mut().zip(g).for_each(|(d, v)| *d += v);
        }
    }
    Ok(dx)
}

/// Channel concatenation `[a | b]`.
pub fn concat_channels(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if (a.d1(), a.d2()) != (b.d1(), b.d2()) {
        return Err(shape(format!("cannot concatenate {:?} and {:?}", a.dims(), b.dims())));
    }
    let (ca, cb) = (a.d3(), b.d3());
    let data = a
        .data()
        .chunks_exact(ca)
        .zip(b.data().chunks_exact(cb))
        .flat_map(|(pa, pb)| pa.iter().chain(pb).copied())
        .collect();
    Tensor3::from_vec(a.d1(), a.d2(), ca + cb, data)
}

/// Splits a gradient of a concatenation back into its two parts.
pub fn split_channels(d: &Tensor3, first: usize) -> Result<(Tensor3, Tensor3)> {
    let (d1, d2, c) = d.dims();
    if first > c {
        return Err(shape(format!("cannot split {c} channels at {first}")));
    }
    let mut a = Vec::with_capacity(d1 * d2 * first);
    let mut b = Vec::with_capacity(d1 * d2 * (c - first));
    for px in d.data().chunks_exact(c) {
        a.extend_from_slice(&px[..first]);
        b.extend_from_slice(&px[first..]);
    }
    Ok((
        Tensor3::from_vec(d1, d2, first, a)?,
        Tensor3::from_vec(d1, d2, c - first, b)?,
    ))
}

/// `out[i] = sum_j x[i, j, 0]` for a single-channel tensor.
pub fn sum_reduce(x: &Tensor3) -> Result<Vec<f64>> {
    if x.d3() != 1 {
        return Err(invalid(format!("summation expects one channel, got {}", x.d3())));
    }
    Ok(x.data().chunks_exact(x.d2()).map(|r| r.iter().sum()).collect())
}

pub fn sum_reduce_backward(g: &[f64], d2: usize) -> Tensor3 {
    let data = g.iter().flat_map(|&v| std::iter::repeat_n(v, d2)).collect();
    Tensor3::from_vec(g.len(), d2, 1, data).expect("sizes agree by construction")
}
