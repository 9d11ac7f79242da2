use crate::error::{shape, Result};

/// Dense `d1 x d2 x d3` tensor stored channels-last: element `(i, j, c)`
/// lives at `(i * d2 + j) * d3 + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    d1: usize,
    d2: usize,
    d3: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d1: usize, d2: usize, d3: usize) -> Self {
        Self {
            d1,
            d2,
            d3,
            data: vec![0.0; d1 * d2 * d3],
        }
    }

    pub fn from_vec(d1: usize, d2: usize, d3: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != d1 * d2 * d3 {
            return Err(shape(format!("{} values for a {d1}x{d2}x{d3} tensor", data.len())));
        }
        Ok(Self { d1, d2, d3, data })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d1, self.d2, self.d3)
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn d3(&self) -> usize {
        self.d3
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, c: usize) -> usize {
        (i * self.d2 + j) * self.d3 + c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[self.index(i, j, c)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f64) {
        let k = self.index(i, j, c);
        self.data[k] = v;
    }

    /// All channels at position `(i, j)`.
    #[inline]
    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let s = (i * self.d2 + j) * self.d3;
        &self.data[s..s + self.d3]
    }

    #[inline]
    pub fn pixel_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let s = (i * self.d2 + j) * self.d3;
        &mut self.data[s..s + self.d3]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Zero-extends dims 1 and 2 to at least `d1 x d2`.
    pub fn padded(&self, d1: usize, d2: usize) -> Tensor3 {
        let (d1, d2) = (d1.max(self.d1), d2.max(self.d2));
        if (d1, d2) == (self.d1, self.d2) {
            return self.clone();
        }
        let mut out = Tensor3::zeros(d1, d2, self.d3);
        for i in 0..self.d1 {
            let src = &self.data[i * self.d2 * self.d3..(i + 1) * self.d2 * self.d3];
            let dst = (i * d2) * self.d3;
            out.data[dst..dst + src.len()].copy_from_slice(src);
        }
        out
    }

    /// Keeps the leading `d1 x d2` block.
    pub fn cropped(&self, d1: usize, d2: usize) -> Tensor3 {
        let (d1, d2) = (d1.min(self.d1), d2.min(self.d2));
        let mut out = Tensor3::zeros(d1, d2, self.d3);
        for i in 0..d1 {
            let src = (i * self.d2) * self.d3;
            let dst = (i * d2) * self.d3;
            out.data[dst..dst + d2 * self.d3].copy_from_slice(&self.data[src..src + d2 * self.d3]);
        }
        out
    }
}
