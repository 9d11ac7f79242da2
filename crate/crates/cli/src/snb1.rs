//! The SNB1 tensor file: `b"SNB1"`, format version (u16), dtype code (u8),
//! rank (u8), one little-endian u64 per dimension, then the row-major
//! little-endian payload. Complex values are stored as `(re, im)` pairs.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use num_complex::{Complex32, Complex64};

pub const MAGIC: &[u8; 4] = b"SNB1";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    F32 = 1,
    F64 = 2,
    C64 = 3,
    C128 = 4,
}

impl DType {
    fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            1 => DType::F32,
            2 => DType::F64,
            3 => DType::C64,
            4 => DType::C128,
            _ => bail!("unknown SNB1 dtype code {code}"),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::F32 => "f32",
            DType::F64 => "f64",
            DType::C64 => "c64",
            DType::C128 => "c128",
        }
    }

    fn width(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 | DType::C64 => 8,
            DType::C128 => 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    F32(Vec<f32>),
    F64(Vec<f64>),
    C64(Vec<Complex32>),
    C128(Vec<Complex64>),
}

impl Payload {
    pub fn dtype(&self) -> DType {
        match self {
            Payload::F32(_) => DType::F32,
            Payload::F64(_) => DType::F64,
            Payload::C64(_) => DType::C64,
            Payload::C128(_) => DType::C128,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Payload::F32(v) => v.len(),
            Payload::F64(v) => v.len(),
            Payload::C64(v) => v.len(),
            Payload::C128(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub payload: Payload,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, payload: Payload) -> Result<Self> {
        ensure!(dims.len() <= u8::MAX as usize, "rank {} exceeds 255", dims.len());
        let count: usize = dims.iter().product();
        ensure!(
            count == payload.len(),
            "dims {dims:?} hold {count} values, payload has {}",
            payload.len()
        );
        Ok(Self { dims, payload })
    }

    pub fn f64(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(dims, Payload::F64(data))
    }

    pub fn c128(dims: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        Self::new(dims, Payload::C128(data))
    }

    /// The payload as f64 values; f32 data is widened.
    pub fn into_f64(self) -> Result<(Vec<usize>, Vec<f64>)> {
        match self.payload {
            Payload::F64(v) => Ok((self.dims, v)),
            Payload::F32(v) => Ok((self.dims, v.into_iter().map(f64::from).collect())),
            p => bail!("expected a real tensor, found {}", p.dtype().name()),
        }
    }

    pub fn into_c128(self) -> Result<(Vec<usize>, Vec<Complex64>)> {
        match self.payload {
            Payload::C128(v) => Ok((self.dims, v)),
            Payload::C64(v) => Ok((
                self.dims,
                v.into_iter()
                    .map(|z| Complex64::new(z.re.into(), z.im.into()))
                    .collect(),
            )),
            p => bail!("expected a complex tensor, found {}", p.dtype().name()),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let dtype = self.payload.dtype();
        let mut out = Vec::with_capacity(8 + 8 * self.dims.len() + dtype.width() * self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(dtype as u8);
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.payload {
            Payload::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::C64(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
            Payload::C128(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        ensure!(bytes.len() >= 8 && &bytes[..4] == MAGIC, "not an SNB1 file");
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        ensure!(version == VERSION, "unsupported SNB1 version {version}");
        let dtype = DType::from_code(bytes[6])?;
        let rank = bytes[7] as usize;
        let header = 8 + 8 * rank;
        ensure!(bytes.len() >= header, "truncated SNB1 header");
        let mut dims = Vec::with_capacity(rank);
        let mut count: usize = 1;
        for i in 0..rank {
            let at = 8 + 8 * i;
            let d = u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
            let d = usize::try_from(d).context("dimension overflows usize")?;
            count = count.checked_mul(d).context("element count overflows")?;
            dims.push(d);
        }
        let body = &bytes[header..];
        let expected = count.checked_mul(dtype.width()).context("payload size overflows")?;
        ensure!(
            body.len() == expected,
            "SNB1 payload has {} bytes, dims need {expected}",
            body.len()
        );
        let payload = match dtype {
            DType::F32 => Payload::F32(
                body.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::F64 => Payload::F64(
                body.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::C64 => Payload::C64(
                body.chunks_exact(8)
                    .map(|c| {
                        Complex32::new(
                            f32::from_le_bytes(c[..4].try_into().unwrap()),
                            f32::from_le_bytes(c[4..].try_into().unwrap()),
                        )
                    })
                    .collect(),
            ),
            DType::C128 => Payload::C128(
                body.chunks_exact(16)
                    .map(|c| {
                        Complex64::new(
                            f64::from_le_bytes(c[..8].try_into().unwrap()),
                            f64::from_le_bytes(c[8..].try_into().unwrap()),
                        )
                    })
                    .collect(),
            ),
        };
        Ok(Self { dims, payload })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::decode(&bytes).with_context(|| format!("decoding {}", path.display()))
    }
}
