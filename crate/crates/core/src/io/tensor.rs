//! `ADET` tensor files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes      | field                               |
//! |------------|-------------------------------------|
//! | 4          | magic `ADET`                        |
//! | 4          | version (`u32`, currently 1)        |
//! | 1          | dtype (`0` = f32, `1` = f64)        |
//! | 4          | ndim (`u32`)                        |
//! | 8 × ndim   | dims (`u64` each)                   |
//! | rest       | row-major payload                   |

use std::path::Path;

use crate::error::{AdeError, Result};

pub const MAGIC: &[u8; 4] = b"ADET";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32 = 0,
    F64 = 1,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(DType::F32),
            1 => Ok(DType::F64),
            other => Err(AdeError::UnsupportedDtype(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: TensorData,
}

fn element_count(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d))
}

impl Tensor {
    pub fn from_f32(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        Self::check(&dims, data.len())?;
        Ok(Tensor {
            dims,
            data: TensorData::F32(data),
        })
    }

    pub fn from_f64(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::check(&dims, data.len())?;
        Ok(Tensor {
            dims,
            data: TensorData::F64(data),
        })
    }

    fn check(dims: &[usize], len: usize) -> Result<()> {
        match element_count(dims) {
            Some(n) if n == len => Ok(()),
            _ => Err(AdeError::Shape(format!("{len} values for dims {dims:?}"))),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
        }
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn len(&self) -> usize {
        match &self.data {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let dtype = self.dtype();
        let mut out = Vec::with_capacity(13 + 8 * self.dims.len() + dtype.size() * self.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(dtype as u8);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.data {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(AdeError::format(0, format!("bad magic {magic:?}")));
        }
        let version = u32::from_le_bytes(r.take(4, "version")?.try_into().unwrap());
        if version != VERSION {
            return Err(AdeError::format(4, format!("unsupported version {version}")));
        }
        let dtype = DType::from_byte(r.take(1, "dtype")?[0])?;
        let ndim = u32::from_le_bytes(r.take(4, "ndim")?.try_into().unwrap()) as usize;
        let mut dims = Vec::with_capacity(ndim.min(64));
        for _ in 0..ndim {
            let off = r.pos as u64;
            let d = u64::from_le_bytes(r.take(8, "dims")?.try_into().unwrap());
            dims.push(usize::try_from(d).map_err(|_| AdeError::format(off, "dimension too large"))?);
        }
        let count = element_count(&dims)
            .ok_or_else(|| AdeError::format(13, "element count overflows"))?;
        let payload_start = r.pos as u64;
        let expected = count
            .checked_mul(dtype.size())
            .ok_or_else(|| AdeError::format(payload_start, "payload size overflows"))?;
        let remaining = bytes.len() - r.pos;
        if remaining != expected {
            return Err(AdeError::format(
                payload_start,
                format!("payload has {remaining} bytes, dims {dims:?} need {expected}"),
            ));
        }
        let payload = &bytes[r.pos..];
        let data = match dtype {
            DType::F32 => TensorData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::F64 => TensorData::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
        };
        Ok(Tensor { dims, data })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(AdeError::format(
                self.pos as u64,
                format!("truncated while reading {what}"),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    Tensor::from_bytes(&super::read_bytes(path)?)
}

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    super::atomic_write(path, &tensor.to_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_arithmetic() {
        let t = Tensor::from_f64(vec![1, 1], vec![0.0]).unwrap();
        assert_eq!(t.to_bytes().len(), 37);
        let t = Tensor::from_f64(vec![1], vec![0.0]).unwrap();
        assert_eq!(t.to_bytes().len(), 29);
    }

    #[test]
    fn bad_headers_are_rejected() {
        let good = Tensor::from_f32(vec![2], vec![1.0, 2.0]).unwrap().to_bytes();
        let mut b = good.clone();
        b[8] = 7;
        assert!(matches!(Tensor::from_bytes(&b), Err(AdeError::UnsupportedDtype(7))));
        let mut b = good.clone();
        b[0] = b'X';
        assert!(matches!(Tensor::from_bytes(&b), Err(AdeError::Format { offset: 0, .. })));
        let mut b = good.clone();
        b[4] = 2;
        assert!(matches!(Tensor::from_bytes(&b), Err(AdeError::Format { offset: 4, .. })));
        let b = &good[..good.len() - 1];
        assert!(matches!(Tensor::from_bytes(b), Err(AdeError::Format { .. })));
        assert!(matches!(Tensor::from_bytes(&good[..6]), Err(AdeError::Format { offset: 4, .. })));
        assert!(Tensor::from_f64(vec![2, 2], vec![0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_bitwise(dims in proptest::collection::vec(1usize..4, 1..4), seed in any::<u64>()) {
            let n: usize = dims.iter().product();
            let mut u = crate::noise::UniformStream::new(seed, 0);
            let data: Vec<f64> = (0..n).map(|_| u.next_unit() * 1e3 - 500.0).collect();
            let t = Tensor::from_f64(dims.clone(), data).unwrap();
            let back = Tensor::from_bytes(&t.to_bytes()).unwrap();
            prop_assert_eq!(back.to_bytes(), t.to_bytes());
            let t32 = Tensor::from_f32(dims, t.to_f64_vec().iter().map(|&x| x as f32).collect()).unwrap();
            prop_assert_eq!(Tensor::from_bytes(&t32.to_bytes()).unwrap(), t32);
        }
    }
}
