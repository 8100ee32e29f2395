//! Dense f32 tensors and the NCT1 binary layout.
//!
//! NCT1 (little-endian):
//! - magic `b"NCT1"`
//! - u8 dtype (1 = f32), u8 ndim, u16 reserved (zero)
//! - ndim × u64 dims
//! - row-major f32 payload

use std::io::{Read, Write};

use thiserror::Error;

pub const NCT_MAGIC: &[u8; 4] = b"NCT1";
pub const DTYPE_F32: u8 = 1;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("payload length {payload} does not match dims {dims:?}")]
    Shape { dims: Vec<usize>, payload: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self, TensorError> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(TensorError::Shape {
                dims,
                payload: data.len(),
            });
        }
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Tensor {
            dims,
            data: vec![0.0; n],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Bitwise equality (distinguishes -0.0 and NaN payloads).
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.dims == other.dims
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn write_nct<W: Write>(&self, mut w: W) -> Result<(), TensorError> {
        if self.dims.len() > u8::MAX as usize {
            return Err(TensorError::Format("too many dimensions".into()));
        }
        w.write_all(NCT_MAGIC)?;
        w.write_all(&[DTYPE_F32, self.dims.len() as u8])?;
        w.write_all(&0u16.to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_nct_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_nct(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_nct<R: Read>(mut r: R) -> Result<Self, TensorError> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)
            .map_err(|_| TensorError::Format("truncated header".into()))?;
        if &head[..4] != NCT_MAGIC {
            return Err(TensorError::Format("bad magic, expected NCT1".into()));
        }
        if head[4] != DTYPE_F32 {
            return Err(TensorError::Format(format!("unsupported dtype {}", head[4])));
        }
        let ndim = head[5] as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)
                .map_err(|_| TensorError::Format("truncated dims".into()))?;
            let d = u64::from_le_bytes(b);
            dims.push(usize::try_from(d).map_err(|_| TensorError::Format("dim overflow".into()))?);
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TensorError::Format("dims overflow".into()))?;
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() != n * 4 {
            return Err(TensorError::Format(format!(
                "payload has {} bytes, dims need {}",
                payload.len(),
                n * 4
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Tensor { dims, data })
    }

    pub fn from_nct_bytes(bytes: &[u8]) -> Result<Self, TensorError> {
        Self::read_nct(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let t = Tensor::new(vec![2, 3], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let bytes = t.to_nct_bytes();
        assert_eq!(&bytes[..4], b"NCT1");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 2);
        assert_eq!(&bytes[6..8], &[0, 0]);
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(&bytes[16..24], &3u64.to_le_bytes());
        assert_eq!(bytes.len(), 24 + 6 * 4);
        assert_eq!(&bytes[28..32], &1.0f32.to_le_bytes());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        let mut bytes = Tensor::zeros(vec![2]).to_nct_bytes();
        bytes[0] = b'X';
        assert!(matches!(Tensor::from_nct_bytes(&bytes), Err(TensorError::Format(_))));
        let bytes = Tensor::zeros(vec![4]).to_nct_bytes();
        assert!(Tensor::from_nct_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Tensor::from_nct_bytes(&bytes[..5]).is_err());
    }

    proptest! {
        #[test]
        fn nct_round_trip_is_byte_exact(
            dims in proptest::collection::vec(1usize..5, 0..4),
            seed in any::<u32>(),
        ) {
            let n: usize = dims.iter().product();
            let data: Vec<f32> = (0..n).map(|i| f32::from_bits(seed.wrapping_mul(i as u32 + 1) & 0x7f7f_ffff)).collect();
            let t = Tensor::new(dims, data).unwrap();
            let bytes = t.to_nct_bytes();
            let back = Tensor::from_nct_bytes(&bytes).unwrap();
            prop_assert!(back.bit_eq(&t));
            prop_assert_eq!(back.to_nct_bytes(), bytes);
        }
    }
}
