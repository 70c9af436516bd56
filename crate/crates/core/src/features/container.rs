//! "SJFM" feature container.
//!
//! Layout (little-endian): magic `SJFM`, version `u32`, kind `u8`,
//! n_frames `u32`, dims `u32`, then `n_frames * dims` `f32` values row-major.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use super::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"SJFM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 4 + 4;

fn malformed(reason: impl Into<String>) -> Error {
    Error::Format {
        what: "SJFM container",
        reason: reason.into(),
    }
}

pub fn encode<T: Scalar>(kind: FeatureKind, data: ArrayView2<T>) -> Vec<u8> {
    let (rows, cols) = data.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind.code());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in data.iter() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out
}

pub fn decode<T: Scalar>(bytes: &[u8]) -> Result<(FeatureKind, Array2<T>)> {
    if bytes.len() < HEADER_LEN {
        return Err(malformed("truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let kind = FeatureKind::from_code(bytes[8])
        .ok_or_else(|| malformed(format!("unknown kind code {}", bytes[8])))?;
    let rows = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[13..17].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != rows * cols * 4 {
        return Err(malformed(format!(
            "payload of {} bytes, expected {} for {rows}x{cols}",
            payload.len(),
            rows * cols * 4
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| T::lit(f32::from_le_bytes(c.try_into().unwrap()) as f64))
        .collect();
    let data = Array2::from_shape_vec((rows, cols), values).map_err(|e| malformed(e.to_string()))?;
    Ok((kind, data))
}

pub fn write<T: Scalar>(path: impl AsRef<Path>, features: &FeatureMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(features.kind, features.data.view())).map_err(|e| Error::io(path, e))
}

pub fn read<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureMatrix<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (kind, data) = decode(&bytes)?;
    Ok(FeatureMatrix::new(data, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_bytes() {
        let m = Array2::from_shape_vec((2, 3), vec![1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = encode(FeatureKind::Ibm, m.view());
        assert_eq!(&b[..4], b"SJFM");
        assert_eq!(&b[4..8], &[1, 0, 0, 0]);
        assert_eq!(b[8], 2);
        assert_eq!(&b[9..13], &[2, 0, 0, 0]);
        assert_eq!(&b[13..17], &[3, 0, 0, 0]);
        assert_eq!(&b[17..21], &1.0f32.to_le_bytes());
        assert_eq!(&b[37..41], &6.0f32.to_le_bytes());
        assert_eq!(b.len(), 17 + 24);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let m = Array2::<f32>::zeros((2, 2));
        let good = encode(FeatureKind::Lps, m.view());
        assert!(decode::<f32>(&good[..10]).is_err());
        assert!(decode::<f32>(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode::<f32>(&bad).is_err());
        let mut bad = good.clone();
        bad[8] = 9;
        assert!(decode::<f32>(&bad).is_err());
        let mut bad = good;
        bad[4] = 2;
        assert!(decode::<f32>(&bad).is_err());
    }

    proptest! {
        #[test]
        fn f32_values_round_trip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
            let data = Array2::from_shape_fn((rows, cols), |(i, j)| {
                f32::from_bits(((seed as u32) ^ (i * 31 + j) as u32) & 0x3FFF_FFFF)
            });
            let (kind, back) = decode::<f32>(&encode(FeatureKind::Mfcc, data.view())).unwrap();
            prop_assert_eq!(kind, FeatureKind::Mfcc);
            prop_assert_eq!(back, data);
        }
    }
}
