use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::features::{container, FeatureKind, FeatureMatrix};
use crate::scalar::Scalar;

/// Lower bound on every per-dimension variance.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Global per-dimension mean and (population) variance.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats<T> {
    pub kind: FeatureKind,
    pub mean: Array1<T>,
    pub variance: Array1<T>,
}

/// Streaming accumulator for [`NormStats`] using Chan's parallel update, so
/// utterances can be pushed in any order or merged from separate workers.
#[derive(Debug, Clone)]
pub struct NormAccumulator {
    kind: Option<FeatureKind>,
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Default for NormAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl NormAccumulator {
    pub fn new() -> Self {
        Self {
            kind: None,
            count: 0,
            mean: Vec::new(),
            m2: Vec::new(),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push<T: Scalar>(&mut self, features: &FeatureMatrix<T>) -> Result<()> {
        let n = features.n_frames() as u64;
        if n == 0 {
            return Ok(());
        }
        let dims = features.dims();
        let mut part = NormAccumulator {
            kind: Some(features.kind),
            count: n,
            mean: vec![0.0; dims],
            m2: vec![0.0; dims],
        };
        for row in features.data.rows() {
            for (m, v) in part.mean.iter_mut().zip(row.iter()) {
                *m += v.as_f64();
            }
        }
        part.mean.iter_mut().for_each(|m| *m /= n as f64);
        for row in features.data.rows() {
            for ((s, m), v) in part.m2.iter_mut().zip(&part.mean).zip(row.iter()) {
                *s += (v.as_f64() - m).powi(2);
            }
        }
        self.merge(part)
    }

    pub fn merge(&mut self, other: NormAccumulator) -> Result<()> {
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other;
            return Ok(());
        }
        if self.mean.len() != other.mean.len() {
            return Err(Error::shape(
                format!("{} dims", self.mean.len()),
                format!("{} dims", other.mean.len()),
            ));
        }
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: format!("{:?}", self.kind),
                actual: format!("{:?}", other.kind),
            });
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / total;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / total;
        }
        self.count += other.count;
        Ok(())
    }

    pub fn finish<T: Scalar>(&self) -> Result<NormStats<T>> {
        if self.count < 2 {
            return Err(Error::InvalidInput(format!(
                "normalization needs at least 2 frames, got {}",
                self.count
            )));
        }
        let n = self.count as f64;
        Ok(NormStats {
            kind: self.kind.expect("kind set once frames are pushed"),
            mean: self.mean.iter().map(|&m| T::lit(m)).collect(),
            variance: self
                .m2
                .iter()
                .map(|&s| T::lit((s / n).max(VARIANCE_FLOOR)))
                .collect(),
        })
    }
}

/// Global statistics over every frame of every matrix in `features`.
pub fn fit_norm_stats<'a, T: Scalar>(
    features: impl IntoIterator<Item = &'a FeatureMatrix<T>>,
) -> Result<NormStats<T>> {
    let mut acc = NormAccumulator::new();
    for f in features {
        acc.push(f)?;
    }
    if acc.count() == 0 {
        return Err(Error::InvalidInput("no frames to fit normalization on".into()));
    }
    acc.finish()
}

impl<T: Scalar> NormStats<T> {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, data: &ArrayView2<T>) -> Result<()> {
        if data.ncols() != self.dims() {
            return Err(Error::shape(
                format!("{} dims", self.dims()),
                format!("{} dims", data.ncols()),
            ));
        }
        Ok(())
    }

    /// `(x - mean) / sqrt(variance)` per column.
    pub fn normalize(&self, data: ArrayView2<T>) -> Result<Array2<T>> {
        self.check(&data)?;
        let std = self.variance.mapv(|v| v.sqrt());
        Ok((&data - &self.mean.view().insert_axis(Axis(0))) / &std.view().insert_axis(Axis(0)))
    }

    pub fn denormalize(&self, data: ArrayView2<T>) -> Result<Array2<T>> {
        self.check(&data)?;
        let std = self.variance.mapv(|v| v.sqrt());
        Ok(&data * &std.view().insert_axis(Axis(0)) + &self.mean.view().insert_axis(Axis(0)))
    }

    /// Two-row matrix: mean, then variance.
    pub fn to_matrix(&self) -> Array2<T> {
        ndarray::stack(Axis(0), &[self.mean.view(), self.variance.view()]).expect("equal lengths")
    }

    pub fn from_matrix(kind: FeatureKind, m: ArrayView2<T>) -> Result<Self> {
        if m.nrows() != 2 {
            return Err(Error::Format {
                what: "normalization statistics",
                reason: format!("expected 2 rows, got {}", m.nrows()),
            });
        }
        let variance = m.row(1).to_owned();
        if variance.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::Format {
                what: "normalization statistics",
                reason: "non-positive variance".into(),
            });
        }
        Ok(Self {
            kind,
            mean: m.row(0).to_owned(),
            variance,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        container::encode(self.kind, self.to_matrix().view())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let (kind, m) = container::decode(bytes)?;
        Self::from_matrix(kind, m.view())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fm(rows: Vec<Vec<f64>>) -> FeatureMatrix<f64> {
        let n = rows.len();
        let d = rows[0].len();
        FeatureMatrix::new(
            Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect()).unwrap(),
            FeatureKind::Lps,
        )
    }

    #[test]
    fn constant_data_hits_floor() {
        let s: NormStats<f64> = fit_norm_stats(&[fm(vec![vec![3.0, -1.0]; 5])]).unwrap();
        assert_eq!(s.mean.to_vec(), vec![3.0, -1.0]);
        assert_eq!(s.variance.to_vec(), vec![VARIANCE_FLOOR; 2]);
    }

    #[test]
    fn population_variance() {
        let s: NormStats<f64> = fit_norm_stats(&[fm(vec![vec![0.0], vec![2.0]])]).unwrap();
        assert_eq!(s.mean[0], 1.0);
        assert_eq!(s.variance[0], 1.0);
    }

    #[test]
    fn empty_and_single_frame_rejected() {
        assert!(fit_norm_stats::<f64>(std::iter::empty()).is_err());
        assert!(fit_norm_stats(&[fm(vec![vec![1.0]])]).is_err());
    }

    #[test]
    fn normalize_known_points() {
        let s: NormStats<f64> = fit_norm_stats(&[fm(vec![vec![0.0], vec![2.0]])]).unwrap();
        let x = Array2::from_shape_vec((2, 1), vec![1.0, 2.0]).unwrap();
        assert_eq!(s.normalize(x.view()).unwrap().column(0).to_vec(), vec![0.0, 1.0]);
        assert!(s.normalize(Array2::zeros((1, 2)).view()).is_err());
    }

    #[test]
    fn persisted_as_two_row_container() {
        let s: NormStats<f32> =
            fit_norm_stats(&[fm(vec![vec![0.0, 1.0], vec![2.0, 5.0]]).cast()]).unwrap();
        let back = NormStats::<f32>::decode(&s.encode()).unwrap();
        assert_eq!(back, s);
        assert_eq!(&s.encode()[9..13], &2u32.to_le_bytes());
    }

    proptest! {
        #[test]
        fn chunking_does_not_change_stats(
            data in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 3), 2..60),
            cut in 1usize..59,
        ) {
            let cut = cut.min(data.len() - 1);
            let whole = fm(data.clone());
            let a = fm(data[..cut].to_vec());
            let b = fm(data[cut..].to_vec());
            let one: NormStats<f64> = fit_norm_stats(&[whole]).unwrap();
            let split: NormStats<f64> = fit_norm_stats(&[b, a]).unwrap();
            // one-shot oracle: direct two-pass formula
            let n = data.len() as f64;
            for d in 0..3 {
                let mean = data.iter().map(|r| r[d]).sum::<f64>() / n;
                let var = (data.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR);
                prop_assert!((one.mean[d] - mean).abs() < 1e-10);
                prop_assert!((split.mean[d] - mean).abs() < 1e-10);
                prop_assert!((split.variance[d] - var).abs() < 1e-9 * var.max(1.0));
            }
        }

        #[test]
        fn denormalize_inverts_normalize(
            data in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 4), 2..30),
        ) {
            let f = fm(data);
            let s: NormStats<f64> = fit_norm_stats(std::slice::from_ref(&f)).unwrap();
            let back = s.denormalize(s.normalize(f.data.view()).unwrap().view()).unwrap();
            for (a, b) in back.iter().zip(f.data.iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
