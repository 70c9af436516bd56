use std::fmt::Write as _;

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Running per-bin mean of `clean - estimated` LPS.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionProfile {
    sums: Vec<f64>,
    n_frames: usize,
    /// Spacing between bins in Hz, for export.
    pub bin_spacing_hz: f64,
}

impl DistortionProfile {
    pub fn new(n_bins: usize, bin_spacing_hz: f64) -> Self {
        Self {
            sums: vec![0.0; n_bins],
            n_frames: 0,
            bin_spacing_hz,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.sums.len()
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn accumulate<T: Scalar>(&mut self, clean: ArrayView2<T>, estimated: ArrayView2<T>) -> Result<()> {
        if clean.dim() != estimated.dim() {
            return Err(Error::shape(format!("{:?}", clean.dim()), format!("{:?}", estimated.dim())));
        }
        if clean.ncols() != self.n_bins() {
            return Err(Error::shape(format!("{} bins", self.n_bins()), format!("{} bins", clean.ncols())));
        }
        for (c, e) in clean.rows().into_iter().zip(estimated.rows()) {
            for (k, (a, b)) in c.iter().zip(e.iter()).enumerate() {
                self.sums[k] += a.as_f64() - b.as_f64();
            }
        }
        self.n_frames += clean.nrows();
        Ok(())
    }

    pub fn merge(&mut self, other: &DistortionProfile) -> Result<()> {
        if other.n_bins() != self.n_bins() {
            return Err(Error::shape(format!("{} bins", self.n_bins()), format!("{} bins", other.n_bins())));
        }
        self.sums.iter_mut().zip(&other.sums).for_each(|(a, b)| *a += b);
        self.n_frames += other.n_frames;
        Ok(())
    }

    /// Mean distortion per bin; zeros before anything is accumulated.
    pub fn per_bin(&self) -> Vec<f64> {
        if self.n_frames == 0 {
            return vec![0.0; self.n_bins()];
        }
        let n = self.n_frames as f64;
        self.sums.iter().map(|s| s / n).collect()
    }

    /// `bin_hz,mean_distortion` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_hz,mean_distortion\n");
        for (k, d) in self.per_bin().iter().enumerate() {
            let _ = writeln!(out, "{},{}", k as f64 * self.bin_spacing_hz, d);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{s, Array2};
    use proptest::prelude::*;

    #[test]
    fn zero_and_unit_profiles() {
        let c = Array2::from_shape_fn((7, 5), |(i, j)| (i as f64 - j as f64).sin());
        let mut p = DistortionProfile::new(5, 31.25);
        p.accumulate(c.view(), c.view()).unwrap();
        assert!(p.per_bin().iter().all(|&v| v == 0.0));
        let mut q = DistortionProfile::new(5, 31.25);
        q.accumulate(c.view(), c.mapv(|v| v - 1.0).view()).unwrap();
        assert!(q.per_bin().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert_eq!(q.n_frames(), 7);
    }

    #[test]
    fn csv_layout() {
        let mut p = DistortionProfile::new(3, 31.25);
        let c = Array2::<f64>::ones((2, 3));
        p.accumulate(c.view(), Array2::zeros((2, 3)).view()).unwrap();
        assert_eq!(p.to_csv(), "bin_hz,mean_distortion\n0,1\n31.25,1\n62.5,1\n");
    }

    #[test]
    fn mismatches() {
        let mut p = DistortionProfile::new(3, 1.0);
        let a = Array2::<f64>::zeros((2, 3));
        assert!(p.accumulate(a.view(), Array2::zeros((3, 3)).view()).is_err());
        assert!(p.accumulate(Array2::<f64>::zeros((2, 4)).view(), Array2::zeros((2, 4)).view()).is_err());
        assert!(p.merge(&DistortionProfile::new(4, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn chunked_matches_one_shot(
            vals in proptest::collection::vec((-50.0f64..10.0, -50.0f64..10.0), 4 * 6..4 * 40),
            cut in 1usize..5,
        ) {
            let n = vals.len() / 4;
            let c = Array2::from_shape_fn((n, 4), |(i, j)| vals[i * 4 + j].0);
            let e = Array2::from_shape_fn((n, 4), |(i, j)| vals[i * 4 + j].1);
            let mut whole = DistortionProfile::new(4, 1.0);
            whole.accumulate(c.view(), e.view()).unwrap();
            let cut = cut.min(n - 1);
            let mut a = DistortionProfile::new(4, 1.0);
            a.accumulate(c.slice(s![..cut, ..]), e.slice(s![..cut, ..])).unwrap();
            let mut b = DistortionProfile::new(4, 1.0);
            b.accumulate(c.slice(s![cut.., ..]), e.slice(s![cut.., ..])).unwrap();
            b.merge(&a).unwrap();
            for k in 0..4 {
                // independent oracle: direct mean per column
                let want = (0..n).map(|i| c[[i, k]] - e[[i, k]]).sum::<f64>() / n as f64;
                prop_assert!((whole.per_bin()[k] - want).abs() < 1e-12);
                prop_assert!((b.per_bin()[k] - want).abs() < 1e-12);
            }
        }
    }
}
