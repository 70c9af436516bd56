use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `2595 log10(1 + f / 700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with centres equally spaced on the mel scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MelBank<T> {
    /// `n_mels x (fft_size / 2 + 1)`.
    pub filters: Array2<T>,
    pub n_mels: usize,
    pub f_low: f64,
    pub f_high: f64,
    centers_hz: Vec<f64>,
}

impl<T: Scalar> MelBank<T> {
    pub fn new(n_mels: usize, fft_size: usize, sample_rate: u32, f_low: f64, f_high: f64) -> Result<Self> {
        let nyquist = sample_rate as f64 / 2.0;
        if n_mels == 0 {
            return Err(Error::InvalidInput("n_mels must be at least 1".into()));
        }
        if fft_size < 2 {
            return Err(Error::InvalidInput(format!("fft_size {fft_size} too small")));
        }
        if !(0.0 <= f_low && f_low < f_high && f_high <= nyquist) {
            return Err(Error::InvalidInput(format!(
                "mel bank needs 0 <= f_low ({f_low}) < f_high ({f_high}) <= {nyquist}"
            )));
        }
        let n_bins = fft_size / 2 + 1;
        let (lo, hi) = (hz_to_mel(f_low), hz_to_mel(f_high));
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let mut filters = Array2::zeros((n_mels, n_bins));
        for m in 0..n_mels {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            for b in 0..n_bins {
                let f = b as f64 * bin_hz;
                let w = if f > left && f <= center {
                    (f - left) / (center - left)
                } else if f > center && f < right {
                    (right - f) / (right - center)
                } else {
                    0.0
                };
                filters[[m, b]] = T::lit(w);
            }
            if filters.row(m).iter().all(|&w| w <= T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; use fewer filters or a larger FFT"
                )));
            }
        }
        Ok(Self {
            filters,
            n_mels,
            f_low,
            f_high,
            centers_hz: edges[1..=n_mels].to_vec(),
        })
    }

    pub fn n_bins(&self) -> usize {
        self.filters.ncols()
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_scale_points() {
        assert_eq!(hz_to_mel(0.0), 0.0);
        assert!((hz_to_mel(700.0) - 781.1728387480312).abs() < 1e-9);
        assert!((mel_to_hz(hz_to_mel(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn default_bank_shape() {
        let bank = MelBank::<f64>::new(40, 512, 16000, 0.0, 8000.0).unwrap();
        assert_eq!(bank.filters.dim(), (40, 257));
        for (m, row) in bank.filters.rows().into_iter().enumerate() {
            assert!(row.sum() > 0.0, "filter {m}");
            assert!(row.iter().all(|&w| w >= 0.0));
            // unimodal: non-decreasing then non-increasing
            let peak = row
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc })
                .0;
            assert!(row.iter().take(peak + 1).collect::<Vec<_>>().windows(2).all(|p| p[0] <= p[1]));
            assert!(row.iter().skip(peak).collect::<Vec<_>>().windows(2).all(|p| p[0] >= p[1]));
        }
        assert!(bank.centers_hz().windows(2).all(|c| c[0] < c[1]));
        // adjacent filters overlap
        for m in 0..39 {
            let overlap = bank
                .filters
                .row(m)
                .iter()
                .zip(bank.filters.row(m + 1).iter())
                .any(|(&a, &b)| a > 0.0 && b > 0.0);
            assert!(overlap, "filters {m} and {}", m + 1);
        }
    }

    #[test]
    fn invalid_bounds() {
        assert!(MelBank::<f32>::new(40, 512, 16000, 100.0, 100.0).is_err());
        assert!(MelBank::<f32>::new(40, 512, 16000, 0.0, 9000.0).is_err());
        assert!(MelBank::<f32>::new(40, 512, 16000, -1.0, 8000.0).is_err());
        assert!(MelBank::<f32>::new(0, 512, 16000, 0.0, 8000.0).is_err());
        assert!(MelBank::<f32>::new(200, 64, 16000, 0.0, 8000.0).is_err());
    }
}
