use ndarray::Zip;

use super::{FeatureKind, FeatureMatrix, POWER_FLOOR};
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbmConfig {
    /// A bin is speech-dominant when its local SNR is strictly greater than this.
    pub local_snr_threshold_db: f64,
}

impl Default for IbmConfig {
    fn default() -> Self {
        Self {
            local_snr_threshold_db: 0.0,
        }
    }
}

impl IbmConfig {
    pub fn new(local_snr_threshold_db: f64) -> Result<Self> {
        if !local_snr_threshold_db.is_finite() {
            return Err(Error::Config("IBM threshold must be finite".into()));
        }
        Ok(Self {
            local_snr_threshold_db,
        })
    }
}

/// Ideal binary mask from the exact clean and noise components of a mixture.
pub fn compute_ibm<T: Scalar>(
    clean: &Spectrogram<T>,
    noise: &Spectrogram<T>,
    cfg: &IbmConfig,
) -> Result<FeatureMatrix<T>> {
    if clean.frames.dim() != noise.frames.dim() {
        return Err(Error::shape(
            format!("{:?} (clean)", clean.frames.dim()),
            format!("{:?} (noise)", noise.frames.dim()),
        ));
    }
    let mut mask = ndarray::Array2::zeros(clean.frames.dim());
    Zip::from(&mut mask)
        .and(&clean.frames)
        .and(&noise.frames)
        .for_each(|m, c, n| {
            let clean_pow = c.norm_sqr().as_f64();
            let noise_pow = n.norm_sqr().as_f64().max(POWER_FLOOR);
            let snr_db = 10.0 * (clean_pow / noise_pow).log10();
            *m = if snr_db > cfg.local_snr_threshold_db {
                T::one()
            } else {
                T::zero()
            };
        });
    Ok(FeatureMatrix::new(mask, FeatureKind::Ibm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{StftConfig, WindowKind};
    use ndarray::Array2;
    use num_complex::Complex;

    fn spec(vals: &[f64]) -> Spectrogram<f64> {
        let cfg = StftConfig::new(4, 4, WindowKind::Rectangular, 4).unwrap();
        let frames = Array2::from_shape_vec(
            (1, 3),
            vals.iter().map(|&v| Complex::new(v, 0.0)).collect(),
        )
        .unwrap();
        Spectrogram::new(frames, cfg, 16000).unwrap()
    }

    #[test]
    fn boundary_and_degenerate_bins() {
        let clean = spec(&[1.0, 0.0, 0.5]);
        let noise = spec(&[1.0, 0.3, 0.0]);
        let m = compute_ibm(&clean, &noise, &IbmConfig::default()).unwrap();
        assert_eq!(m.data.row(0).to_vec(), vec![0.0, 0.0, 1.0]);
        assert_eq!(m.kind, FeatureKind::Ibm);
    }

    #[test]
    fn threshold_shifts_decision() {
        // local SNR 20*log10(2) = 6.02 dB
        let clean = spec(&[2.0, 2.0, 2.0]);
        let noise = spec(&[1.0, 1.0, 1.0]);
        let on = compute_ibm(&clean, &noise, &IbmConfig::new(6.0).unwrap()).unwrap();
        let off = compute_ibm(&clean, &noise, &IbmConfig::new(6.1).unwrap()).unwrap();
        assert!(on.data.iter().all(|&v| v == 1.0));
        assert!(off.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let cfg = StftConfig::new(4, 4, WindowKind::Rectangular, 4).unwrap();
        let a = Spectrogram::new(Array2::from_elem((2, 3), Complex::new(1.0, 0.0)), cfg, 16000).unwrap();
        let b = spec(&[1.0, 1.0, 1.0]);
        assert!(compute_ibm(&a, &b, &IbmConfig::default()).is_err());
        assert!(IbmConfig::new(f64::NAN).is_err());
    }
}
