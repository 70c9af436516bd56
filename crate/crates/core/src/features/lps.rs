use super::{FeatureKind, FeatureMatrix, POWER_FLOOR};
use crate::dsp::Spectrogram;
use crate::error::Result;
use crate::scalar::Scalar;
use ndarray::Array2;

/// Natural-log power spectrum, `ln(max(|z|^2, 1e-12))`.
pub fn lps<T: Scalar>(spec: &Spectrogram<T>) -> FeatureMatrix<T> {
    let floor = T::lit(POWER_FLOOR);
    FeatureMatrix::new(
        spec.frames.mapv(|z| z.norm_sqr().max(floor).ln()),
        FeatureKind::Lps,
    )
}

/// Magnitudes `exp(x / 2)` recovered from an LPS matrix.
pub fn lps_to_magnitude<T: Scalar>(features: &FeatureMatrix<T>) -> Result<Array2<T>> {
    features.expect_kind(FeatureKind::Lps)?;
    let half = T::lit(0.5);
    Ok(features.data.mapv(|x| (x * half).exp()))
}
