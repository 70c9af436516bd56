//! Paired noisy/clean training data: SNR mixing, global normalization,
//! noise-aware input vectors, manifests, and mini-batch assembly.

mod batch;
pub mod manifest;
mod mix;
mod norm;

pub use batch::{
    prepare_inputs, Batch, BatchIter, FeatureStats, InputLayout, PreparedUtterance, TrainingSet,
};
pub use manifest::{Manifest, ManifestEntry, Split};
pub use mix::{measured_snr_db, mix_at_snr, mix_from_spec, noise_segment, snr_gain, Mixture};
pub use norm::{fit_norm_stats, NormAccumulator, NormStats, VARIANCE_FLOOR};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// SNR levels every clean/noise pair is mixed at.
pub const SNR_GRID_DB: [f64; 6] = [20.0, 15.0, 10.0, 5.0, 0.0, -5.0];

/// Default number of leading frames averaged for the noise-aware vector.
pub const DEFAULT_NOISE_AWARE_FRAMES: usize = 6;

/// Recipe for one noisy utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct MixSpec {
    pub clean_id: String,
    pub noise_id: String,
    pub snr_db: f64,
    pub noise_offset: usize,
}

/// Which auxiliary streams a system consumes and predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SystemVariant {
    /// LPS in, LPS out.
    #[default]
    Baseline,
    /// LPS in; LPS and MFCC out.
    MfccOutput,
    /// LPS and MFCC in; LPS and MFCC out.
    Mfcc,
    /// LPS in; LPS and IBM out.
    Ibm,
    /// LPS and MFCC in; LPS, MFCC and IBM out.
    MfccIbm,
}

impl SystemVariant {
    pub const ALL: [SystemVariant; 5] = [
        SystemVariant::Baseline,
        SystemVariant::MfccOutput,
        SystemVariant::Mfcc,
        SystemVariant::Ibm,
        SystemVariant::MfccIbm,
    ];

    pub fn mfcc_input(self) -> bool {
        matches!(self, SystemVariant::Mfcc | SystemVariant::MfccIbm)
    }

    pub fn mfcc_output(self) -> bool {
        matches!(
            self,
            SystemVariant::MfccOutput | SystemVariant::Mfcc | SystemVariant::MfccIbm
        )
    }

    pub fn ibm_output(self) -> bool {
        matches!(self, SystemVariant::Ibm | SystemVariant::MfccIbm)
    }

    pub fn code(self) -> u8 {
        match self {
            SystemVariant::Baseline => 0,
            SystemVariant::MfccOutput => 1,
            SystemVariant::Mfcc => 2,
            SystemVariant::Ibm => 3,
            SystemVariant::MfccIbm => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.code() == code)
    }
}

impl fmt::Display for SystemVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemVariant::Baseline => "baseline",
            SystemVariant::MfccOutput => "mfcc-o",
            SystemVariant::Mfcc => "mfcc",
            SystemVariant::Ibm => "ibm",
            SystemVariant::MfccIbm => "mfcc+ibm",
        })
    }
}

impl FromStr for SystemVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant '{s}' (expected baseline, mfcc-o, mfcc, ibm or mfcc+ibm)"
                ))
            })
    }
}

/// Per-dimension mean of the first `k` frames of a noisy feature matrix.
pub fn estimate_noise_aware_vector<T: Scalar>(noisy: ArrayView2<T>, k: usize) -> Result<Array1<T>> {
    if k == 0 || k > noisy.nrows() {
        return Err(Error::InvalidInput(format!(
            "noise-aware estimate needs 1 <= k ({k}) <= n_frames ({})",
            noisy.nrows()
        )));
    }
    let head = noisy.slice(ndarray::s![..k, ..]);
    let sum = head.map(|v| v.as_f64()).sum_axis(Axis(0));
    Ok(sum.mapv(|s| T::lit(s / k as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn variant_names_round_trip() {
        for v in SystemVariant::ALL {
            assert_eq!(v.to_string().parse::<SystemVariant>().unwrap(), v);
            assert_eq!(SystemVariant::from_code(v.code()), Some(v));
        }
        assert!("lps".parse::<SystemVariant>().is_err());
    }

    #[test]
    fn noise_aware_vector() {
        let ramp = Array2::from_shape_fn((10, 3), |(i, j)| (i * 3 + j) as f64);
        assert_eq!(
            estimate_noise_aware_vector(ramp.view(), 1).unwrap(),
            ramp.row(0).to_owned()
        );
        let v = estimate_noise_aware_vector(ramp.view(), 6).unwrap();
        for j in 0..3 {
            let oracle = (0..6).map(|i| ramp[[i, j]]).sum::<f64>() / 6.0;
            assert_eq!(v[j], oracle);
        }
        let flat = Array2::from_elem((8, 2), 4.25f32);
        assert_eq!(estimate_noise_aware_vector(flat.view(), 6).unwrap().to_vec(), vec![4.25; 2]);
        assert!(estimate_noise_aware_vector(ramp.view(), 11).is_err());
        assert!(estimate_noise_aware_vector(ramp.view(), 0).is_err());
    }
}
