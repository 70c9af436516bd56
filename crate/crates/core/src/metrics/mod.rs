//! Objective quality measures: segmental SNR, STOI, and log-spectral
//! distortion profiles, plus per-condition aggregation.

mod distortion;
mod report;
mod resample;
mod ssnr;
mod stoi;

pub use distortion::DistortionProfile;
pub use report::{ConditionSummary, MetricReport, UtteranceMetrics};
pub use resample::resample;
pub use ssnr::{ssnr, SSNR_MAX_DB, SSNR_MIN_DB, SSNR_SILENCE_FLOOR};
pub use stoi::{stoi, STOI_RATE};

use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Both signals as f64, trimmed to the shorter one.
fn aligned<T: Scalar>(reference: &Waveform<T>, test: &Waveform<T>) -> Result<(Vec<f64>, Vec<f64>)> {
    if reference.sample_rate != test.sample_rate {
        return Err(Error::InvalidInput(format!(
            "sample rates differ: {} vs {}",
            reference.sample_rate, test.sample_rate
        )));
    }
    let n = reference.len().min(test.len());
    let r = reference.samples[..n].iter().map(|v| v.as_f64()).collect();
    let t = test.samples[..n].iter().map(|v| v.as_f64()).collect();
    Ok((r, t))
}
