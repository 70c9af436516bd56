//! Waveforms, STFT analysis/synthesis, the DCT, and PCM WAV I/O.

mod dct;
mod fft;
mod stft;
pub mod wav;

pub use dct::dct_matrix;
pub use fft::FftPlan;
pub use stft::{istft, stft, Spectrogram, StftConfig, WindowKind};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default sample rate of the toolkit.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono PCM samples with their sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Scalar> Waveform<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("waveform sample {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Mean power, accumulated in f64.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x.as_f64().powi(2)).sum::<f64>() / self.samples.len() as f64
    }

    pub fn cast<U: Scalar>(&self) -> Waveform<U> {
        Waveform {
            samples: self.samples.iter().map(|x| U::lit(x.as_f64())).collect(),
            sample_rate: self.sample_rate,
        }
    }
}
