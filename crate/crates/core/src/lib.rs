//! Speech enhancement by multi-objective DNN regression.
//!
//! A feed-forward network maps spliced noisy log-power spectra (optionally
//! with noisy MFCC) to clean LPS while jointly predicting clean MFCC and the
//! ideal binary mask. The predicted mask drives a three-branch LPS
//! post-processing step before waveform reconstruction with the noisy phase.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the common instantiations.

pub mod corpus;
pub mod dsp;
pub mod enhance;
pub mod error;
pub mod features;
pub mod metrics;
pub mod nn;
pub mod pipeline;
mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Waveform32 = dsp::Waveform<f32>;
pub type Waveform64 = dsp::Waveform<f64>;
pub type Spectrogram32 = dsp::Spectrogram<f32>;
pub type Spectrogram64 = dsp::Spectrogram<f64>;
pub type FeatureMatrix32 = features::FeatureMatrix<f32>;
pub type FeatureMatrix64 = features::FeatureMatrix<f64>;
pub type NormStats32 = corpus::NormStats<f32>;
pub type NormStats64 = corpus::NormStats<f64>;
pub type Network32 = nn::Network<f32>;
pub type Network64 = nn::Network<f64>;
