use super::{compute_ibm, lps, FeatureMatrix, IbmConfig, MelBank, Mfcc};
use crate::dsp::{stft, Spectrogram, StftConfig, Waveform};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mel bank settings for the MFCC stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelConfig {
    pub n_mels: usize,
    pub f_low: f64,
    pub f_high: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            n_mels: 40,
            f_low: 0.0,
            f_high: 8000.0,
        }
    }
}

/// Every feature stream of one mixture.
#[derive(Debug, Clone)]
pub struct MixtureFeatures<T> {
    pub noisy_lps: FeatureMatrix<T>,
    pub noisy_mfcc: FeatureMatrix<T>,
    pub clean_lps: FeatureMatrix<T>,
    pub clean_mfcc: FeatureMatrix<T>,
    pub ibm: FeatureMatrix<T>,
}

/// Bundles the analysis settings so training and inference compute features
/// identically.
#[derive(Debug, Clone)]
pub struct FeatureExtractor<T> {
    pub stft: StftConfig,
    pub sample_rate: u32,
    pub ibm: IbmConfig,
    mfcc: Mfcc<T>,
}

impl<T: Scalar> FeatureExtractor<T> {
    pub fn new(stft: StftConfig, sample_rate: u32, mel: MelConfig, ibm: IbmConfig) -> Result<Self> {
        stft.validate()?;
        let bank = MelBank::new(mel.n_mels, stft.fft_size, sample_rate, mel.f_low, mel.f_high)?;
        Ok(Self {
            stft,
            sample_rate,
            ibm,
            mfcc: Mfcc::new(bank)?,
        })
    }

    pub fn lps_dims(&self) -> usize {
        self.stft.n_bins()
    }

    pub fn mfcc_dims(&self) -> usize {
        self.mfcc.dims()
    }

    pub fn analyze(&self, wave: &Waveform<T>) -> Result<Spectrogram<T>> {
        if wave.sample_rate != self.sample_rate {
            return Err(Error::InvalidInput(format!(
                "waveform at {} Hz, extractor configured for {} Hz",
                wave.sample_rate, self.sample_rate
            )));
        }
        stft(wave, &self.stft)
    }

    pub fn lps_mfcc(&self, spec: &Spectrogram<T>) -> Result<(FeatureMatrix<T>, FeatureMatrix<T>)> {
        Ok((lps(spec), self.mfcc.compute(spec)?))
    }

    /// Features of a mixture from its exact components (`noisy = clean + noise`).
    pub fn mixture(
        &self,
        clean: &Waveform<T>,
        scaled_noise: &Waveform<T>,
        noisy: &Waveform<T>,
    ) -> Result<MixtureFeatures<T>> {
        let clean_spec = self.analyze(clean)?;
        let noise_spec = self.analyze(scaled_noise)?;
        let noisy_spec = self.analyze(noisy)?;
        let (noisy_lps, noisy_mfcc) = self.lps_mfcc(&noisy_spec)?;
        let (clean_lps, clean_mfcc) = self.lps_mfcc(&clean_spec)?;
        let ibm = compute_ibm(&clean_spec, &noise_spec, &self.ibm)?;
        Ok(MixtureFeatures {
            noisy_lps,
            noisy_mfcc,
            clean_lps,
            clean_mfcc,
            ibm,
        })
    }
}
