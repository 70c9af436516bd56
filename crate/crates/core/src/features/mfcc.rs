use ndarray::{s, Array2};

use super::{FeatureKind, FeatureMatrix, MelBank, POWER_FLOOR};
use crate::dsp::{dct_matrix, Spectrogram};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// MFCC extractor: log mel energies, a full square DCT (no truncation), and a
/// trailing log frame-energy column. Output width is `n_mels + 1`.
#[derive(Debug, Clone)]
pub struct Mfcc<T> {
    bank: MelBank<T>,
    dct: Array2<T>,
}

impl<T: Scalar> Mfcc<T> {
    pub fn new(bank: MelBank<T>) -> Result<Self> {
        let dct = dct_matrix(bank.n_mels)?;
        Ok(Self { bank, dct })
    }

    pub fn bank(&self) -> &MelBank<T> {
        &self.bank
    }

    pub fn dims(&self) -> usize {
        self.bank.n_mels + 1
    }

    pub fn compute(&self, spec: &Spectrogram<T>) -> Result<FeatureMatrix<T>> {
        if spec.n_bins() != self.bank.n_bins() {
            return Err(Error::shape(
                format!("{} bins (mel bank)", self.bank.n_bins()),
                format!("{} bins", spec.n_bins()),
            ));
        }
        let floor = T::lit(POWER_FLOOR);
        let power = spec.power();
        let log_mel = power.dot(&self.bank.filters.t()).mapv(|e| e.max(floor).ln());
        let cepstra = log_mel.dot(&self.dct.t());

        // Parseval: windowed frame energy from the one-sided spectrum.
        let n_bins = spec.n_bins();
        let scale = T::one() / T::from_count(spec.config.fft_size);
        let two = T::lit(2.0);
        let mut out = Array2::zeros((spec.n_frames(), self.dims()));
        out.slice_mut(s![.., ..self.bank.n_mels]).assign(&cepstra);
        for (f, row) in power.rows().into_iter().enumerate() {
            let energy = row
                .iter()
                .enumerate()
                .map(|(k, &p)| if k == 0 || k == n_bins - 1 { p } else { two * p })
                .fold(T::zero(), |a, b| a + b)
                * scale;
            out[[f, self.bank.n_mels]] = energy.max(floor).ln();
        }
        Ok(FeatureMatrix::new(out, FeatureKind::Mfcc))
    }
}

/// One-shot MFCC with the given bank.
pub fn mfcc<T: Scalar>(spec: &Spectrogram<T>, bank: &MelBank<T>) -> Result<FeatureMatrix<T>> {
    Mfcc::new(bank.clone())?.compute(spec)
}
