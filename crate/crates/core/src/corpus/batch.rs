use ndarray::{concatenate, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{estimate_noise_aware_vector, fit_norm_stats, NormStats, SystemVariant};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix, MixtureFeatures};
use crate::scalar::Scalar;

/// Normalization statistics for both noisy input streams, fitted on noisy
/// training features only. Clean targets are normalized with these as well.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats<T> {
    pub lps: NormStats<T>,
    pub mfcc: NormStats<T>,
}

impl<T: Scalar> FeatureStats<T> {
    pub fn fit<'a>(train: impl IntoIterator<Item = &'a MixtureFeatures<T>> + Clone) -> Result<Self> {
        Ok(Self {
            lps: fit_norm_stats(train.clone().into_iter().map(|m| &m.noisy_lps))?,
            mfcc: fit_norm_stats(train.into_iter().map(|m| &m.noisy_mfcc))?,
        })
    }
}

/// Shape of a network input row: spliced LPS, spliced MFCC (when used), then
/// the noise-aware vector over the same per-frame streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputLayout {
    pub lps_dims: usize,
    /// Zero when the variant takes no MFCC input.
    pub mfcc_dims: usize,
    pub tau: usize,
    pub noise_aware_frames: usize,
}

impl InputLayout {
    pub fn frame_dims(&self) -> usize {
        self.lps_dims + self.mfcc_dims
    }

    pub fn context(&self) -> usize {
        2 * self.tau + 1
    }

    pub fn input_dim(&self) -> usize {
        self.frame_dims() * self.context() + self.frame_dims()
    }
}

/// Normalized per-frame input streams and noise-aware vector for one
/// utterance. Shared by training and inference.
pub fn prepare_inputs<T: Scalar>(
    noisy_lps: &FeatureMatrix<T>,
    noisy_mfcc: Option<&FeatureMatrix<T>>,
    stats: &FeatureStats<T>,
    noise_aware_frames: usize,
) -> Result<(Array2<T>, Array1<T>)> {
    noisy_lps.expect_kind(FeatureKind::Lps)?;
    let mut streams = vec![stats.lps.normalize(noisy_lps.data.view())?];
    if let Some(m) = noisy_mfcc {
        m.expect_kind(FeatureKind::Mfcc)?;
        if m.n_frames() != noisy_lps.n_frames() {
            return Err(Error::shape(
                format!("{} MFCC frames", noisy_lps.n_frames()),
                m.n_frames(),
            ));
        }
        streams.push(stats.mfcc.normalize(m.data.view())?);
    }
    let views: Vec<_> = streams.iter().map(|a| a.view()).collect();
    let frames = concatenate(Axis(1), &views).expect("row counts checked");
    let k = noise_aware_frames.min(frames.nrows());
    let nat = estimate_noise_aware_vector(frames.view(), k)?;
    Ok((frames, nat))
}

/// One utterance ready for batching.
#[derive(Debug, Clone)]
pub struct PreparedUtterance<T> {
    /// Normalized noisy LPS (and MFCC) per frame.
    pub frames: Array2<T>,
    pub noise_aware: Array1<T>,
    pub target_lps: Array2<T>,
    pub target_mfcc: Option<Array2<T>>,
    pub target_ibm: Option<Array2<T>>,
}

impl<T: Scalar> PreparedUtterance<T> {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    /// Writes the network input for frame `t` into `out`.
    pub fn write_input_row(&self, t: usize, tau: usize, out: &mut [T]) {
        let n = self.frames.nrows();
        let d = self.frames.ncols();
        let width = 2 * tau + 1;
        debug_assert_eq!(out.len(), d * width + d);
        for j in 0..width {
            let src = (t + j).saturating_sub(tau).min(n - 1);
            for (o, &v) in out[j * d..(j + 1) * d].iter_mut().zip(self.frames.row(src)) {
                *o = v;
            }
        }
        for (o, &v) in out[d * width..].iter_mut().zip(self.noise_aware.iter()) {
            *o = v;
        }
    }

    /// Network input for every frame.
    pub fn input_rows(&self, tau: usize) -> Array2<T> {
        let d = self.frames.ncols();
        let dim = d * (2 * tau + 1) + d;
        let mut out = Array2::zeros((self.n_frames(), dim));
        for (t, mut row) in out.rows_mut().into_iter().enumerate() {
            self.write_input_row(t, tau, row.as_slice_mut().expect("standard layout"));
        }
        out
    }
}

/// One mini-batch; every present target is row-aligned with `inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub inputs: Array2<T>,
    pub targets_lps: Array2<T>,
    pub targets_mfcc: Option<Array2<T>>,
    pub targets_ibm: Option<Array2<T>>,
}

impl<T: Scalar> Batch<T> {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }
}

/// All utterances of a split, prepared for one system variant.
#[derive(Debug, Clone)]
pub struct TrainingSet<T> {
    pub variant: SystemVariant,
    pub layout: InputLayout,
    pub utterances: Vec<PreparedUtterance<T>>,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn build<'a>(
        mixtures: impl IntoIterator<Item = &'a MixtureFeatures<T>>,
        stats: &FeatureStats<T>,
        variant: SystemVariant,
        tau: usize,
        noise_aware_frames: usize,
    ) -> Result<Self> {
        let layout = InputLayout {
            lps_dims: stats.lps.dims(),
            mfcc_dims: if variant.mfcc_input() { stats.mfcc.dims() } else { 0 },
            tau,
            noise_aware_frames,
        };
        let mut utterances = Vec::new();
        for (i, m) in mixtures.into_iter().enumerate() {
            let mismatch = |what: &str, got: usize, want: usize| {
                Error::Config(format!(
                    "utterance {i}: {what} has {got} dims but variant {variant} expects {want}"
                ))
            };
            if m.noisy_lps.dims() != layout.lps_dims || m.clean_lps.dims() != layout.lps_dims {
                return Err(mismatch("LPS", m.noisy_lps.dims(), layout.lps_dims));
            }
            if (variant.mfcc_input() || variant.mfcc_output()) && m.clean_mfcc.dims() != stats.mfcc.dims() {
                return Err(mismatch("MFCC", m.clean_mfcc.dims(), stats.mfcc.dims()));
            }
            if variant.ibm_output() && m.ibm.dims() != layout.lps_dims {
                return Err(mismatch("IBM", m.ibm.dims(), layout.lps_dims));
            }
            let frames = m.noisy_lps.n_frames();
            if [&m.clean_lps, &m.noisy_mfcc, &m.clean_mfcc, &m.ibm]
                .iter()
                .any(|f| f.n_frames() != frames)
            {
                return Err(Error::Config(format!("utterance {i}: streams have unequal frame counts")));
            }
            m.ibm.expect_kind(FeatureKind::Ibm)?;
            let (inputs, nat) = prepare_inputs(
                &m.noisy_lps,
                variant.mfcc_input().then_some(&m.noisy_mfcc),
                stats,
                noise_aware_frames,
            )?;
            utterances.push(PreparedUtterance {
                frames: inputs,
                noise_aware: nat,
                target_lps: stats.lps.normalize(m.clean_lps.data.view())?,
                target_mfcc: if variant.mfcc_output() {
                    Some(stats.mfcc.normalize(m.clean_mfcc.data.view())?)
                } else {
                    None
                },
                target_ibm: variant.ibm_output().then(|| m.ibm.data.clone()),
            });
        }
        Ok(Self {
            variant,
            layout,
            utterances,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.utterances.iter().map(|u| u.n_frames()).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.layout.input_dim()
    }

    /// Mini-batches over every frame, shuffled by `seed`. The final batch
    /// holds the remainder when the frame count is not a multiple of
    /// `batch_size`.
    pub fn batches(&self, batch_size: usize, seed: u64) -> Result<BatchIter<'_, T>> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let mut order: Vec<(u32, u32)> = self
            .utterances
            .iter()
            .enumerate()
            .flat_map(|(u, utt)| (0..utt.n_frames()).map(move |t| (u as u32, t as u32)))
            .collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(BatchIter {
            set: self,
            order,
            pos: 0,
            batch_size,
        })
    }
}

/// Cursor over the mini-batches of one epoch.
pub struct BatchIter<'a, T> {
    set: &'a TrainingSet<T>,
    order: Vec<(u32, u32)>,
    pos: usize,
    batch_size: usize,
}

impl<T: Scalar> BatchIter<'_, T> {
    pub fn n_batches(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }
}

impl<T: Scalar> Iterator for BatchIter<'_, T> {
    type Item = Batch<T>;

    fn next(&mut self) -> Option<Batch<T>> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let picks = &self.order[self.pos..end];
        self.pos = end;
        let set = self.set;
        let n = picks.len();
        let tau = set.layout.tau;
        let mut inputs = Array2::zeros((n, set.layout.input_dim()));
        let first = &set.utterances[0];
        let mut targets_lps = Array2::zeros((n, first.target_lps.ncols()));
        let mut targets_mfcc = first.target_mfcc.as_ref().map(|m| Array2::zeros((n, m.ncols())));
        let mut targets_ibm = first.target_ibm.as_ref().map(|m| Array2::zeros((n, m.ncols())));
        for (r, &(u, t)) in picks.iter().enumerate() {
            let utt = &set.utterances[u as usize];
            let t = t as usize;
            let mut row = inputs.row_mut(r);
            utt.write_input_row(t, tau, row.as_slice_mut().expect("standard layout"));
            targets_lps.row_mut(r).assign(&utt.target_lps.row(t));
            if let (Some(dst), Some(src)) = (targets_mfcc.as_mut(), utt.target_mfcc.as_ref()) {
                dst.row_mut(r).assign(&src.row(t));
            }
            if let (Some(dst), Some(src)) = (targets_ibm.as_mut(), utt.target_ibm.as_ref()) {
                dst.row_mut(r).assign(&src.row(t));
            }
        }
        Some(Batch {
            inputs,
            targets_lps,
            targets_mfcc,
            targets_ibm,
        })
    }
}
