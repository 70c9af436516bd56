use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    loss, loss_and_gradients, Architecture, DropoutMasks, HeadLayout, LossReport, LossWeights, Network, Sgd,
};
use crate::corpus::{Batch, SystemVariant, TrainingSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub variant: SystemVariant,
    pub hidden_layers: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate of the final epoch relative to the first; the rate
    /// decays linearly in between.
    pub final_lr_fraction: f64,
    pub momentum: f64,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub weights: LossWeights,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: SystemVariant::Baseline,
            hidden_layers: vec![256, 256],
            batch_size: 128,
            learning_rate: 0.001,
            final_lr_fraction: 0.1,
            momentum: 0.9,
            dropout_rate: 0.1,
            epochs: 30,
            weights: LossWeights::default(),
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate {} outside [0, 1)", self.dropout_rate));
        }
        if !(self.weights.alpha >= 0.0 && self.weights.beta >= 0.0) {
            return bad("alpha and beta must be non-negative".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} invalid", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.final_lr_fraction) {
            return bad(format!("final_lr_fraction {} outside [0, 1]", self.final_lr_fraction));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if self.hidden_layers.iter().any(|&w| w == 0) {
            return bad("hidden layer widths must be positive".into());
        }
        Ok(())
    }

    /// Learning rate for zero-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.learning_rate;
        }
        let progress = epoch as f64 / (self.epochs - 1) as f64;
        self.learning_rate * (1.0 - (1.0 - self.final_lr_fraction) * progress)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// One-based.
    pub epoch: usize,
    pub learning_rate: f64,
    pub train: LossReport,
    pub valid: Option<LossReport>,
}

impl EpochRecord {
    /// Loss used for best-checkpoint selection.
    pub fn selection_loss(&self) -> f64 {
        self.valid.as_ref().unwrap_or(&self.train).total
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters at the epoch with the lowest selection loss.
    pub best: Network<T>,
    pub best_epoch: usize,
    pub last: Network<T>,
    pub initial: Network<T>,
    pub history: Vec<EpochRecord>,
}

/// Hooks into the training loop.
pub trait TrainObserver<T> {
    fn on_batch(&mut self, _epoch: usize, _batch: usize, _report: &LossReport) {}

    fn on_epoch(&mut self, _record: &EpochRecord) {}

    /// Called whenever the selection loss improves; an error aborts training.
    fn on_new_best(&mut self, _net: &Network<T>, _record: &EpochRecord) -> Result<()> {
        Ok(())
    }
}

impl<T> TrainObserver<T> for () {}

/// Loss of `net` over every frame of `set`, without dropout.
pub fn evaluate_loss<T: Scalar>(net: &Network<T>, set: &TrainingSet<T>, weights: LossWeights) -> Result<LossReport> {
    let mut total = LossReport::default();
    for utt in &set.utterances {
        let batch = Batch {
            inputs: utt.input_rows(set.layout.tau),
            targets_lps: utt.target_lps.clone(),
            targets_mfcc: utt.target_mfcc.clone(),
            targets_ibm: utt.target_ibm.clone(),
        };
        let out = net.forward(batch.inputs.view())?;
        total.accumulate(&loss(&out, &batch, weights)?);
    }
    Ok(total)
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Mini-batch training with momentum SGD, linear learning-rate decay, and
/// hidden-layer dropout. Deterministic for a given seed and data.
pub fn train<T: Scalar>(
    train_set: &TrainingSet<T>,
    valid_set: Option<&TrainingSet<T>>,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver<T>,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if train_set.variant != cfg.variant {
        return Err(Error::Config(format!(
            "training set prepared for {} but config asks for {}",
            train_set.variant, cfg.variant
        )));
    }
    if train_set.n_frames() == 0 {
        return Err(Error::InvalidInput("training set has no frames".into()));
    }
    let valid_set = valid_set.filter(|v| v.n_frames() > 0);
    let first = &train_set.utterances[0];
    let heads = HeadLayout {
        lps: first.target_lps.ncols(),
        mfcc: first.target_mfcc.as_ref().map_or(0, |m| m.ncols()),
        ibm: first.target_ibm.as_ref().map_or(0, |m| m.ncols()),
    };
    let arch = Architecture {
        input_dim: train_set.input_dim(),
        hidden: cfg.hidden_layers.clone(),
        heads,
    };
    let mut net = Network::<T>::init(arch, cfg.seed)?;
    let initial = net.clone();
    let mut opt = Sgd::new(&net, cfg.momentum);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xD1B5_4A32_D192_ED03);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Network<T>)> = None;

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        let mut report = LossReport::default();
        for (b, batch) in train_set
            .batches(cfg.batch_size, epoch_seed(cfg.seed, epoch))?
            .enumerate()
        {
            let masks = if cfg.dropout_rate > 0.0 {
                Some(DropoutMasks::sample(&net, batch.len(), cfg.dropout_rate, &mut dropout_rng)?)
            } else {
                None
            };
            let (batch_report, grads) = loss_and_gradients(&net, &batch, cfg.weights, masks)?;
            if !batch_report.total.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss at epoch {} batch {b}",
                    epoch + 1
                )));
            }
            observer.on_batch(epoch + 1, b, &batch_report);
            report.accumulate(&batch_report);
            opt.step(&mut net, &grads, lr)?;
        }
        let valid = valid_set
            .map(|v| evaluate_loss(&net, v, cfg.weights))
            .transpose()?;
        let record = EpochRecord {
            epoch: epoch + 1,
            learning_rate: lr,
            train: report,
            valid,
        };
        info!(
            "epoch {:>3}: train {:.5} (lps {:.5}, mfcc {:.5}, ibm {:.5}){}",
            record.epoch,
            report.total,
            report.lps_term,
            report.mfcc_term,
            report.ibm_term,
            valid.map(|v| format!(", valid {:.5}", v.total)).unwrap_or_default()
        );
        if report.floored_rows > 0 {
            debug!("epoch {}: {} rows with floored target norm", record.epoch, report.floored_rows);
        }
        observer.on_epoch(&record);
        let score = record.selection_loss();
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            observer.on_new_best(&net, &record)?;
            best = Some((score, record.epoch, net.clone()));
        }
        history.push(record);
    }
    let (best_epoch, best_net) = match best {
        Some((_, e, n)) => (e, n),
        None => (0, net.clone()),
    };
    Ok(TrainOutcome {
        best: best_net,
        best_epoch,
        last: net,
        initial,
        history,
    })
}
