use std::fmt::Write as _;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use super::{
    create_dir, load_mixture, with_pool, write_atomic, RunConfig, CHECKPOINT_FILE, HISTORY_FILE, MANIFEST_FILE,
    STATS_LPS_FILE, STATS_MFCC_FILE,
};
use crate::corpus::{FeatureStats, InputLayout, Manifest, NormStats, Split, SystemVariant, TrainingSet};
use crate::error::{Error, Result};
use crate::features::MixtureFeatures;
use crate::nn::{train, EpochRecord, LossReport, Model, Network, TrainObserver};

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// The best model, as written to the checkpoint.
    pub model: Model<f32>,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

fn load_split(data_dir: &Path, manifest: &Manifest, split: Split) -> Result<Vec<MixtureFeatures<f32>>> {
    let ids: Vec<String> = manifest.split(split).map(|(i, e)| e.utterance_id(i)).collect();
    ids.par_iter().map(|id| load_mixture(data_dir, id)).collect()
}

fn loss_fields(out: &mut String, r: Option<&LossReport>) {
    match r {
        Some(r) => {
            let _ = write!(out, ",{},{},{},{}", r.total, r.lps_term, r.mfcc_term, r.ibm_term);
        }
        None => out.push_str(",,,,"),
    }
}

/// Per-epoch loss history as CSV.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from(
        "epoch,learning_rate,train_total,train_lps,train_mfcc,train_ibm,valid_total,valid_lps,valid_mfcc,valid_ibm\n",
    );
    for r in history {
        let _ = write!(out, "{},{}", r.epoch, r.learning_rate);
        loss_fields(&mut out, Some(&r.train));
        loss_fields(&mut out, r.valid.as_ref());
        out.push('\n');
    }
    out
}

struct CheckpointWriter<'a> {
    path: &'a Path,
    variant: SystemVariant,
    layout: InputLayout,
    stats: &'a FeatureStats<f32>,
    best: Option<Model<f32>>,
}

impl TrainObserver<f32> for CheckpointWriter<'_> {
    fn on_new_best(&mut self, net: &Network<f32>, record: &EpochRecord) -> Result<()> {
        let model = Model::new(net.clone(), self.variant, self.layout, self.stats.clone())?;
        write_atomic(self.path, &model.encode())?;
        info!("epoch {}: new best {:.5}, checkpoint written", record.epoch, record.selection_loss());
        self.best = Some(model);
        Ok(())
    }
}

/// Trains the configured variant on a prepared data directory. The best
/// checkpoint is rewritten whenever the validation loss improves, so a
/// failed run leaves the last good one in place.
pub fn train_model(cfg: &RunConfig, data_dir: &Path, out_dir: &Path, jobs: usize) -> Result<TrainReport> {
    cfg.validate()?;
    let manifest = Manifest::read(data_dir.join(MANIFEST_FILE))?;
    let stats = FeatureStats {
        lps: NormStats::<f32>::read(data_dir.join(STATS_LPS_FILE))?,
        mfcc: NormStats::<f32>::read(data_dir.join(STATS_MFCC_FILE))?,
    };
    let (train_mix, valid_mix) = with_pool(jobs, || {
        Ok::<_, Error>((
            load_split(data_dir, &manifest, Split::Train)?,
            load_split(data_dir, &manifest, Split::Valid)?,
        ))
    })??;
    if train_mix.is_empty() {
        return Err(Error::InvalidInput("manifest has no training entries".into()));
    }
    let variant = cfg.train.variant;
    let train_set = TrainingSet::build(&train_mix, &stats, variant, cfg.tau, cfg.noise_aware_frames)?;
    let valid_set = TrainingSet::build(&valid_mix, &stats, variant, cfg.tau, cfg.noise_aware_frames)?;
    drop((train_mix, valid_mix));
    info!(
        "training {variant}: {} train frames, {} valid frames, input dim {}",
        train_set.n_frames(),
        valid_set.n_frames(),
        train_set.input_dim()
    );

    create_dir(out_dir)?;
    cfg.write(out_dir.join("train.config"))?;
    let ckpt = out_dir.join(CHECKPOINT_FILE);
    let mut writer = CheckpointWriter {
        path: &ckpt,
        variant,
        layout: train_set.layout,
        stats: &stats,
        best: None,
    };
    let outcome = train(&train_set, Some(&valid_set), &cfg.train, &mut writer)?;
    write_atomic(&out_dir.join(HISTORY_FILE), history_csv(&outcome.history).as_bytes())?;
    let model = match writer.best {
        Some(m) => m,
        None => {
            // zero epochs: keep the initial network
            let m = Model::new(outcome.best, variant, train_set.layout, stats)?;
            write_atomic(&ckpt, &m.encode())?;
            m
        }
    };
    Ok(TrainReport {
        model,
        best_epoch: outcome.best_epoch,
        history: outcome.history,
    })
}
