use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    create_dir, list_wavs, with_pool, RunConfig, FEATURES_DIR, MANIFEST_FILE, NOISY_DIR, STATS_LPS_FILE,
    STATS_MFCC_FILE,
};
use crate::corpus::{mix_from_spec, Manifest, ManifestEntry, NormAccumulator, Split};
use crate::dsp::{wav, Waveform};
use crate::error::{Error, Result};
use crate::features::{container, FeatureMatrix, MixtureFeatures};

const OFFSET_STREAM: u64 = 0x6F66_6673_6574;

const STREAMS: [&str; 5] = ["noisy_lps", "noisy_mfcc", "clean_lps", "clean_mfcc", "ibm"];

fn feature_path(data_dir: &Path, id: &str, stream: &str) -> PathBuf {
    data_dir.join(FEATURES_DIR).join(format!("{id}.{stream}.sjfm"))
}

/// Reads the stored feature streams of one manifest entry.
pub fn load_mixture(data_dir: &Path, id: &str) -> Result<MixtureFeatures<f32>> {
    let read = |stream| container::read::<f32>(feature_path(data_dir, id, stream));
    Ok(MixtureFeatures {
        noisy_lps: read("noisy_lps")?,
        noisy_mfcc: read("noisy_mfcc")?,
        clean_lps: read("clean_lps")?,
        clean_mfcc: read("clean_mfcc")?,
        ibm: read("ibm")?,
    })
}

#[derive(Debug, Clone)]
pub struct PrepareReport {
    pub manifest: Manifest,
    /// Inputs skipped because they could not be used, with the reason.
    pub failures: Vec<(PathBuf, String)>,
}

impl PrepareReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn load_all(paths: &[PathBuf], rate: u32, failures: &mut Vec<(PathBuf, String)>) -> Vec<(PathBuf, Waveform<f64>)> {
    let loaded: Vec<_> = paths
        .par_iter()
        .map(|p| {
            let w = wav::read::<f64>(p, rate)?;
            if w.mean_power() == 0.0 {
                return Err(Error::CannotScale("file is silent".into()));
            }
            Ok(w)
        })
        .collect();
    let mut ok = Vec::new();
    for (p, r) in paths.iter().zip(loaded) {
        match r {
            Ok(w) => ok.push((p.clone(), w)),
            Err(e) => {
                warn!("skipping {}: {e}", p.display());
                failures.push((p.clone(), e.to_string()));
            }
        }
    }
    ok
}

/// Assigns each clean utterance to a split; every noise and SNR of an
/// utterance stays in that split.
fn assign_splits(n: usize, cfg: &RunConfig) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.train.seed));
    let mut n_test = (cfg.test_fraction * n as f64).round() as usize;
    let mut n_valid = (cfg.valid_fraction * n as f64).round() as usize;
    while n > 0 && n_test + n_valid >= n {
        if n_valid > 0 {
            n_valid -= 1;
        } else {
            n_test -= 1;
        }
    }
    let mut splits = vec![Split::Train; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank < n_test {
            splits[i] = Split::Test;
        } else if rank < n_test + n_valid {
            splits[i] = Split::Valid;
        }
    }
    splits
}

fn write_entry(
    cfg: &RunConfig,
    out_dir: &Path,
    id: &str,
    entry: &ManifestEntry,
    clean: &Waveform<f64>,
    noise: &Waveform<f64>,
) -> Result<(NormAccumulator, NormAccumulator)> {
    let mix = mix_from_spec(clean, noise, &entry.mix_spec())?;
    let feats = cfg.extractor::<f64>()?.mixture(clean, &mix.scaled_noise, &mix.noisy)?;
    let streams: [FeatureMatrix<f32>; 5] = [
        feats.noisy_lps.cast(),
        feats.noisy_mfcc.cast(),
        feats.clean_lps.cast(),
        feats.clean_mfcc.cast(),
        feats.ibm.cast(),
    ];
    for (name, m) in STREAMS.iter().zip(&streams) {
        container::write(feature_path(out_dir, id, name), m)?;
    }
    let clipped = wav::write(out_dir.join(NOISY_DIR).join(format!("{id}.wav")), &mix.noisy)?;
    if clipped > 0 {
        warn!("{id}: {clipped} noisy samples clipped when writing WAV");
    }
    let (mut lps, mut mfcc) = (NormAccumulator::new(), NormAccumulator::new());
    if entry.split == Split::Train {
        lps.push(&streams[0])?;
        mfcc.push(&streams[1])?;
    }
    Ok((lps, mfcc))
}

/// Mixes every clean file with every noise file at every grid SNR, then
/// writes the manifest, per-mixture features, noisy WAVs, and normalization
/// statistics of the noisy training features. Output is independent of `jobs`.
pub fn prepare(cfg: &RunConfig, clean_dir: &Path, noise_dir: &Path, out_dir: &Path, jobs: usize) -> Result<PrepareReport> {
    cfg.validate()?;
    cfg.extractor::<f64>()?;
    let clean_paths = list_wavs(clean_dir)?;
    let noise_paths = list_wavs(noise_dir)?;
    if noise_paths.is_empty() {
        return Err(Error::InvalidInput(format!("no WAV files in noise directory {}", noise_dir.display())));
    }
    if clean_paths.is_empty() {
        return Err(Error::InvalidInput(format!("no WAV files in clean directory {}", clean_dir.display())));
    }

    with_pool(jobs, || {
        let mut failures = Vec::new();
        let cleans = load_all(&clean_paths, cfg.sample_rate, &mut failures);
        let noises = load_all(&noise_paths, cfg.sample_rate, &mut failures);
        if cleans.is_empty() || noises.is_empty() {
            return Err(Error::InvalidInput("no usable clean or noise audio".into()));
        }

        let splits = assign_splits(cleans.len(), cfg);
        let mut offsets = ChaCha8Rng::seed_from_u64(cfg.train.seed ^ OFFSET_STREAM);
        let mut manifest = Manifest::default();
        let mut pairs = Vec::new();
        for (ci, (cpath, _)) in cleans.iter().enumerate() {
            for (ni, (npath, noise)) in noises.iter().enumerate() {
                for &snr_db in &cfg.snr_grid {
                    manifest.entries.push(ManifestEntry {
                        clean_path: cpath.clone(),
                        noise_path: npath.clone(),
                        snr_db,
                        noise_offset: offsets.random_range(0..noise.len()),
                        split: splits[ci],
                    });
                    pairs.push((ci, ni));
                }
            }
        }

        create_dir(out_dir)?;
        create_dir(&out_dir.join(FEATURES_DIR))?;
        create_dir(&out_dir.join(NOISY_DIR))?;
        manifest.write(out_dir.join(MANIFEST_FILE))?;

        let accs: Vec<_> = manifest
            .entries
            .par_iter()
            .zip(pairs.par_iter())
            .enumerate()
            .map(|(i, (entry, &(ci, ni)))| {
                let id = entry.utterance_id(i);
                write_entry(cfg, out_dir, &id, entry, &cleans[ci].1, &noises[ni].1)
            })
            .collect::<Result<_>>()?;

        let (mut lps, mut mfcc) = (NormAccumulator::new(), NormAccumulator::new());
        for (l, m) in accs {
            lps.merge(l)?;
            mfcc.merge(m)?;
        }
        lps.finish::<f32>()?.write(out_dir.join(STATS_LPS_FILE))?;
        mfcc.finish::<f32>()?.write(out_dir.join(STATS_MFCC_FILE))?;
        cfg.write(out_dir.join("prepare.config"))?;

        let count = |s| manifest.entries.iter().filter(|e| e.split == s).count();
        info!(
            "prepared {} mixtures ({} train, {} valid, {} test)",
            manifest.entries.len(),
            count(Split::Train),
            count(Split::Valid),
            count(Split::Test)
        );
        Ok(PrepareReport { manifest, failures })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_assignment() {
        let mut cfg = RunConfig::default();
        let s = assign_splits(20, &cfg);
        assert_eq!(s.iter().filter(|&&x| x == Split::Test).count(), 4);
        assert_eq!(s.iter().filter(|&&x| x == Split::Valid).count(), 2);
        assert_eq!(s, assign_splits(20, &cfg));
        assert!(assign_splits(2, &cfg).iter().all(|&x| x == Split::Train));
        cfg.test_fraction = 0.5;
        cfg.valid_fraction = 0.4;
        let s = assign_splits(3, &cfg);
        assert!(s.contains(&Split::Train));
    }
}
