use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{file_name, with_pool, RunConfig};
use crate::corpus::{Manifest, ManifestEntry, Split};
use crate::dsp::{stft, wav};
use crate::error::{Error, Result};
use crate::features::lps;
use crate::metrics::{ssnr, stoi, DistortionProfile, MetricReport, UtteranceMetrics};

fn clean_path(entry: &ManifestEntry, clean_dir: Option<&Path>) -> PathBuf {
    match clean_dir {
        Some(d) => d.join(file_name(&entry.clean_path)),
        None => entry.clean_path.clone(),
    }
}

/// Entries of `split` with their enhanced file, which may not exist.
fn targets(manifest: &Manifest, split: Split, enhanced_dir: &Path) -> Vec<(String, ManifestEntry, PathBuf)> {
    manifest
        .split(split)
        .map(|(i, e)| {
            let id = e.utterance_id(i);
            let path = enhanced_dir.join(format!("{id}.wav"));
            (id, e.clone(), path)
        })
        .collect()
}

/// SSNR and STOI of every enhanced file of `split` against its clean
/// reference. Absent files are listed in the report, not treated as errors.
pub fn evaluate(
    cfg: &RunConfig,
    manifest: &Manifest,
    split: Split,
    enhanced_dir: &Path,
    clean_dir: Option<&Path>,
    jobs: usize,
) -> Result<MetricReport> {
    cfg.validate()?;
    let items = targets(manifest, split, enhanced_dir);
    if items.is_empty() {
        return Err(Error::InvalidInput(format!("manifest has no {split} entries")));
    }
    let scored: Vec<Result<Option<UtteranceMetrics>>> = with_pool(jobs, || {
        items
            .par_iter()
            .map(|(id, entry, path)| {
                if !path.is_file() {
                    return Ok(None);
                }
                let clean = wav::read::<f64>(clean_path(entry, clean_dir), cfg.sample_rate)?;
                let test = wav::read::<f64>(path, cfg.sample_rate)?;
                Ok(Some(UtteranceMetrics {
                    id: id.clone(),
                    noise: entry.noise_name(),
                    snr_db: entry.snr_db,
                    ssnr_db: ssnr(&clean, &test, cfg.ssnr_frame_len, cfg.ssnr_hop)?,
                    stoi: stoi(&clean, &test)?,
                }))
            })
            .collect()
    })?;
    let mut report = MetricReport::default();
    for ((id, entry, _), r) in items.into_iter().zip(scored) {
        match r? {
            Some(m) => report.push(m),
            None => report.push_missing(id, entry.noise_name(), entry.snr_db),
        }
    }
    Ok(report)
}

/// Mean per-bin `clean - enhanced` LPS over `split`, with the ids of absent
/// enhanced files.
pub fn distortion_profile(
    cfg: &RunConfig,
    manifest: &Manifest,
    split: Split,
    enhanced_dir: &Path,
    clean_dir: Option<&Path>,
    jobs: usize,
) -> Result<(DistortionProfile, Vec<String>)> {
    cfg.validate()?;
    let items = targets(manifest, split, enhanced_dir);
    if items.is_empty() {
        return Err(Error::InvalidInput(format!("manifest has no {split} entries")));
    }
    let n_bins = cfg.stft.n_bins();
    let spacing = cfg.sample_rate as f64 / cfg.stft.fft_size as f64;
    let parts: Vec<Result<Option<DistortionProfile>>> = with_pool(jobs, || {
        items
            .par_iter()
            .map(|(_, entry, path)| {
                if !path.is_file() {
                    return Ok(None);
                }
                let clean = wav::read::<f64>(clean_path(entry, clean_dir), cfg.sample_rate)?;
                let test = wav::read::<f64>(path, cfg.sample_rate)?;
                let a = lps(&stft(&clean, &cfg.stft)?);
                let b = lps(&stft(&test, &cfg.stft)?);
                let n = a.n_frames().min(b.n_frames());
                let mut p = DistortionProfile::new(n_bins, spacing);
                p.accumulate(
                    a.data.slice(ndarray::s![..n, ..]),
                    b.data.slice(ndarray::s![..n, ..]),
                )?;
                Ok(Some(p))
            })
            .collect()
    })?;
    let mut profile = DistortionProfile::new(n_bins, spacing);
    let mut missing = Vec::new();
    for ((id, _, _), r) in items.into_iter().zip(parts) {
        match r? {
            Some(p) => profile.merge(&p)?,
            None => missing.push(id),
        }
    }
    Ok((profile, missing))
}
