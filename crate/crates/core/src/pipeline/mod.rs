//! File-based runs: corpus preparation, training, enhancement, and evaluation
//! over directories of 16-bit WAV files. Stored features, checkpoints, and
//! network arithmetic use `f32`; mixing and analysis run in `f64`.
//!
//! A prepared data directory holds:
//!
//! ```text
//! manifest.tsv
//! stats_lps.sjfm  stats_mfcc.sjfm
//! features/<id>.<stream>.sjfm
//! noisy/<id>.wav
//! prepare.config
//! ```

mod config;
mod evaluate;
mod prepare;
mod run_enhance;
mod train;

pub use config::RunConfig;
pub use evaluate::{distortion_profile, evaluate};
pub use prepare::{load_mixture, prepare, PrepareReport};
pub use run_enhance::{enhance_path, EnhanceReport};
pub use train::{history_csv, train_model, TrainReport};

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const STATS_LPS_FILE: &str = "stats_lps.sjfm";
pub const STATS_MFCC_FILE: &str = "stats_mfcc.sjfm";
pub const FEATURES_DIR: &str = "features";
pub const NOISY_DIR: &str = "noisy";
pub const CHECKPOINT_FILE: &str = "model.sjnn";
pub const HISTORY_FILE: &str = "history.csv";

/// `*.wav` files directly inside `dir`, sorted by name.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes through a temporary sibling so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Runs `f` on a dedicated pool of `jobs` threads.
fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
