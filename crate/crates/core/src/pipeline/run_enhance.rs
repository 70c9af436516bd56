use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::{create_dir, file_name, list_wavs, with_pool, write_atomic, RunConfig};
use crate::dsp::wav;
use crate::enhance::Enhancer;
use crate::error::{Error, Result};
use crate::nn::Model;

#[derive(Debug, Clone, Default)]
pub struct EnhanceReport {
    /// Enhanced WAVs written, in input order.
    pub outputs: Vec<PathBuf>,
    pub failures: Vec<(PathBuf, String)>,
}

impl EnhanceReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn enhance_one(enhancer: &Enhancer<f32>, cfg: &RunConfig, input: &Path, out_dir: &Path) -> Result<PathBuf> {
    let noisy = wav::read::<f32>(input, cfg.sample_rate)?;
    let result = enhancer.enhance(&noisy, &cfg.post_process)?;
    let name = file_name(input);
    let out = out_dir.join(&name);
    wav::write(&out, &result.enhanced)?;
    let diag = out.with_extension("diag");
    write_atomic(&diag, result.diagnostics().as_bytes())?;
    if result.clipped > 0 {
        warn!("{name}: {} samples clipped", result.clipped);
    }
    Ok(out)
}

/// Enhances one WAV file, or every WAV in a directory, into `out_dir`,
/// keeping file names. Each output gets a `.diag` file next to it.
pub fn enhance_path(cfg: &RunConfig, checkpoint: &Path, input: &Path, out_dir: &Path, jobs: usize) -> Result<EnhanceReport> {
    cfg.validate()?;
    let model = Model::<f32>::read(checkpoint)?;
    if model.variant != cfg.train.variant {
        info!("checkpoint variant {} overrides configured {}", model.variant, cfg.train.variant);
    }
    let enhancer = Enhancer::new(model, cfg.extractor()?)?;
    if cfg.post_process.enabled && !enhancer.model.has_ibm_head() {
        return Err(Error::Config(format!(
            "post-processing needs an IBM head, but the checkpoint is a {} model",
            enhancer.model.variant
        )));
    }
    let inputs = if input.is_dir() {
        let files = list_wavs(input)?;
        if let (Ok(a), Ok(b)) = (input.canonicalize(), out_dir.canonicalize()) {
            if a == b {
                return Err(Error::Config("output directory must differ from the input directory".into()));
            }
        }
        files
    } else {
        vec![input.to_path_buf()]
    };
    create_dir(out_dir)?;
    cfg.write(out_dir.join("enhance.config"))?;

    let results: Vec<Result<PathBuf>> =
        with_pool(jobs, || inputs.par_iter().map(|p| enhance_one(&enhancer, cfg, p, out_dir)).collect())?;
    let mut report = EnhanceReport::default();
    for (p, r) in inputs.iter().zip(results) {
        match r {
            Ok(out) => report.outputs.push(out),
            Err(e) => {
                warn!("{}: {e}", p.display());
                report.failures.push((p.clone(), e.to_string()));
            }
        }
    }
    info!("enhanced {} of {} files", report.outputs.len(), inputs.len());
    Ok(report)
}
