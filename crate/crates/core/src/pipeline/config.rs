//! `key = value` run configuration covering every tunable of a run.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{SNR_GRID_DB, DEFAULT_NOISE_AWARE_FRAMES};
use crate::dsp::{StftConfig, DEFAULT_SAMPLE_RATE};
use crate::enhance::PostProcessConfig;
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, IbmConfig, MelConfig};
use crate::nn::TrainConfig;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sample_rate: u32,
    pub stft: StftConfig,
    pub mel: MelConfig,
    pub ibm: IbmConfig,
    pub snr_grid: Vec<f64>,
    /// Fractions of clean utterances held out for validation and test.
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub tau: usize,
    pub noise_aware_frames: usize,
    /// Variant and seed live here too.
    pub train: TrainConfig,
    pub post_process: PostProcessConfig,
    pub ssnr_frame_len: usize,
    pub ssnr_hop: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            stft: StftConfig::default(),
            mel: MelConfig::default(),
            ibm: IbmConfig::default(),
            snr_grid: SNR_GRID_DB.to_vec(),
            valid_fraction: 0.1,
            test_fraction: 0.2,
            tau: 3,
            noise_aware_frames: DEFAULT_NOISE_AWARE_FRAMES,
            train: TrainConfig::default(),
            post_process: PostProcessConfig::default(),
            ssnr_frame_len: 512,
            ssnr_hop: 256,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse '{value}' for key '{key}'")))
}

fn parse_list<V: FromStr>(key: &str, value: &str) -> Result<Vec<V>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<V: ToString>(v: &[V]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn on_off(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!("'{key}' expects on or off, got '{value}'"))),
    }
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "sample_rate",
        "frame_len",
        "hop",
        "window",
        "fft_size",
        "n_mels",
        "mel_f_low",
        "mel_f_high",
        "ibm_threshold_db",
        "snr_grid",
        "valid_fraction",
        "test_fraction",
        "tau",
        "noise_aware_frames",
        "variant",
        "hidden_layers",
        "batch_size",
        "learning_rate",
        "final_lr_fraction",
        "momentum",
        "dropout_rate",
        "epochs",
        "alpha",
        "beta",
        "seed",
        "post_process",
        "pp_gamma",
        "pp_epsilon",
        "ssnr_frame_len",
        "ssnr_hop",
    ];

    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "sample_rate" => self.sample_rate = parse(key, v)?,
            "frame_len" => self.stft.frame_len = parse(key, v)?,
            "hop" => self.stft.hop = parse(key, v)?,
            "window" => self.stft.window = v.parse()?,
            "fft_size" => self.stft.fft_size = parse(key, v)?,
            "n_mels" => self.mel.n_mels = parse(key, v)?,
            "mel_f_low" => self.mel.f_low = parse(key, v)?,
            "mel_f_high" => self.mel.f_high = parse(key, v)?,
            "ibm_threshold_db" => self.ibm.local_snr_threshold_db = parse(key, v)?,
            "snr_grid" => self.snr_grid = parse_list(key, v)?,
            "valid_fraction" => self.valid_fraction = parse(key, v)?,
            "test_fraction" => self.test_fraction = parse(key, v)?,
            "tau" => self.tau = parse(key, v)?,
            "noise_aware_frames" => self.noise_aware_frames = parse(key, v)?,
            "variant" => self.train.variant = v.parse()?,
            "hidden_layers" => self.train.hidden_layers = parse_list(key, v)?,
            "batch_size" => self.train.batch_size = parse(key, v)?,
            "learning_rate" => self.train.learning_rate = parse(key, v)?,
            "final_lr_fraction" => self.train.final_lr_fraction = parse(key, v)?,
            "momentum" => self.train.momentum = parse(key, v)?,
            "dropout_rate" => self.train.dropout_rate = parse(key, v)?,
            "epochs" => self.train.epochs = parse(key, v)?,
            "alpha" => self.train.weights.alpha = parse(key, v)?,
            "beta" => self.train.weights.beta = parse(key, v)?,
            "seed" => self.train.seed = parse(key, v)?,
            "post_process" => self.post_process.enabled = on_off(key, v)?,
            "pp_gamma" => self.post_process.gamma = parse(key, v)?,
            "pp_epsilon" => self.post_process.epsilon = parse(key, v)?,
            "ssnr_frame_len" => self.ssnr_frame_len = parse(key, v)?,
            "ssnr_hop" => self.ssnr_hop = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Current value of a key, formatted as `to_text` writes it.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "sample_rate" => self.sample_rate.to_string(),
            "frame_len" => self.stft.frame_len.to_string(),
            "hop" => self.stft.hop.to_string(),
            "window" => self.stft.window.to_string(),
            "fft_size" => self.stft.fft_size.to_string(),
            "n_mels" => self.mel.n_mels.to_string(),
            "mel_f_low" => self.mel.f_low.to_string(),
            "mel_f_high" => self.mel.f_high.to_string(),
            "ibm_threshold_db" => self.ibm.local_snr_threshold_db.to_string(),
            "snr_grid" => join(&self.snr_grid),
            "valid_fraction" => self.valid_fraction.to_string(),
            "test_fraction" => self.test_fraction.to_string(),
            "tau" => self.tau.to_string(),
            "noise_aware_frames" => self.noise_aware_frames.to_string(),
            "variant" => self.train.variant.to_string(),
            "hidden_layers" => join(&self.train.hidden_layers),
            "batch_size" => self.train.batch_size.to_string(),
            "learning_rate" => self.train.learning_rate.to_string(),
            "final_lr_fraction" => self.train.final_lr_fraction.to_string(),
            "momentum" => self.train.momentum.to_string(),
            "dropout_rate" => self.train.dropout_rate.to_string(),
            "epochs" => self.train.epochs.to_string(),
            "alpha" => self.train.weights.alpha.to_string(),
            "beta" => self.train.weights.beta.to_string(),
            "seed" => self.train.seed.to_string(),
            "post_process" => if self.post_process.enabled { "on" } else { "off" }.to_string(),
            "pp_gamma" => self.post_process.gamma.to_string(),
            "pp_epsilon" => self.post_process.epsilon.to_string(),
            "ssnr_frame_len" => self.ssnr_frame_len.to_string(),
            "ssnr_hop" => self.ssnr_hop.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
                what: "config",
                reason: format!("line {}: expected key = value", i + 1),
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        self.stft.validate()?;
        IbmConfig::new(self.ibm.local_snr_threshold_db)?;
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_grid needs at least one finite value".into()));
        }
        let fr = [self.valid_fraction, self.test_fraction];
        if fr.iter().any(|f| !(0.0..1.0).contains(f)) || fr[0] + fr[1] >= 1.0 {
            return Err(Error::Config(
                "valid_fraction and test_fraction must lie in [0, 1) and sum below 1".into(),
            ));
        }
        if self.noise_aware_frames == 0 {
            return Err(Error::Config("noise_aware_frames must be at least 1".into()));
        }
        self.train.validate()?;
        if self.post_process.enabled {
            self.post_process.validate()?;
        }
        if self.ssnr_frame_len == 0 || self.ssnr_hop == 0 {
            return Err(Error::Config("ssnr_frame_len and ssnr_hop must be positive".into()));
        }
        Ok(())
    }

    pub fn extractor<T: Scalar>(&self) -> Result<FeatureExtractor<T>> {
        FeatureExtractor::new(self.stft, self.sample_rate, self.mel, self.ibm)
    }
}
