//! Deterministic synthetic material: speech-like utterances (voiced syllables
//! with formant structure, fricatives, pauses) and stationary noises.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{wav, Waveform};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
];
const BANDWIDTHS: [f64; 3] = [90.0, 110.0, 140.0];
const TARGET_RMS: f64 = 0.1;
/// Recording noise floor relative to the speech RMS (-60 dB).
const FLOOR_RATIO: f64 = 1e-3;

fn hann_env(i: usize, n: usize) -> f64 {
    0.5 - 0.5 * (2.0 * PI * (i as f64 + 0.5) / n as f64).cos()
}

fn scale_to_rms(x: &mut [f64], rms: f64) {
    let cur = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    if cur > 0.0 {
        x.iter_mut().for_each(|v| *v *= rms / cur);
    }
}

fn n_samples(duration_secs: f64, sample_rate: u32) -> Result<usize> {
    if !(duration_secs > 0.0) || sample_rate == 0 {
        return Err(Error::InvalidInput("duration and sample rate must be positive".into()));
    }
    Ok((duration_secs * sample_rate as f64).round() as usize)
}

fn voiced(out: &mut [f64], rng: &mut ChaCha8Rng, rate: f64) {
    let n = out.len();
    let formants = VOWELS[rng.random_range(0..VOWELS.len())];
    let f0_start: f64 = rng.random_range(100.0..220.0);
    let f0_end = f0_start * rng.random_range(0.8..1.2);
    let max_h = (0.48 * rate / f0_start.max(f0_end)).floor() as usize;
    let gain = |f: f64| -> f64 {
        let res: f64 = formants
            .iter()
            .zip(BANDWIDTHS)
            .map(|(&fc, bw)| 1.0 / (1.0 + ((f - fc) / bw).powi(2)))
            .sum();
        (res + 0.02) / (1.0 + f / 1000.0)
    };
    let mut phase = 0.0;
    for (i, o) in out.iter_mut().enumerate() {
        let f0 = f0_start + (f0_end - f0_start) * i as f64 / n as f64;
        phase += 2.0 * PI * f0 / rate;
        let mut s = 0.0;
        for h in 1..=max_h {
            s += gain(h as f64 * f0) * (h as f64 * phase).sin();
        }
        *o += s * hann_env(i, n);
    }
}

fn fricative(out: &mut [f64], rng: &mut ChaCha8Rng, level: f64) {
    let n = out.len();
    let (mut p1, mut p2) = (0.0, 0.0);
    for (i, o) in out.iter_mut().enumerate() {
        let w: f64 = rng.random_range(-1.0..1.0);
        // second difference pushes energy towards high frequencies
        let hp = w - 2.0 * p1 + p2;
        p2 = p1;
        p1 = w;
        *o += level * hp * hann_env(i, n);
    }
}

/// A speech-like utterance at RMS 0.1 over a -60 dB noise floor,
/// reproducible from `seed`.
pub fn utterance<T: Scalar>(seed: u64, duration_secs: f64, sample_rate: u32) -> Result<Waveform<T>> {
    let n = n_samples(duration_secs, sample_rate)?;
    let rate = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut pos = (rng.random_range(0.02..0.08) * rate) as usize;
    while pos < n {
        if rng.random_bool(0.3) {
            let len = (rng.random_range(0.05..0.1) * rate) as usize;
            let end = (pos + len).min(n);
            fricative(&mut x[pos..end], &mut rng, 0.6);
            pos = end;
        }
        let len = (rng.random_range(0.12..0.3) * rate) as usize;
        let end = (pos + len).min(n);
        if end > pos {
            voiced(&mut x[pos..end], &mut rng, rate);
        }
        pos = end + (rng.random_range(0.03..0.15) * rate) as usize;
    }
    scale_to_rms(&mut x, TARGET_RMS);
    for v in x.iter_mut() {
        *v += FLOOR_RATIO * TARGET_RMS * rng.random_range(-1.0..1.0) * 3f64.sqrt();
    }
    Waveform::new(x.into_iter().map(T::lit).collect(), sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    White,
    Pink,
    /// Mains hum with harmonics over a low broadband floor.
    Hum,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Pink, NoiseKind::Hum];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::Hum => "hum",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown noise kind '{s}'")))
    }
}

/// Stationary noise at RMS 0.1, reproducible from `seed`.
pub fn noise<T: Scalar>(kind: NoiseKind, seed: u64, duration_secs: f64, sample_rate: u32) -> Result<Waveform<T>> {
    let n = n_samples(duration_secs, sample_rate)?;
    let rate = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = match kind {
        NoiseKind::White => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        NoiseKind::Pink => {
            // Kellet's economy filter
            let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
            (0..n)
                .map(|_| {
                    let w: f64 = rng.random_range(-1.0..1.0);
                    b0 = 0.99765 * b0 + w * 0.0990460;
                    b1 = 0.96300 * b1 + w * 0.2965164;
                    b2 = 0.57000 * b2 + w * 1.0526913;
                    b0 + b1 + b2 + w * 0.1848
                })
                .collect()
        }
        NoiseKind::Hum => {
            let f0 = rng.random_range(48.0..62.0);
            let phases: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            (0..n)
                .map(|i| {
                    let t = i as f64 / rate;
                    let tonal: f64 = phases
                        .iter()
                        .enumerate()
                        .map(|(h, p)| (2.0 * PI * f0 * (h + 1) as f64 * t + p).sin() / (h + 1) as f64)
                        .sum();
                    tonal + 0.15 * rng.random_range(-1.0..1.0)
                })
                .collect()
        }
    };
    scale_to_rms(&mut x, TARGET_RMS);
    Waveform::new(x.into_iter().map(T::lit).collect(), sample_rate)
}

/// Writes `n_clean` utterances to `clean_dir` and one file per noise kind
/// to `noise_dir`, as 16-bit WAV. Noises last four times the utterance length.
pub fn write_corpus(
    clean_dir: impl AsRef<Path>,
    noise_dir: impl AsRef<Path>,
    n_clean: usize,
    duration_secs: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<()> {
    let (clean_dir, noise_dir) = (clean_dir.as_ref(), noise_dir.as_ref());
    for dir in [clean_dir, noise_dir] {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for i in 0..n_clean {
        let u = utterance::<f64>(seed.wrapping_add(i as u64), duration_secs, sample_rate)?;
        wav::write(clean_dir.join(format!("utt{i:03}.wav")), &u)?;
    }
    for (k, kind) in NoiseKind::ALL.into_iter().enumerate() {
        let nz = noise::<f64>(kind, seed ^ (0x5EED_0000 + k as u64), 4.0 * duration_secs, sample_rate)?;
        wav::write(noise_dir.join(format!("{kind}.wav")), &nz)?;
    }
    Ok(())
}
