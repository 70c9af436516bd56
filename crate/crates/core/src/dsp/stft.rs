//! Short-time Fourier analysis and weighted overlap-add synthesis.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Zip};
use num_complex::Complex;

use super::fft::FftPlan;
use super::Waveform;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Analysis/synthesis window shape. Windows are periodic so that the
/// standard 50% overlap satisfies constant overlap-add.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients<T: Scalar>(self, len: usize) -> Vec<T> {
        (0..len)
            .map(|n| {
                let phase = 2.0 * PI * n as f64 / len as f64;
                let w = match self {
                    WindowKind::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowKind::Rectangular => 1.0,
                };
                T::lit(w)
            })
            .collect()
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
            WindowKind::Rectangular => "rectangular",
        })
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(WindowKind::Hann),
            "hamming" => Ok(WindowKind::Hamming),
            "rectangular" | "rect" => Ok(WindowKind::Rectangular),
            other => Err(Error::Config(format!("unknown window '{other}'"))),
        }
    }
}

/// Framing parameters. Default: 512-sample Hann frames, hop 256, 512-point FFT
/// (257 bins, 32 ms at 16 kHz).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: WindowKind,
    pub fft_size: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            frame_len: 512,
            hop: 256,
            window: WindowKind::Hann,
            fft_size: 512,
        }
    }
}

impl StftConfig {
    /// Builds a configuration, rejecting invalid framing and window/hop pairs
    /// that are not constant overlap-add.
    pub fn new(frame_len: usize, hop: usize, window: WindowKind, fft_size: usize) -> Result<Self> {
        let cfg = Self {
            frame_len,
            hop,
            window,
            fft_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.hop && self.hop <= self.frame_len && self.frame_len <= self.fft_size) {
            return Err(Error::Config(format!(
                "need 0 < hop ({}) <= frame_len ({}) <= fft_size ({})",
                self.hop, self.frame_len, self.fft_size
            )));
        }
        if !self.fft_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "fft_size {} is not a power of two",
                self.fft_size
            )));
        }
        if !self.is_cola() {
            return Err(Error::Config(format!(
                "{} window with frame_len {} and hop {} is not constant overlap-add",
                self.window, self.frame_len, self.hop
            )));
        }
        Ok(())
    }

    /// Number of non-negative frequency bins, `fft_size / 2 + 1`.
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.frame_len {
            0
        } else {
            1 + (n_samples - self.frame_len) / self.hop
        }
    }

    /// Whether shifted copies of the window at multiples of `hop` sum to a constant.
    pub fn is_cola(&self) -> bool {
        let w: Vec<f64> = self.window.coefficients(self.frame_len);
        let sums: Vec<f64> = (0..self.hop)
            .map(|n| w.iter().skip(n).step_by(self.hop).sum())
            .collect();
        let max = sums.iter().cloned().fold(f64::MIN, f64::max);
        let min = sums.iter().cloned().fold(f64::MAX, f64::min);
        max > 0.0 && (max - min) <= 1e-10 * max
    }

    pub fn bin_frequency(&self, bin: usize, sample_rate: u32) -> f64 {
        bin as f64 * sample_rate as f64 / self.fft_size as f64
    }
}

/// Complex STFT frames (`n_frames x n_bins`) together with the framing used.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub frames: Array2<Complex<T>>,
    pub config: StftConfig,
    pub sample_rate: u32,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn new(frames: Array2<Complex<T>>, config: StftConfig, sample_rate: u32) -> Result<Self> {
        if frames.ncols() != config.n_bins() {
            return Err(Error::shape(
                format!("{} bins", config.n_bins()),
                format!("{} bins", frames.ncols()),
            ));
        }
        Ok(Self {
            frames,
            config,
            sample_rate,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.frames.ncols()
    }

    /// Element-wise `|z|^2`.
    pub fn power(&self) -> Array2<T> {
        self.frames.mapv(|z| z.norm_sqr())
    }

    /// Element-wise magnitude and phase, with `arg(0) = 0`.
    pub fn magnitude_phase(&self) -> (Array2<T>, Array2<T>) {
        let mag = self.frames.mapv(|z| z.norm());
        let phase = self.frames.mapv(|z| {
            if z.re == T::zero() && z.im == T::zero() {
                T::zero()
            } else {
                z.im.atan2(z.re)
            }
        });
        (mag, phase)
    }

    /// Inverse of [`Spectrogram::magnitude_phase`].
    pub fn from_magnitude_phase(
        magnitude: ArrayView2<T>,
        phase: ArrayView2<T>,
        config: StftConfig,
        sample_rate: u32,
    ) -> Result<Self> {
        if magnitude.dim() != phase.dim() {
            return Err(Error::shape(
                format!("{:?}", magnitude.dim()),
                format!("{:?}", phase.dim()),
            ));
        }
        let mut frames = Array2::from_elem(magnitude.dim(), Complex::new(T::zero(), T::zero()));
        Zip::from(&mut frames)
            .and(magnitude)
            .and(phase)
            .for_each(|z, &m, &p| *z = Complex::from_polar(m, p));
        Self::new(frames, config, sample_rate)
    }
}

/// Forward STFT. Frames start at sample 0; a trailing partial frame is dropped.
pub fn stft<T: Scalar>(wave: &Waveform<T>, config: &StftConfig) -> Result<Spectrogram<T>> {
    config.validate()?;
    let n = wave.len();
    if n < config.frame_len {
        return Err(Error::InvalidInput(format!(
            "signal of {n} samples is shorter than one frame ({})",
            config.frame_len
        )));
    }
    let plan = FftPlan::<T>::new(config.fft_size)?;
    let window: Vec<T> = config.window.coefficients(config.frame_len);
    let n_frames = config.n_frames(n);
    let n_bins = config.n_bins();
    let zero = Complex::new(T::zero(), T::zero());
    let mut frames = Array2::from_elem((n_frames, n_bins), zero);
    let mut buf = vec![zero; config.fft_size];
    for (f, mut row) in frames.rows_mut().into_iter().enumerate() {
        let start = f * config.hop;
        buf.fill(zero);
        for (i, (slot, &w)) in buf.iter_mut().zip(&window).enumerate() {
            *slot = Complex::new(wave.samples[start + i] * w, T::zero());
        }
        plan.forward(&mut buf);
        for (dst, src) in row.iter_mut().zip(&buf) {
            *dst = *src;
        }
    }
    Spectrogram::new(frames, *config, wave.sample_rate)
}

/// Weighted overlap-add synthesis normalized by the summed squared window.
///
/// Samples never covered by a non-zero window value (the first sample for a
/// periodic Hann window, samples past the last frame) come out as zero.
pub fn istft<T: Scalar>(spec: &Spectrogram<T>, target_len: usize) -> Result<Waveform<T>> {
    let config = spec.config;
    config.validate()?;
    if spec.n_bins() != config.n_bins() {
        return Err(Error::shape(
            format!("{} bins", config.n_bins()),
            format!("{} bins", spec.n_bins()),
        ));
    }
    let plan = FftPlan::<T>::new(config.fft_size)?;
    let window: Vec<T> = config.window.coefficients(config.frame_len);
    let n_frames = spec.n_frames();
    let span = if n_frames == 0 {
        0
    } else {
        (n_frames - 1) * config.hop + config.frame_len
    };
    let mut acc = vec![T::zero(); span];
    let mut norm = vec![T::zero(); span];
    let zero = Complex::new(T::zero(), T::zero());
    let mut buf = vec![zero; config.fft_size];
    let half = config.fft_size / 2;
    for (f, row) in spec.frames.rows().into_iter().enumerate() {
        for (k, &z) in row.iter().enumerate() {
            buf[k] = z;
        }
        for k in 1..half {
            buf[config.fft_size - k] = row[k].conj();
        }
        plan.inverse(&mut buf);
        let start = f * config.hop;
        for (i, &w) in window.iter().enumerate() {
            acc[start + i] = acc[start + i] + buf[i].re * w;
            norm[start + i] = norm[start + i] + w * w;
        }
    }
    let eps = T::lit(1e-10);
    let mut samples: Vec<T> = acc
        .into_iter()
        .zip(norm)
        .map(|(a, w2)| if w2 > eps { a / w2 } else { T::zero() })
        .collect();
    samples.resize(target_len, T::zero());
    Waveform::new(samples, spec.sample_rate)
}
