use num_complex::Complex;

use super::{aligned, resample};
use crate::dsp::{FftPlan, Waveform};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Internal analysis rate.
pub const STOI_RATE: u32 = 10_000;
const FRAME: usize = 256;
const HOP: usize = FRAME / 2;
const NFFT: usize = 512;
const N_BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
const SEGMENT: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE_DB: f64 = 40.0;
const EPS: f64 = f64::EPSILON;

// symmetric Hann without the zero end points
fn window() -> Vec<f64> {
    (1..=FRAME)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (FRAME + 1) as f64).cos())
        .collect()
}

/// Drops frames more than 40 dB below the loudest reference frame, then
/// overlap-adds the survivors of both signals.
fn remove_silent_frames(x: &[f64], y: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    if x.len() < FRAME {
        return (Vec::new(), Vec::new());
    }
    let starts: Vec<usize> = (0..=x.len() - FRAME).step_by(HOP).collect();
    let energy: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = (0..FRAME).map(|i| (w[i] * x[s + i]).powi(2)).sum();
            20.0 * (e.sqrt() + EPS).log10()
        })
        .collect();
    let max = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energy)
        .filter(|(_, &e)| max - DYN_RANGE_DB - e < 0.0)
        .map(|(&s, _)| s)
        .collect();
    if kept.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let len = (kept.len() - 1) * HOP + FRAME;
    let (mut xo, mut yo) = (vec![0.0; len], vec![0.0; len]);
    for (k, &s) in kept.iter().enumerate() {
        for i in 0..FRAME {
            xo[k * HOP + i] += w[i] * x[s + i];
            yo[k * HOP + i] += w[i] * y[s + i];
        }
    }
    (xo, yo)
}

/// Third-octave band edges as FFT bin ranges `[lo, hi)`.
fn band_edges() -> Vec<(usize, usize)> {
    let n_bins = NFFT / 2 + 1;
    let freqs: Vec<f64> = (0..n_bins).map(|k| k as f64 * STOI_RATE as f64 / NFFT as f64).collect();
    let nearest = |f: f64| {
        let mut best = 0;
        for k in 1..n_bins {
            if (freqs[k] - f).abs() < (freqs[best] - f).abs() {
                best = k;
            }
        }
        best
    };
    (0..N_BANDS)
        .map(|b| {
            let b = b as f64;
            let lo = MIN_FREQ * 2f64.powf((2.0 * b - 1.0) / 6.0);
            let hi = MIN_FREQ * 2f64.powf((2.0 * b + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

/// Band envelopes, `[band][frame]`.
fn band_envelopes(x: &[f64], w: &[f64], fft: &FftPlan<f64>, bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut env = vec![Vec::new(); bands.len()];
    if x.len() <= FRAME {
        return env;
    }
    let mut buf = vec![Complex::new(0.0, 0.0); NFFT];
    for s in (0..x.len() - FRAME).step_by(HOP) {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for i in 0..FRAME {
            buf[i].re = w[i] * x[s + i];
        }
        fft.forward(&mut buf);
        for (b, &(lo, hi)) in bands.iter().enumerate() {
            let p: f64 = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            env[b].push(p.sqrt());
        }
    }
    env
}

fn centred_unit(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|a| *a -= mean);
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt() + EPS;
    v.iter_mut().for_each(|a| *a /= norm);
}

/// Short-time objective intelligibility of `test` against `reference`.
pub fn stoi<T: Scalar>(reference: &Waveform<T>, test: &Waveform<T>) -> Result<f64> {
    let (x, y) = aligned(reference, test)?;
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::UndefinedMetric("reference is silent".into()));
    }
    let rate = reference.sample_rate;
    let x = resample(&x, rate, STOI_RATE)?;
    let y = resample(&y, rate, STOI_RATE)?;
    let w = window();
    let (x, y) = remove_silent_frames(&x, &y, &w);

    let fft = FftPlan::new(NFFT)?;
    let bands = band_edges();
    let xe = band_envelopes(&x, &w, &fft, &bands);
    let ye = band_envelopes(&y, &w, &fft, &bands);
    let n_frames = xe[0].len();
    if n_frames < SEGMENT {
        return Err(Error::InvalidInput(format!(
            "STOI needs at least {SEGMENT} speech-active frames, got {n_frames}"
        )));
    }

    let clip = 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for end in SEGMENT..=n_frames {
        for b in 0..N_BANDS {
            let mut xs = xe[b][end - SEGMENT..end].to_vec();
            let ys = &ye[b][end - SEGMENT..end];
            let xn = xs.iter().map(|a| a * a).sum::<f64>().sqrt();
            let yn = ys.iter().map(|a| a * a).sum::<f64>().sqrt();
            let scale = xn / (yn + EPS);
            let mut yp: Vec<f64> = ys
                .iter()
                .zip(&xs)
                .map(|(&yv, &xv)| (yv * scale).min(xv * (1.0 + clip)))
                .collect();
            centred_unit(&mut yp);
            centred_unit(&mut xs);
            total += yp.iter().zip(&xs).map(|(a, b)| a * b).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}
