use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Zero crossings of the sinc kernel on each side, at the output cutoff.
const ZERO_CROSSINGS: f64 = 16.0;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

// u in [-1, 1]
fn blackman(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let p = PI * (u + 1.0);
    0.42 - 0.5 * p.cos() + 0.08 * (2.0 * p).cos()
}

/// Rational-rate resampling with a Blackman-windowed sinc, evaluated per
/// polyphase branch. Output length is `ceil(len * to / from)`.
pub fn resample(x: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if from == 0 || to == 0 {
        return Err(Error::InvalidInput("sample rates must be positive".into()));
    }
    if from == to {
        return Ok(x.to_vec());
    }
    let g = gcd(from as u64, to as u64);
    let up = (to as u64 / g) as usize;
    let down = (from as u64 / g) as usize;
    let cutoff = (to as f64 / from as f64).min(1.0);
    let half_width = ZERO_CROSSINGS / cutoff;
    let reach = half_width.ceil() as isize;

    // taps[p][k] weights input sample i0 + k - reach for output phase p / up
    let taps: Vec<Vec<f64>> = (0..up)
        .map(|p| {
            let frac = p as f64 / up as f64;
            (-reach..=reach)
                .map(|j| {
                    let d = frac - j as f64;
                    cutoff * sinc(cutoff * d) * blackman(d / half_width)
                })
                .collect()
        })
        .collect();

    let n_out = (x.len() * up).div_ceil(down);
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out {
        let pos = n * down;
        let (i0, phase) = ((pos / up) as isize, pos % up);
        let mut acc = 0.0;
        for (k, &w) in taps[phase].iter().enumerate() {
            let i = i0 + k as isize - reach;
            if i >= 0 && (i as usize) < x.len() {
                acc += w * x[i as usize];
            }
        }
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rate() {
        let x = vec![1.0, -2.0, 3.0];
        assert_eq!(resample(&x, 16000, 16000).unwrap(), x);
    }

    #[test]
    fn length() {
        assert_eq!(resample(&vec![0.0; 16000], 16000, 10000).unwrap().len(), 10000);
        assert_eq!(resample(&vec![0.0; 17], 16000, 10000).unwrap().len(), 11);
        assert!(resample(&[1.0], 0, 10).is_err());
    }

    #[test]
    fn passband_tone_preserved() {
        let f = 1000.0;
        let x: Vec<f64> = (0..16000).map(|i| (2.0 * PI * f * i as f64 / 16000.0).sin()).collect();
        let y = resample(&x, 16000, 10000).unwrap();
        let mut worst: f64 = 0.0;
        for (n, v) in y.iter().enumerate().skip(100).take(9800) {
            let want = (2.0 * PI * f * n as f64 / 10000.0).sin();
            worst = worst.max((v - want).abs());
        }
        assert!(worst < 1e-3, "max error {worst}");
    }

    #[test]
    fn stopband_tone_suppressed() {
        // 7 kHz lies above the 5 kHz output Nyquist
        let x: Vec<f64> = (0..16000).map(|i| (2.0 * PI * 7000.0 * i as f64 / 16000.0).sin()).collect();
        let y = resample(&x, 16000, 10000).unwrap();
        let rms = (y[200..9800].iter().map(|v| v * v).sum::<f64>() / 9600.0).sqrt();
        assert!(rms < 1e-3, "rms {rms}");
    }
}
