use super::aligned;
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SSNR_MIN_DB: f64 = -10.0;
pub const SSNR_MAX_DB: f64 = 35.0;
/// Frames whose power is at most this fraction of the utterance mean are skipped.
pub const SSNR_SILENCE_FLOOR: f64 = 1e-8;

/// Segmental SNR in dB: per-frame SNR clamped to [-10, 35] dB and averaged
/// over non-silent reference frames.
pub fn ssnr<T: Scalar>(reference: &Waveform<T>, test: &Waveform<T>, frame_len: usize, hop: usize) -> Result<f64> {
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidInput("frame length and hop must be positive".into()));
    }
    let (r, t) = aligned(reference, test)?;
    if r.len() < frame_len {
        return Err(Error::UndefinedMetric(format!(
            "signal of {} samples is shorter than one {frame_len}-sample frame",
            r.len()
        )));
    }
    let mean_power = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
    let floor = SSNR_SILENCE_FLOOR * mean_power;
    let mut total = 0.0;
    let mut used = 0usize;
    for start in (0..=r.len() - frame_len).step_by(hop) {
        let (mut sig, mut err) = (0.0, 0.0);
        for i in start..start + frame_len {
            sig += r[i] * r[i];
            let e = r[i] - t[i];
            err += e * e;
        }
        if sig / frame_len as f64 <= floor || sig == 0.0 {
            continue;
        }
        let snr = if err == 0.0 {
            SSNR_MAX_DB
        } else {
            (10.0 * (sig / err).log10()).clamp(SSNR_MIN_DB, SSNR_MAX_DB)
        };
        total += snr;
        used += 1;
    }
    if used == 0 {
        return Err(Error::UndefinedMetric("reference is silent in every frame".into()));
    }
    Ok(total / used as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize) -> Waveform<f64> {
        Waveform::new((0..n).map(|i| (i as f64 * 0.05).sin() * 0.3).collect(), 16000).unwrap()
    }

    #[test]
    fn identical_hits_upper_clamp() {
        let x = tone(8000);
        assert_eq!(ssnr(&x, &x, 512, 256).unwrap(), 35.0);
    }

    #[test]
    fn zero_test_is_zero_db() {
        let x = tone(8000);
        let z = Waveform::new(vec![0.0; 8000], 16000).unwrap();
        assert!(ssnr(&x, &z, 512, 256).unwrap().abs() < 1e-12);
    }

    #[test]
    fn negated_test() {
        let x = tone(8000);
        let neg = Waveform::new(x.samples.iter().map(|v| -v).collect(), 16000).unwrap();
        let want = 10.0 * 0.25f64.log10();
        assert!((ssnr(&x, &neg, 512, 256).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn lower_clamp() {
        let x = tone(8000);
        let loud = Waveform::new(x.samples.iter().map(|v| v * 100.0).collect(), 16000).unwrap();
        assert_eq!(ssnr(&x, &loud, 512, 256).unwrap(), -10.0);
    }

    #[test]
    fn silent_frames_skipped() {
        let mut s = vec![0.0; 4096];
        s.extend(tone(4096).samples);
        let x = Waveform::new(s, 16000).unwrap();
        let z = Waveform::new(vec![0.0; 8192], 16000).unwrap();
        // only active frames count, each at 0 dB
        assert!(ssnr(&x, &z, 512, 256).unwrap().abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let z = Waveform::new(vec![0.0; 4096], 16000).unwrap();
        assert!(matches!(ssnr(&z, &z, 512, 256), Err(Error::UndefinedMetric(_))));
        let short = tone(100);
        assert!(ssnr(&short, &short, 512, 256).is_err());
        let other = Waveform::new(vec![0.0; 4096], 8000).unwrap();
        assert!(ssnr(&tone(4096), &other, 512, 256).is_err());
    }
}
