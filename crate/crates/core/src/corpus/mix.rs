use super::MixSpec;
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Result of mixing: the noisy signal and the exact noise component in it.
#[derive(Debug, Clone)]
pub struct Mixture<T> {
    pub noisy: Waveform<T>,
    pub scaled_noise: Waveform<T>,
    pub gain: f64,
}

/// `len` noise samples starting at `offset`, wrapping around the noise signal.
pub fn noise_segment<T: Scalar>(noise: &Waveform<T>, offset: usize, len: usize) -> Result<Vec<T>> {
    if noise.is_empty() {
        return Err(Error::CannotScale("noise signal is empty".into()));
    }
    let n = noise.len();
    Ok((0..len).map(|i| noise.samples[(offset + i) % n]).collect())
}

/// Gain applied to noise of power `noise_power` so that the mixture has the
/// requested SNR against speech of power `clean_power`.
pub fn snr_gain(clean_power: f64, noise_power: f64, snr_db: f64) -> f64 {
    (clean_power / (noise_power * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// Adds noise (wrapped from `noise_offset`) to `clean` at `snr_db`, with
/// powers measured as the mean over the utterance.
pub fn mix_at_snr<T: Scalar>(
    clean: &Waveform<T>,
    noise: &Waveform<T>,
    snr_db: f64,
    noise_offset: usize,
) -> Result<Mixture<T>> {
    if clean.sample_rate != noise.sample_rate {
        return Err(Error::InvalidInput(format!(
            "clean at {} Hz, noise at {} Hz",
            clean.sample_rate, noise.sample_rate
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidInput("SNR must be finite".into()));
    }
    let clean_power = clean.mean_power();
    if clean_power <= 0.0 {
        return Err(Error::CannotScale("clean signal is silent".into()));
    }
    let segment = noise_segment(noise, noise_offset, clean.len())?;
    let noise_power =
        segment.iter().map(|x| x.as_f64().powi(2)).sum::<f64>() / segment.len().max(1) as f64;
    if noise_power <= 0.0 {
        return Err(Error::CannotScale("noise segment is silent".into()));
    }
    let gain = snr_gain(clean_power, noise_power, snr_db);
    let g = T::lit(gain);
    let scaled: Vec<T> = segment.iter().map(|&x| x * g).collect();
    let noisy: Vec<T> = clean.samples.iter().zip(&scaled).map(|(&c, &n)| c + n).collect();
    Ok(Mixture {
        noisy: Waveform::new(noisy, clean.sample_rate)?,
        scaled_noise: Waveform::new(scaled, clean.sample_rate)?,
        gain,
    })
}

/// Convenience wrapper taking the mixing recipe from a [`MixSpec`].
pub fn mix_from_spec<T: Scalar>(clean: &Waveform<T>, noise: &Waveform<T>, spec: &MixSpec) -> Result<Mixture<T>> {
    mix_at_snr(clean, noise, spec.snr_db, spec.noise_offset)
}

/// SNR in dB measured from the two components of a mixture.
pub fn measured_snr_db<T: Scalar>(clean: &Waveform<T>, noise: &Waveform<T>) -> f64 {
    10.0 * (clean.mean_power() / noise.mean_power()).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(v: Vec<f64>) -> Waveform<f64> {
        Waveform::new(v, 16000).unwrap()
    }

    #[test]
    fn equal_power_zero_db_unit_gain() {
        let c = wave(vec![1.0, -1.0, 1.0, -1.0]);
        let n = wave(vec![-1.0, 1.0, 1.0, -1.0]);
        let m = mix_at_snr(&c, &n, 0.0, 0).unwrap();
        assert_eq!(m.gain, 1.0);
        let m = mix_at_snr(&c, &n, 20.0, 0).unwrap();
        assert!((m.gain - 0.1).abs() < 1e-15);
    }

    #[test]
    fn components_sum_exactly() {
        let c = wave((0..100).map(|i| (i as f64 * 0.3).sin()).collect());
        let n = wave((0..37).map(|i| (i as f64 * 1.7).cos()).collect());
        let m = mix_at_snr(&c, &n, 5.0, 30).unwrap();
        for i in 0..100 {
            assert_eq!(m.noisy.samples[i], c.samples[i] + m.scaled_noise.samples[i]);
        }
        assert!((measured_snr_db(&c, &m.scaled_noise) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn wraps_noise() {
        let n = wave(vec![1.0, 2.0, 3.0]);
        assert_eq!(noise_segment(&n, 2, 5).unwrap(), vec![3.0, 1.0, 2.0, 3.0, 1.0]);
    }

    #[test]
    fn silent_inputs_cannot_scale() {
        let c = wave(vec![0.0; 8]);
        let n = wave(vec![0.5; 8]);
        assert!(matches!(mix_at_snr(&c, &n, 0.0, 0), Err(Error::CannotScale(_))));
        assert!(matches!(mix_at_snr(&n, &c, 0.0, 0), Err(Error::CannotScale(_))));
        let n8 = Waveform::new(vec![0.5; 8], 8000).unwrap();
        assert!(mix_at_snr(&n, &n8, 0.0, 0).is_err());
    }
}
