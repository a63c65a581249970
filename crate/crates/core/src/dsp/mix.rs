use rand::Rng;

use super::{AudioSignal, DspError, Result};

/// Mean squared amplitude.
pub fn mean_power(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64
}

pub fn rms(samples: &[f64]) -> f64 {
    mean_power(samples).sqrt()
}

/// Gain `g` such that `10 log10(p_clean / (g^2 p_noise)) = snr_db`.
pub fn noise_gain_for_snr(p_clean: f64, p_noise: f64, snr_db: f64) -> Result<f64> {
    if !(p_clean > 0.0 && p_noise > 0.0) {
        return Err(DspError::DegeneratePower);
    }
    Ok((p_clean / p_noise * 10f64.powf(-snr_db / 10.0)).sqrt())
}

/// Mixes `clean` with the noise segment starting at `offset`, scaled to hit `snr_db`
/// over the whole utterance. Returns the mixture and the applied noise gain.
pub fn mix_at_snr_with_offset(
    clean: &AudioSignal,
    noise: &AudioSignal,
    snr_db: f64,
    offset: usize,
) -> Result<(AudioSignal, f64)> {
    if clean.sample_rate_hz != noise.sample_rate_hz {
        return Err(DspError::RateMismatch(clean.sample_rate_hz, noise.sample_rate_hz));
    }
    let len = clean.len();
    if offset + len > noise.len() {
        return Err(DspError::NoiseTooShort { offset, len, available: noise.len() });
    }
    let segment = &noise.samples[offset..offset + len];
    let gain = noise_gain_for_snr(mean_power(&clean.samples), mean_power(segment), snr_db)?;
    let samples = clean.samples.iter().zip(segment).map(|(c, n)| c + gain * n).collect();
    Ok((AudioSignal::new(samples, clean.sample_rate_hz), gain))
}

/// Like [`mix_at_snr_with_offset`] with the segment offset drawn uniformly from `rng`.
pub fn mix_at_snr<R: Rng + ?Sized>(
    clean: &AudioSignal,
    noise: &AudioSignal,
    snr_db: f64,
    rng: &mut R,
) -> Result<AudioSignal> {
    if noise.len() < clean.len() {
        return Err(DspError::NoiseTooShort { offset: 0, len: clean.len(), available: noise.len() });
    }
    let offset = rng.gen_range(0..=noise.len() - clean.len());
    mix_at_snr_with_offset(clean, noise, snr_db, offset).map(|(mix, _)| mix)
}

pub fn rms_normalize(signal: &AudioSignal, target_rms: f64) -> Result<AudioSignal> {
    if !(target_rms > 0.0) {
        return Err(DspError::InvalidArgument(format!("target rms {target_rms} must be positive")));
    }
    let current = rms(&signal.samples);
    if !(current > 0.0) {
        return Err(DspError::DegeneratePower);
    }
    Ok(signal.scaled(target_rms / current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, prop_assume, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig(v: Vec<f64>) -> AudioSignal {
        AudioSignal::new(v, 16_000)
    }

    fn achieved_snr(clean: &[f64], mix: &[f64]) -> f64 {
        let noise: Vec<f64> = mix.iter().zip(clean).map(|(m, c)| m - c).collect();
        10.0 * (mean_power(clean) / mean_power(&noise)).log10()
    }

    #[test]
    fn equal_power_zero_db_is_unit_gain() {
        assert_eq!(noise_gain_for_snr(1.0, 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn twenty_db_is_one_tenth() {
        assert!((noise_gain_for_snr(1.0, 1.0, 20.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn lowest_training_snr_is_hit() {
        let clean = sig((0..4000).map(|n| (n as f64 * 0.05).sin()).collect());
        let noise = sig((0..6000).map(|n| ((n * 31) % 17) as f64 / 17.0 - 0.5).collect());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mix = mix_at_snr(&clean, &noise, -15.0, &mut rng).unwrap();
        assert!((achieved_snr(&clean.samples, &mix.samples) + 15.0).abs() < 1e-9);
    }

    #[test]
    fn silent_inputs_are_degenerate() {
        let clean = sig(vec![0.0; 100]);
        let noise = sig(vec![0.3; 100]);
        assert!(matches!(
            mix_at_snr_with_offset(&clean, &noise, 0.0, 0),
            Err(DspError::DegeneratePower)
        ));
        assert!(matches!(
            mix_at_snr_with_offset(&noise, &clean, 0.0, 0),
            Err(DspError::DegeneratePower)
        ));
    }

    #[test]
    fn rms_normalize_cases() {
        let c = sig(vec![0.5; 64]);
        assert_eq!(rms_normalize(&c, 0.5).unwrap().samples, c.samples);

        let sine = sig((0..16_000).map(|n| (2.0 * std::f64::consts::PI * n as f64 / 160.0).sin()).collect());
        let before = rms(&sine.samples);
        assert!((before - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let out = rms_normalize(&sine, 0.1).unwrap();
        assert!((out.samples[40] / sine.samples[40] - 0.1 / before).abs() < 1e-12);
        assert!((rms(&out.samples) - 0.1).abs() < 1e-9 * 0.1);

        let err = rms_normalize(&sig(vec![0.0; 10]), 0.1).unwrap_err();
        assert_eq!(err.to_string(), "degenerate power");
    }

    proptest! {
        #[test]
        fn achieved_snr_matches_request(
            clean in prop::collection::vec(-1.0f64..1.0, 64..400),
            extra in 0usize..200,
            seed in any::<u64>(),
            snr in -20.0f64..20.0,
        ) {
            prop_assume!(mean_power(&clean) > 1e-6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise: Vec<f64> = (0..clean.len() + extra).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let clean = sig(clean);
            let mix = mix_at_snr(&clean, &sig(noise), snr, &mut rng).unwrap();
            prop_assert!((achieved_snr(&clean.samples, &mix.samples) - snr).abs() < 1e-9);
        }
    }
}
