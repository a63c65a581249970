use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{LabelError, LabelFile, LabelRow, Result};
use crate::dsp::{AudioSignal, DspError};
use crate::hearing::{gain_curve_at, nalr_gains, Audiogram};
use crate::synth::{CorpusManifest, Realizer, UtteranceRecord};

/// Every report built from surrogate labels carries this marker.
pub const SURROGATE_WATERMARK: &str = "SURROGATE LABELS";

/// Provenance prefix written into label files produced by [`surrogate_file`].
pub const SURROGATE_PROVENANCE: &str = "SURROGATE LABELS band-snr-oracle";

pub const NUM_BANDS: usize = 18;

/// Center of third-octave band `b`: 1000·2^((b − 9)/3), spanning 125 Hz to 6.35 kHz.
pub fn band_center(b: usize) -> f64 {
    1000.0 * 2f64.powf((b as f64 - 9.0) / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateParams {
    pub quality_slope: f64,
    pub quality_midpoint_db: f64,
    pub intelligibility_slope: f64,
    pub intelligibility_midpoint_db: f64,
    /// Band SNRs are clamped to ±this many dB before weighting.
    pub band_snr_limit_db: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        Self {
            quality_slope: 0.25,
            quality_midpoint_db: 8.0,
            intelligibility_slope: 0.45,
            intelligibility_midpoint_db: -2.0,
            band_snr_limit_db: 40.0,
        }
    }
}

impl SurrogateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.quality_slope > 0.0 && self.intelligibility_slope > 0.0) {
            return Err(LabelError::Params("slopes must be positive".into()));
        }
        if !(self.band_snr_limit_db > 0.0) {
            return Err(LabelError::Params("band SNR limit must be positive".into()));
        }
        if !(self.quality_midpoint_db.is_finite() && self.intelligibility_midpoint_db.is_finite()) {
            return Err(LabelError::Params("midpoints must be finite".into()));
        }
        Ok(())
    }

    fn provenance(&self) -> String {
        format!(
            "{SURROGATE_PROVENANCE} q=sigmoid({}*(S{:+})) i=sigmoid({}*(S{:+})) clamp={}",
            self.quality_slope,
            -self.quality_midpoint_db,
            self.intelligibility_slope,
            -self.intelligibility_midpoint_db,
            self.band_snr_limit_db
        )
    }
}

fn band_energies(signal: &AudioSignal) -> Vec<f64> {
    let n = signal.len();
    let mut buf: Vec<Complex<f64>> = signal.samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = signal.sample_rate_hz as f64 / n as f64;
    let edge = 2f64.powf(1.0 / 6.0);
    (0..NUM_BANDS)
        .map(|b| {
            let (lo, hi) = (band_center(b) / edge, band_center(b) * edge);
            buf[..=n / 2]
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    let f = *k as f64 * df;
                    f >= lo && f < hi
                })
                .map(|(_, c)| c.norm_sqr())
                .sum()
        })
        .collect()
}

/// Per-band SNR in dB between clean speech and the (already scaled) noise;
/// `None` for bands holding no energy in either signal.
pub fn band_snrs_db(clean: &AudioSignal, noise: &AudioSignal, limit_db: f64) -> Result<Vec<Option<f64>>> {
    if clean.len() != noise.len() || clean.is_empty() {
        return Err(DspError::InvalidArgument(format!(
            "clean and noise lengths {} and {} must match and be non-zero",
            clean.len(),
            noise.len()
        ))
        .into());
    }
    let (ec, en) = (band_energies(clean), band_energies(noise));
    Ok(ec
        .iter()
        .zip(&en)
        .map(|(&c, &n)| match (c > 0.0, n > 0.0) {
            (false, false) => None,
            (true, false) => Some(limit_db),
            (false, true) => Some(-limit_db),
            (true, true) => Some((10.0 * (c / n).log10()).clamp(-limit_db, limit_db)),
        })
        .collect())
}

/// Audibility-weighted mean band SNR. The weight of a band is
/// clamp(1 − residual/100, 0, 1), residual being the threshold left after NAL-R gain.
pub fn effective_snr_db(clean: &AudioSignal, noise: &AudioSignal, audiogram: &Audiogram, limit_db: f64) -> Result<f64> {
    let gains = nalr_gains(audiogram);
    let snrs = band_snrs_db(clean, noise, limit_db)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (b, snr) in snrs.iter().enumerate() {
        let Some(snr) = snr else { continue };
        let f = band_center(b);
        let residual = (audiogram.threshold_at(f) - gain_curve_at(&gains, f)).max(0.0);
        let w = (1.0 - residual / 100.0).clamp(0.0, 1.0);
        num += w * snr;
        den += w;
    }
    if den > 0.0 {
        Ok(num / den)
    } else if snrs.iter().all(Option::is_none) {
        Err(DspError::DegeneratePower.into())
    } else {
        Ok(-limit_db)
    }
}

/// (quality, intelligibility) from an effective SNR.
pub fn surrogate_scores(s_db: f64, p: &SurrogateParams) -> (f64, f64) {
    (
        crate::sigmoid(p.quality_slope * (s_db - p.quality_midpoint_db)),
        crate::sigmoid(p.intelligibility_slope * (s_db - p.intelligibility_midpoint_db)),
    )
}

pub fn surrogate_labels(realizer: &Realizer<'_>, record: &UtteranceRecord, params: &SurrogateParams) -> Result<(f64, f64)> {
    let parts = realizer.components(record)?;
    let s = effective_snr_db(&parts.clean, &parts.noise, &parts.audiogram, params.band_snr_limit_db)?;
    Ok(surrogate_scores(s, params))
}

/// Surrogate labels for every record, computed in parallel and kept in manifest order.
pub fn surrogate_file(realizer: &Realizer<'_>, manifest: &CorpusManifest, params: &SurrogateParams) -> Result<LabelFile> {
    params.validate()?;
    let rows = manifest
        .records
        .par_iter()
        .map(|r| {
            surrogate_labels(realizer, r, params)
                .map(|(quality, intelligibility)| LabelRow { id: r.id.clone(), quality, intelligibility })
        })
        .collect::<Result<Vec<_>>>()?;
    LabelFile::new(params.provenance(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hearing::{builtin_pattern_bank, Configuration};

    fn noise(len: usize, seed: u64) -> AudioSignal {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        AudioSignal::new((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(), 16_000)
    }

    fn speechlike(len: usize) -> AudioSignal {
        let s = (0..len)
            .map(|n| {
                let t = n as f64 / 16_000.0;
                let env = 0.6 + 0.4 * (2.0 * std::f64::consts::PI * 4.0 * t).sin();
                env * (1..56)
                    .map(|h| (2.0 * std::f64::consts::PI * 125.0 * h as f64 * t).sin() / (h as f64).sqrt())
                    .sum::<f64>()
            })
            .collect();
        AudioSignal::new(s, 16_000)
    }

    #[test]
    fn centers_span_125_to_6350() {
        assert!((band_center(0) - 125.0).abs() < 1e-9);
        assert!((band_center(9) - 1000.0).abs() < 1e-12);
        assert!((band_center(17) - 6349.6).abs() < 0.1);
    }

    #[test]
    fn quality_midpoint_is_half() {
        let (q, _) = surrogate_scores(8.0, &SurrogateParams::default());
        assert_eq!(q, 0.5);
        let (_, i) = surrogate_scores(-2.0, &SurrogateParams::default());
        assert_eq!(i, 0.5);
    }

    #[test]
    fn scores_monotone_and_ordered_in_s() {
        let p = SurrogateParams::default();
        let mut prev = (0.0, 0.0);
        for k in 0..=800 {
            let s = -40.0 + k as f64 * 0.1;
            let (q, i) = surrogate_scores(s, &p);
            assert!(q > 0.0 && q < 1.0 && i > 0.0 && i < 1.0);
            assert!(q >= prev.0 && i >= prev.1);
            if s >= -8.33 {
                assert!(i >= q, "S={s}: i={i} q={q}");
            }
            prev = (q, i);
        }
    }

    #[test]
    fn flat_sweep_gives_monotone_labels() {
        let clean = speechlike(16_000);
        let base = noise(16_000, 1);
        let pc = crate::dsp::mean_power(&clean.samples);
        let pn = crate::dsp::mean_power(&base.samples);
        let bank = builtin_pattern_bank();
        let g = &bank.get("sloping-3").unwrap().audiogram;
        let p = SurrogateParams::default();
        let mut prev = (0.0, 0.0);
        for snr in [-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 30.0] {
            let gain = crate::dsp::noise_gain_for_snr(pc, pn, snr).unwrap();
            let s = effective_snr_db(&clean, &base.scaled(gain), g, p.band_snr_limit_db).unwrap();
            let (q, i) = surrogate_scores(s, &p);
            assert!(q >= prev.0 && i >= prev.1);
            prev = (q, i);
        }
    }

    #[test]
    fn high_snr_mild_loss_saturates() {
        let clean = speechlike(16_000);
        let n = noise(16_000, 2).scaled(1e-4);
        let mild = Audiogram::new([20.0, 20.0, 25.0, 25.0, 30.0, 30.0], Configuration::Flat).unwrap();
        let p = SurrogateParams::default();
        let s = effective_snr_db(&clean, &n, &mild, p.band_snr_limit_db).unwrap();
        let (q, i) = surrogate_scores(s, &p);
        assert!(q > 0.95 && i > 0.95, "S={s} q={q} i={i}");
    }

    #[test]
    fn silent_inputs_are_degenerate() {
        let z = AudioSignal::new(vec![0.0; 1024], 16_000);
        let g = Audiogram::new([30.0; 6], Configuration::Flat).unwrap();
        assert!(matches!(effective_snr_db(&z, &z, &g, 40.0), Err(LabelError::Dsp(DspError::DegeneratePower))));
    }

    #[test]
    fn band_snr_of_scaled_copy_is_exact() {
        let n = noise(4096, 3);
        let snrs = band_snrs_db(&n.scaled(10.0), &n, 40.0).unwrap();
        for s in snrs.into_iter().flatten() {
            assert!((s - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn params_validation() {
        let mut p = SurrogateParams::default();
        assert!(p.validate().is_ok());
        p.quality_slope = 0.0;
        assert!(p.validate().is_err());
    }
}
