use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{Result, SynthError, UtteranceRecord};
use crate::dsp::{mean_power, noise_gain_for_snr, read_wav, rms_normalize, stft_magnitude, AudioSignal, Spectrogram};
use crate::hearing::{apply_nalr, Audiogram, PatternBank};

/// RMS the clean utterance is normalized to before mixing.
pub const PRESENTATION_RMS: f64 = 0.05;

/// Unamplified components of a noisy record.
#[derive(Debug, Clone)]
pub struct Realized {
    pub clean: AudioSignal,
    /// Noise segment already scaled to the record's SNR.
    pub noise: AudioSignal,
    pub audiogram: Audiogram,
}

impl Realized {
    pub fn mixture(&self) -> AudioSignal {
        let samples = self.clean.samples.iter().zip(&self.noise.samples).map(|(c, n)| c + n).collect();
        AudioSignal::new(samples, self.clean.sample_rate_hz)
    }
}

/// Turns manifest records into network features. Relative paths resolve against
/// `base_dir`; noise files are cached since many records share them.
pub struct Realizer<'a> {
    bank: &'a PatternBank,
    base_dir: PathBuf,
    noise_cache: Mutex<HashMap<PathBuf, Arc<AudioSignal>>>,
}

impl<'a> Realizer<'a> {
    pub fn new(bank: &'a PatternBank, base_dir: impl Into<PathBuf>) -> Self {
        Self { bank, base_dir: base_dir.into(), noise_cache: Mutex::new(HashMap::new()) }
    }

    pub fn bank(&self) -> &PatternBank {
        self.bank
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn load(&self, path: &str) -> Result<AudioSignal> {
        read_wav(self.resolve(path)).map_err(|source| SynthError::Audio { path: path.to_string(), source })
    }

    fn load_noise(&self, path: &str) -> Result<Arc<AudioSignal>> {
        let key = self.resolve(path);
        if let Some(hit) = self.noise_cache.lock().expect("noise cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let signal = Arc::new(self.load(path)?);
        self.noise_cache.lock().expect("noise cache poisoned").insert(key, Arc::clone(&signal));
        Ok(signal)
    }

    pub fn audiogram(&self, id: &str) -> Result<Audiogram> {
        self.bank
            .get(id)
            .map(|e| e.audiogram.clone())
            .ok_or_else(|| SynthError::UnknownAudiogram(id.to_string()))
    }

    /// Normalized clean speech plus the noise segment scaled to `snr_db`.
    pub fn components(&self, record: &UtteranceRecord) -> Result<Realized> {
        let audiogram = self.audiogram(&record.audiogram_id)?;
        let clean = rms_normalize(&self.load(&record.clean_path)?, PRESENTATION_RMS)
            .map_err(|source| SynthError::Audio { path: record.clean_path.clone(), source })?;
        let noise = self.load_noise(&record.noise_path)?;
        if noise.sample_rate_hz != clean.sample_rate_hz {
            return Err(crate::dsp::DspError::RateMismatch(clean.sample_rate_hz, noise.sample_rate_hz).into());
        }
        if noise.is_empty() {
            return Err(SynthError::Audio { path: record.noise_path.clone(), source: crate::dsp::DspError::DegeneratePower });
        }
        let segment: Vec<f64> =
            (0..clean.len()).map(|i| noise.samples[(record.noise_offset + i) % noise.len()]).collect();
        let gain = noise_gain_for_snr(mean_power(&clean.samples), mean_power(&segment), record.snr_db)?;
        let noise = AudioSignal::new(segment.into_iter().map(|s| s * gain).collect(), clean.sample_rate_hz);
        Ok(Realized { clean, noise, audiogram })
    }

    /// Mix, amplify with NAL-R for the record's audiogram, and take the magnitude STFT.
    pub fn realize(&self, record: &UtteranceRecord) -> Result<(Spectrogram, Audiogram)> {
        let parts = self.components(record)?;
        let amplified = apply_nalr(&parts.mixture(), &parts.audiogram)?;
        Ok((stft_magnitude(&amplified)?, parts.audiogram))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{frame_count, write_wav, SAMPLE_RATE_HZ};
    use crate::hearing::builtin_pattern_bank;
    use crate::synth::Split;

    fn tone(len: usize, freq: f64) -> AudioSignal {
        let s = (0..len).map(|n| (2.0 * std::f64::consts::PI * freq * n as f64 / 16_000.0).sin()).collect();
        AudioSignal::new(s, SAMPLE_RATE_HZ)
    }

    fn record(snr_db: f64, audiogram_id: &str, offset: usize) -> UtteranceRecord {
        UtteranceRecord {
            id: "r".into(),
            split: Split::Train,
            clean_path: "clean.wav".into(),
            noise_name: "hum".into(),
            noise_path: "noise.wav".into(),
            noise_offset: offset,
            snr_db,
            audiogram_id: audiogram_id.into(),
            quality: None,
            intelligibility: None,
        }
    }

    fn fixture(clean_len: usize, noise_len: usize) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        write_wav(dir.path().join("clean.wav"), &tone(clean_len, 440.0).scaled(0.3)).unwrap();
        let noise: Vec<f64> = (0..noise_len).map(|n| ((n * 7919) % 97) as f64 / 97.0 - 0.5).collect();
        write_wav(dir.path().join("noise.wav"), &AudioSignal::new(noise, SAMPLE_RATE_HZ)).unwrap();
        dir
    }

    #[test]
    fn realize_follows_frame_law_and_is_repeatable() {
        let dir = fixture(8000, 20_000);
        let bank = builtin_pattern_bank();
        let r = Realizer::new(&bank, dir.path());
        let rec = record(0.0, "flat-1", 1234);
        let (a, g) = r.realize(&rec).unwrap();
        let (b, _) = r.realize(&rec).unwrap();
        assert_eq!(a.frames(), frame_count(8000).unwrap());
        assert_eq!(a, b);
        assert_eq!(g, bank.get("flat-1").unwrap().audiogram);
    }

    #[test]
    fn components_hit_requested_snr() {
        let dir = fixture(8000, 20_000);
        let bank = builtin_pattern_bank();
        let r = Realizer::new(&bank, dir.path());
        for snr in [-15.0, 0.0, 12.0] {
            let parts = r.components(&record(snr, "sloping-2", 77)).unwrap();
            let achieved = 10.0 * (mean_power(&parts.clean.samples) / mean_power(&parts.noise.samples)).log10();
            assert!((achieved - snr).abs() < 1e-9);
        }
    }

    #[test]
    fn short_noise_wraps_cyclically() {
        let dir = fixture(4000, 1500);
        let bank = builtin_pattern_bank();
        let r = Realizer::new(&bank, dir.path());
        assert!(r.realize(&record(5.0, "flat-1", 1000)).is_ok());
    }

    #[test]
    fn short_clean_and_missing_files_error() {
        let dir = fixture(400, 2000);
        let bank = builtin_pattern_bank();
        let r = Realizer::new(&bank, dir.path());
        assert!(r.realize(&record(0.0, "flat-1", 0)).is_err());
        let mut missing = record(0.0, "flat-1", 0);
        missing.clean_path = "nope.wav".into();
        assert!(matches!(r.realize(&missing), Err(SynthError::Audio { .. })));
        assert!(matches!(r.realize(&record(0.0, "bogus-9", 0)), Err(SynthError::UnknownAudiogram(_))));
    }
}
