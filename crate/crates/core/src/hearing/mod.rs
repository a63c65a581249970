//! Audiograms, the six-way configuration taxonomy, the built-in pattern bank
//! and NAL-R linear amplification.

mod bank;
mod nalr;

pub use bank::{builtin_pattern_bank, PatternBank, PatternEntry, PatternSplit, BUILTIN_BANK_TEXT};
pub use nalr::{apply_gain_curve, apply_nalr, gain_curve_at, nalr_gains, NALR_CORRECTIONS_DB};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dsp::DspError;

/// Audiogram frequencies in Hz.
pub const AUDIOGRAM_FREQS_HZ: [f64; 6] = [250.0, 500.0, 1000.0, 2000.0, 4000.0, 6000.0];

/// A threshold above this level counts as hearing loss.
pub const HEARING_LOSS_DB_HL: f64 = 20.0;

#[derive(Debug, Error)]
pub enum HearingError {
    #[error("unclassifiable audiogram {0:?}")]
    Unclassifiable([f64; 6]),
    #[error("threshold {0} dB HL outside [0, 120]")]
    ThresholdRange(f64),
    #[error("audiogram labeled {labeled} but its shape is {actual}")]
    LabelMismatch { labeled: Configuration, actual: Configuration },
    #[error("unknown configuration {0:?}")]
    UnknownConfiguration(String),
    #[error("pattern bank line {line}: {msg}")]
    BankFormat { line: usize, msg: String },
    #[error("pattern bank invariant violated: {0}")]
    BankInvariant(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

pub type Result<T> = std::result::Result<T, HearingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Configuration {
    Flat,
    Sloping,
    Rising,
    CookieBite,
    NoiseNotched,
    HighFrequency,
}

impl Configuration {
    pub const ALL: [Configuration; 6] = [
        Configuration::Flat,
        Configuration::Sloping,
        Configuration::Rising,
        Configuration::CookieBite,
        Configuration::NoiseNotched,
        Configuration::HighFrequency,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Configuration::Flat => "flat",
            Configuration::Sloping => "sloping",
            Configuration::Rising => "rising",
            Configuration::CookieBite => "cookie-bite",
            Configuration::NoiseNotched => "noise-notched",
            Configuration::HighFrequency => "high-frequency",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Configuration::Flat => "Flat",
            Configuration::Sloping => "Sloping",
            Configuration::Rising => "Rising",
            Configuration::CookieBite => "Cookie-bite",
            Configuration::NoiseNotched => "Noise-notched",
            Configuration::HighFrequency => "High-frequency",
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Configuration {
    type Err = HearingError;

    fn from_str(s: &str) -> Result<Self> {
        Configuration::ALL
            .into_iter()
            .find(|c| c.slug() == s)
            .ok_or_else(|| HearingError::UnknownConfiguration(s.to_string()))
    }
}

/// Hearing thresholds in dB HL at [`AUDIOGRAM_FREQS_HZ`] plus the configuration label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audiogram {
    pub thresholds_db_hl: [f64; 6],
    pub configuration: Configuration,
}

impl Audiogram {
    /// Builds an audiogram, checking the threshold range and that the label matches the shape.
    pub fn new(thresholds_db_hl: [f64; 6], configuration: Configuration) -> Result<Self> {
        check_range(&thresholds_db_hl)?;
        let actual = classify_configuration(&thresholds_db_hl)?;
        if actual != configuration {
            return Err(HearingError::LabelMismatch { labeled: configuration, actual });
        }
        Ok(Self { thresholds_db_hl, configuration })
    }

    /// Builds an audiogram whose label is whatever the shape classifies as.
    pub fn classified(thresholds_db_hl: [f64; 6]) -> Result<Self> {
        check_range(&thresholds_db_hl)?;
        let configuration = classify_configuration(&thresholds_db_hl)?;
        Ok(Self { thresholds_db_hl, configuration })
    }

    /// Unchecked construction, for thresholds that need not fit any category
    /// (normal hearing, test fixtures).
    pub fn unclassified(thresholds_db_hl: [f64; 6], configuration: Configuration) -> Self {
        Self { thresholds_db_hl, configuration }
    }

    pub fn is_hearing_loss(&self) -> bool {
        self.thresholds_db_hl.iter().any(|&h| h > HEARING_LOSS_DB_HL)
    }

    /// Threshold at an arbitrary frequency, interpolated linearly in log-frequency.
    pub fn threshold_at(&self, freq_hz: f64) -> f64 {
        interp_log_freq(&self.thresholds_db_hl, freq_hz)
    }
}

fn check_range(t: &[f64; 6]) -> Result<()> {
    match t.iter().find(|h| !(0.0..=120.0).contains(*h)) {
        Some(&h) => Err(HearingError::ThresholdRange(h)),
        None => Ok(()),
    }
}

/// Linear interpolation in log2-frequency between the six anchors, held flat
/// below the first and above the last.
pub fn interp_log_freq(values: &[f64; 6], freq_hz: f64) -> f64 {
    let f = AUDIOGRAM_FREQS_HZ;
    if freq_hz <= f[0] {
        return values[0];
    }
    if freq_hz >= f[5] {
        return values[5];
    }
    let k = (1..6).find(|&k| freq_hz <= f[k]).unwrap_or(5);
    let (lo, hi) = (f[k - 1].log2(), f[k].log2());
    let w = (freq_hz.log2() - lo) / (hi - lo);
    values[k - 1] + w * (values[k] - values[k - 1])
}

/// First matching shape predicate, in taxonomy order.
pub fn classify_configuration(t: &[f64; 6]) -> Result<Configuration> {
    let max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let non_decreasing = t.windows(2).all(|w| w[1] >= w[0]);
    let non_increasing = t.windows(2).all(|w| w[1] <= w[0]);

    if max - min <= 10.0 {
        return Ok(Configuration::Flat);
    }
    if non_decreasing && t[5] - t[0] >= 15.0 {
        return Ok(Configuration::Sloping);
    }
    if non_increasing && t[0] - t[5] >= 15.0 {
        return Ok(Configuration::Rising);
    }
    // peak strictly inside (500, 4000) Hz: the 1000 and 2000 Hz anchors
    let inner_peak = t[2].max(t[3]);
    if inner_peak == max && t[0] <= max - 15.0 && t[5] <= max - 15.0 {
        return Ok(Configuration::CookieBite);
    }
    if t[4] > t[3] && t[4] - t[5] >= 10.0 {
        return Ok(Configuration::NoiseNotched);
    }
    if t[..3].iter().all(|&h| h <= 20.0) && t[4..].iter().all(|&h| h >= 40.0) {
        return Ok(Configuration::HighFrequency);
    }
    Err(HearingError::Unclassifiable(*t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        let c = |t| classify_configuration(&t).unwrap();
        assert_eq!(c([40.0; 6]), Configuration::Flat);
        assert_eq!(c([10.0, 15.0, 25.0, 45.0, 65.0, 70.0]), Configuration::Sloping);
        assert_eq!(c([10.0, 10.0, 15.0, 45.0, 70.0, 40.0]), Configuration::NoiseNotched);
        assert_eq!(c([60.0, 50.0, 40.0, 30.0, 20.0, 20.0]), Configuration::Rising);
        assert_eq!(c([20.0, 35.0, 50.0, 45.0, 30.0, 20.0]), Configuration::CookieBite);
        assert_eq!(c([15.0, 10.0, 10.0, 40.0, 55.0, 60.0]), Configuration::HighFrequency);
    }

    #[test]
    fn unclassifiable_shape() {
        // zig-zag with peak at 250 Hz
        let err = classify_configuration(&[60.0, 20.0, 40.0, 20.0, 40.0, 35.0]).unwrap_err();
        assert!(err.to_string().starts_with("unclassifiable audiogram"));
    }

    #[test]
    fn label_must_match_shape() {
        assert!(matches!(
            Audiogram::new([40.0; 6], Configuration::Sloping),
            Err(HearingError::LabelMismatch { .. })
        ));
        assert!(matches!(
            Audiogram::new([130.0; 6], Configuration::Flat),
            Err(HearingError::ThresholdRange(_))
        ));
    }

    #[test]
    fn hearing_loss_threshold() {
        assert!(!Audiogram::unclassified([20.0; 6], Configuration::Flat).is_hearing_loss());
        assert!(Audiogram::unclassified([20.0, 20.0, 20.0, 20.0, 20.0, 21.0], Configuration::Flat).is_hearing_loss());
    }

    #[test]
    fn interpolation_is_log_linear_and_held() {
        let v = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0];
        assert_eq!(interp_log_freq(&v, 100.0), 0.0);
        assert_eq!(interp_log_freq(&v, 8000.0), 50.0);
        assert!((interp_log_freq(&v, 500.0 * 2f64.sqrt()) - 15.0).abs() < 1e-12);
        assert_eq!(interp_log_freq(&v, 2000.0), 30.0);
    }
}
