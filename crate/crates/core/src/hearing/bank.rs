use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use super::{Audiogram, Configuration, HearingError, Result};

/// Frozen text of the built-in 42-pattern bank.
pub const BUILTIN_BANK_TEXT: &str = include_str!("patterns.tsv");

const BANK_HEADER: &str = "#hasa-patterns v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternSplit {
    Seen,
    Unseen,
}

impl PatternSplit {
    pub fn tag(self) -> &'static str {
        match self {
            PatternSplit::Seen => "seen",
            PatternSplit::Unseen => "unseen",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternEntry {
    /// `<category>-<k>`, k counting from 1 within the category in file order.
    pub id: String,
    pub audiogram: Audiogram,
    pub split: PatternSplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternBank {
    entries: Vec<PatternEntry>,
}

impl PatternBank {
    /// Accepts any set of correctly-labeled audiograms with unique ids.
    pub fn new(entries: Vec<PatternEntry>) -> Result<Self> {
        let mut ids = HashSet::new();
        for e in &entries {
            if !ids.insert(e.id.as_str()) {
                return Err(HearingError::BankInvariant(format!("duplicate id {}", e.id)));
            }
            let actual = super::classify_configuration(&e.audiogram.thresholds_db_hl)?;
            if actual != e.audiogram.configuration {
                return Err(HearingError::LabelMismatch { labeled: e.audiogram.configuration, actual });
            }
        }
        Ok(Self { entries })
    }

    /// Parses the plain-text table: `category<TAB>split<TAB>six integers`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == BANK_HEADER => {}
            _ => {
                return Err(HearingError::BankFormat { line: 1, msg: format!("expected header {BANK_HEADER:?}") })
            }
        }
        let mut counters: BTreeMap<Configuration, usize> = BTreeMap::new();
        let mut entries = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| HearingError::BankFormat { line: i + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 8 {
                return Err(bad(format!("expected 8 fields, found {}", fields.len())));
            }
            let configuration: Configuration = fields[0].parse()?;
            let split = match fields[1] {
                "seen" => PatternSplit::Seen,
                "unseen" => PatternSplit::Unseen,
                other => return Err(bad(format!("unknown split tag {other:?}"))),
            };
            let mut t = [0.0; 6];
            for (slot, f) in t.iter_mut().zip(&fields[2..]) {
                *slot = f.parse::<u32>().map_err(|e| bad(format!("{f:?}: {e}")))? as f64;
            }
            let k = counters.entry(configuration).or_default();
            *k += 1;
            entries.push(PatternEntry {
                id: format!("{}-{}", configuration.slug(), k),
                audiogram: Audiogram::new(t, configuration)?,
                split,
            });
        }
        Self::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{BANK_HEADER}\n");
        for e in &self.entries {
            let _ = write!(out, "{}\t{}", e.audiogram.configuration.slug(), e.split.tag());
            for h in e.audiogram.thresholds_db_hl {
                let _ = write!(out, "\t{}", h.round() as i64);
            }
            out.push('\n');
        }
        out
    }

    /// Checks the 42-entry, 7-per-category, 5 seen + 2 unseen layout.
    pub fn validate_standard_layout(&self) -> Result<()> {
        if self.entries.len() != 42 {
            return Err(HearingError::BankInvariant(format!("{} patterns, expected 42", self.entries.len())));
        }
        for c in Configuration::ALL {
            let seen = self.ids(c, PatternSplit::Seen).len();
            let unseen = self.ids(c, PatternSplit::Unseen).len();
            if (seen, unseen) != (5, 2) {
                return Err(HearingError::BankInvariant(format!(
                    "{c}: {seen} seen + {unseen} unseen, expected 5 + 2"
                )));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[PatternEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PatternEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Categories present in the bank, in taxonomy order.
    pub fn configurations(&self) -> Vec<Configuration> {
        Configuration::ALL
            .into_iter()
            .filter(|c| self.entries.iter().any(|e| e.audiogram.configuration == *c))
            .collect()
    }

    /// Pattern ids of one category and split, in bank order.
    pub fn ids(&self, configuration: Configuration, split: PatternSplit) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.audiogram.configuration == configuration && e.split == split)
            .map(|e| e.id.as_str())
            .collect()
    }
}

pub fn builtin_pattern_bank() -> PatternBank {
    PatternBank::parse(BUILTIN_BANK_TEXT).expect("built-in pattern bank is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hearing::classify_configuration;

    #[test]
    fn builtin_layout() {
        let bank = builtin_pattern_bank();
        assert_eq!(bank.len(), 42);
        bank.validate_standard_layout().unwrap();
        for c in Configuration::ALL {
            assert_eq!(bank.ids(c, PatternSplit::Seen).len(), 5);
            assert_eq!(bank.ids(c, PatternSplit::Unseen).len(), 2);
        }
    }

    #[test]
    fn every_pattern_classifies_as_labeled() {
        for e in builtin_pattern_bank().entries() {
            assert_eq!(classify_configuration(&e.audiogram.thresholds_db_hl).unwrap(), e.audiogram.configuration);
            assert!(e.audiogram.is_hearing_loss(), "{} is not a hearing loss", e.id);
        }
    }

    #[test]
    fn severities_span_mild_to_severe() {
        let bank = builtin_pattern_bank();
        for c in Configuration::ALL {
            let peaks: Vec<f64> = bank
                .entries()
                .iter()
                .filter(|e| e.audiogram.configuration == c)
                .map(|e| e.audiogram.thresholds_db_hl.iter().cloned().fold(0.0, f64::max))
                .collect();
            assert!(peaks.iter().any(|&p| p <= 40.0 || c == Configuration::HighFrequency), "{c} has no mild pattern");
            assert!(peaks.iter().any(|&p| p >= 56.0), "{c} has no severe pattern");
        }
    }

    #[test]
    fn text_round_trip() {
        let bank = builtin_pattern_bank();
        assert_eq!(PatternBank::parse(&bank.to_text()).unwrap(), bank);
    }

    #[test]
    fn malformed_tables_rejected() {
        assert!(PatternBank::parse("flat\tseen\t1\t2\t3\t4\t5\t6\n").is_err());
        let wrong_label = "#hasa-patterns v1\nsloping\tseen\t40\t40\t40\t40\t40\t40\n";
        assert!(matches!(PatternBank::parse(wrong_label), Err(HearingError::LabelMismatch { .. })));
        let short = "#hasa-patterns v1\nflat\tseen\t40\t40\t40\n";
        assert!(matches!(PatternBank::parse(short), Err(HearingError::BankFormat { line: 2, .. })));
    }
}
