use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::{Result, SynthError};

pub const MANIFEST_HEADER: &str = "#hasa-manifest v1";
pub const MANIFEST_COLUMNS: [&str; 10] = [
    "id",
    "split",
    "clean_path",
    "noise_name",
    "noise_path",
    "noise_offset",
    "snr_db",
    "audiogram_id",
    "quality",
    "intelligibility",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    TestSeen,
    TestUnseen,
}

impl Split {
    pub fn tag(self) -> &'static str {
        match self {
            Split::Train => "TRAIN",
            Split::Val => "VAL",
            Split::TestSeen => "TEST_SEEN",
            Split::TestUnseen => "TEST_UNSEEN",
        }
    }

    pub fn is_test(self) -> bool {
        matches!(self, Split::TestSeen | Split::TestUnseen)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Split::Train, Split::Val, Split::TestSeen, Split::TestUnseen]
            .into_iter()
            .find(|sp| sp.tag() == s)
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub id: String,
    pub split: Split,
    pub clean_path: String,
    pub noise_name: String,
    pub noise_path: String,
    /// Start sample of the noise segment; wraps cyclically if the noise is short.
    pub noise_offset: usize,
    pub snr_db: f64,
    pub audiogram_id: String,
    pub quality: Option<f64>,
    pub intelligibility: Option<f64>,
}

impl UtteranceRecord {
    pub fn is_labeled(&self) -> bool {
        self.quality.is_some() && self.intelligibility.is_some()
    }

    /// Key identifying the noisy utterance independently of the audiogram.
    pub fn noisy_key(&self) -> (String, String, usize, u64) {
        (self.clean_path.clone(), self.noise_name.clone(), self.noise_offset, self.snr_db.to_bits())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub records: Vec<UtteranceRecord>,
    pub seed: u64,
    pub version: String,
    /// Hex digest of the construction parameters.
    pub digest: String,
    /// Set once labels are attached.
    pub label_provenance: Option<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl CorpusManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &UtteranceRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    pub fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                return Err(SynthError::DuplicateId(r.id.clone()));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MANIFEST_HEADER}");
        let _ = writeln!(out, "#seed\t{}", self.seed);
        let _ = writeln!(out, "#version\t{}", self.version);
        let _ = writeln!(out, "#digest\t{}", self.digest);
        if let Some(p) = &self.label_provenance {
            let _ = writeln!(out, "#labels\t{p}");
        }
        let _ = writeln!(out, "#columns\t{}", MANIFEST_COLUMNS.join("\t"));
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.id,
                r.split,
                r.clean_path,
                r.noise_name,
                r.noise_path,
                r.noise_offset,
                r.snr_db,
                r.audiogram_id,
                opt(r.quality),
                opt(r.intelligibility)
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let fail = |line: usize, msg: String| SynthError::Format { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, h)) if h == MANIFEST_HEADER => {}
            _ => return Err(fail(1, format!("expected {MANIFEST_HEADER:?}"))),
        }
        let (mut seed, mut version, mut digest, mut labels) = (None, None, None, None);
        let mut records = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (key, value) = meta.split_once('\t').ok_or_else(|| fail(n, "malformed header".into()))?;
                match key {
                    "seed" => seed = Some(value.parse::<u64>().map_err(|e| fail(n, e.to_string()))?),
                    "version" => version = Some(value.to_string()),
                    "digest" => digest = Some(value.to_string()),
                    "labels" => labels = Some(value.to_string()),
                    "columns" => {
                        if value.split('\t').collect::<Vec<_>>() != MANIFEST_COLUMNS {
                            return Err(fail(n, "unexpected column layout".into()));
                        }
                    }
                    other => return Err(fail(n, format!("unknown header key {other:?}"))),
                }
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != MANIFEST_COLUMNS.len() {
                return Err(fail(n, format!("{} fields, expected {}", f.len(), MANIFEST_COLUMNS.len())));
            }
            let label = |s: &str| -> Result<Option<f64>> {
                if s == "-" {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|e| fail(n, format!("{s:?}: {e}")))
                }
            };
            records.push(UtteranceRecord {
                id: f[0].to_string(),
                split: f[1].parse().map_err(|e| fail(n, e))?,
                clean_path: f[2].to_string(),
                noise_name: f[3].to_string(),
                noise_path: f[4].to_string(),
                noise_offset: f[5].parse().map_err(|e| fail(n, format!("noise_offset: {e}")))?,
                snr_db: f[6].parse().map_err(|e| fail(n, format!("snr_db: {e}")))?,
                audiogram_id: f[7].to_string(),
                quality: label(f[8])?,
                intelligibility: label(f[9])?,
            });
        }
        let manifest = Self {
            records,
            seed: seed.ok_or_else(|| fail(0, "missing #seed".into()))?,
            version: version.ok_or_else(|| fail(0, "missing #version".into()))?,
            digest: digest.ok_or_else(|| fail(0, "missing #digest".into()))?,
            label_provenance: labels,
        };
        manifest.check_unique_ids()?;
        Ok(manifest)
    }
}
