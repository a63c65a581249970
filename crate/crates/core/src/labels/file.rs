use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::{LabelError, Result};
use crate::synth::CorpusManifest;

pub const LABELS_HEADER: &str = "#hasa-labels v1";

#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub id: String,
    pub quality: f64,
    pub intelligibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelFile {
    pub provenance: String,
    pub rows: Vec<LabelRow>,
}

fn check_range(id: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(LabelError::OutOfRange { id: id.to_string(), value })
    }
}

impl LabelFile {
    /// Rejects duplicate ids and scores outside [0, 1].
    pub fn new(provenance: impl Into<String>, rows: Vec<LabelRow>) -> Result<Self> {
        let mut ids = HashSet::new();
        for r in &rows {
            check_range(&r.id, r.quality)?;
            check_range(&r.id, r.intelligibility)?;
            if !ids.insert(r.id.as_str()) {
                return Err(LabelError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { provenance: provenance.into(), rows })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{LABELS_HEADER} {}\n", self.provenance);
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}", r.id, r.quality, r.intelligibility);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let fail = |line, msg: String| LabelError::Format { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let provenance = match lines.next() {
            Some((_, h)) if h.starts_with(LABELS_HEADER) => h[LABELS_HEADER.len()..].trim().to_string(),
            _ => return Err(fail(1, format!("expected header {LABELS_HEADER:?}"))),
        };
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(fail(n, format!("{} fields, expected 3", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| fail(n, format!("{s:?}: {e}")));
            rows.push(LabelRow { id: f[0].to_string(), quality: num(f[1])?, intelligibility: num(f[2])? });
        }
        Self::new(provenance, rows)
    }
}

/// Copies labels onto every manifest record. The file must cover the manifest
/// exactly; gaps and stray ids are reported by name.
pub fn attach_labels(manifest: &CorpusManifest, labels: &LabelFile) -> Result<CorpusManifest> {
    let labels = LabelFile::new(labels.provenance.clone(), labels.rows.clone())?;
    let by_id: HashMap<&str, &LabelRow> = labels.rows.iter().map(|r| (r.id.as_str(), r)).collect();
    let missing: Vec<String> =
        manifest.records.iter().filter(|r| !by_id.contains_key(r.id.as_str())).map(|r| r.id.clone()).collect();
    if !missing.is_empty() {
        return Err(LabelError::Missing(missing));
    }
    let known: HashSet<&str> = manifest.records.iter().map(|r| r.id.as_str()).collect();
    let unknown: Vec<String> =
        labels.rows.iter().filter(|r| !known.contains(r.id.as_str())).map(|r| r.id.clone()).collect();
    if !unknown.is_empty() {
        return Err(LabelError::Unknown(unknown));
    }
    let mut out = manifest.clone();
    for r in &mut out.records {
        let row = by_id[r.id.as_str()];
        r.quality = Some(row.quality);
        r.intelligibility = Some(row.intelligibility);
    }
    out.label_provenance = Some(labels.provenance.clone());
    Ok(out)
}
