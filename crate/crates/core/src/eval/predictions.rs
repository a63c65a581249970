use std::collections::HashSet;
use std::fmt::Write as _;

use super::{EvalError, Result};

pub const PREDICTIONS_HEADER: &str = "#hasa-predictions v1";

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub quality: Option<f64>,
    pub intelligibility: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub provenance: String,
    pub rows: Vec<PredictionRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

impl PredictionFile {
    pub fn new(provenance: impl Into<String>, rows: Vec<PredictionRow>) -> Result<Self> {
        let mut ids = HashSet::new();
        for r in &rows {
            if !ids.insert(r.id.as_str()) {
                return Err(EvalError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { provenance: provenance.into(), rows })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{PREDICTIONS_HEADER} {}\n", self.provenance);
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}", r.id, opt(r.quality), opt(r.intelligibility));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let fail = |line, msg: String| EvalError::Format { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let provenance = match lines.next() {
            Some((_, h)) if h.starts_with(PREDICTIONS_HEADER) => h[PREDICTIONS_HEADER.len()..].trim().to_string(),
            _ => return Err(fail(1, format!("expected header {PREDICTIONS_HEADER:?}"))),
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
            let val = |s: &str| -> Result<Option<f64>> {
                if s == "-" {
                    return Ok(None);
                }
                let v: f64 = s.parse().map_err(|e| fail(n, format!("{s:?}: {e}")))?;
                if v.is_finite() {
                    Ok(Some(v))
                } else {
                    Err(fail(n, format!("non-finite score {s}")))
                }
            };
            rows.push(PredictionRow { id: f[0].to_string(), quality: val(f[1])?, intelligibility: val(f[2])? });
        }
        Self::new(provenance, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_absent_task() {
        let f = PredictionFile::new(
            "model.hprm",
            vec![
                PredictionRow { id: "a".into(), quality: Some(0.25), intelligibility: None },
                PredictionRow { id: "b".into(), quality: Some(0.5), intelligibility: None },
            ],
        )
        .unwrap();
        let text = f.to_text();
        assert!(text.contains("a\t0.25\t-"));
        assert_eq!(PredictionFile::parse(&text).unwrap(), f);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PredictionFile::parse("nope\n").is_err());
        assert!(PredictionFile::parse(&format!("{PREDICTIONS_HEADER} x\na\t0.1\n")).is_err());
        assert!(PredictionFile::parse(&format!("{PREDICTIONS_HEADER} x\na\tNaN\t-\n")).is_err());
        let dup = format!("{PREDICTIONS_HEADER} x\na\t0.1\t-\na\t0.2\t-\n");
        assert!(matches!(PredictionFile::parse(&dup), Err(EvalError::DuplicateId(_))));
    }
}
