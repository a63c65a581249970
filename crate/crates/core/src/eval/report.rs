use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{lcc, mse, srcc, EvalError, PredictionFile, Result};
use crate::hearing::{Configuration, PatternBank};
use crate::labels::SURROGATE_WATERMARK;
use crate::nn::Task;
use crate::synth::{CorpusManifest, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Seen,
    Unseen,
}

impl EvalSplit {
    pub const BOTH: [EvalSplit; 2] = [EvalSplit::Seen, EvalSplit::Unseen];

    fn of(split: Split) -> Option<Self> {
        match split {
            Split::TestSeen => Some(EvalSplit::Seen),
            Split::TestUnseen => Some(EvalSplit::Unseen),
            _ => None,
        }
    }

    fn title(self) -> &'static str {
        match self {
            EvalSplit::Seen => "Seen",
            EvalSplit::Unseen => "Unseen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub n: usize,
    pub mse: f64,
    /// Absent when either side is constant within the group.
    pub lcc: Option<f64>,
    pub srcc: Option<f64>,
}

impl Metrics {
    fn compute(truth: &[f64], pred: &[f64]) -> Result<Self> {
        let corr = |r: Result<f64>| match r {
            Ok(v) => Ok(Some(v)),
            Err(EvalError::UndefinedCorrelation | EvalError::Empty) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(Self { n: truth.len(), mse: mse(truth, pred)?, lcc: corr(lcc(truth, pred))?, srcc: corr(srcc(truth, pred))? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub task: Task,
    pub split: EvalSplit,
    /// Configuration slug, or `all` for the pooled group.
    pub configuration: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Unweighted mean of the per-configuration metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigAverage {
    pub task: Task,
    pub split: EvalSplit,
    pub configurations: usize,
    pub mse: f64,
    pub lcc: Option<f64>,
    pub srcc: Option<f64>,
}

/// Decile histogram of true scores; bin k covers [k/10, (k+1)/10), the last bin includes 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub task: Task,
    pub counts: [usize; 10],
    pub fractions: [f64; 10],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub id: String,
    pub truth: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub watermark: Option<String>,
    pub label_provenance: Option<String>,
    pub prediction_provenance: String,
    pub tasks: Vec<Task>,
    pub groups: Vec<GroupMetrics>,
    pub config_averages: Vec<ConfigAverage>,
    pub histograms: Vec<Histogram>,
    #[serde(skip)]
    pub scatter: Vec<(Task, Vec<ScatterPoint>)>,
}

struct Row<'a> {
    id: &'a str,
    split: EvalSplit,
    configuration: Configuration,
    truth: [f64; 2],
    pred: [Option<f64>; 2],
}

fn task_index(task: Task) -> usize {
    match task {
        Task::Quality => 0,
        Task::Intelligibility => 1,
    }
}

fn decile(v: f64) -> usize {
    ((v * 10.0).floor().max(0.0) as usize).min(9)
}

/// Scores the test records of `manifest` against `predictions`. Tasks are those
/// the predictions carry; every test record must be predicted and labeled.
pub fn build_report(predictions: &PredictionFile, manifest: &CorpusManifest, bank: &PatternBank) -> Result<EvalReport> {
    let by_id: HashMap<&str, _> = predictions.rows.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut missing = Vec::new();
    let mut rows = Vec::new();
    for r in &manifest.records {
        let Some(split) = EvalSplit::of(r.split) else { continue };
        let Some(p) = by_id.get(r.id.as_str()) else {
            missing.push(r.id.clone());
            continue;
        };
        let (Some(q), Some(i)) = (r.quality, r.intelligibility) else {
            return Err(EvalError::Unlabeled(r.id.clone()));
        };
        let configuration = bank
            .get(&r.audiogram_id)
            .ok_or_else(|| EvalError::Invalid(format!("unknown audiogram {}", r.audiogram_id)))?
            .audiogram
            .configuration;
        rows.push(Row { id: &r.id, split, configuration, truth: [q, i], pred: [p.quality, p.intelligibility] });
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(EvalError::Missing(missing));
    }
    if rows.is_empty() {
        return Err(EvalError::Invalid("manifest has no TEST_SEEN/TEST_UNSEEN records".into()));
    }
    rows.sort_by(|a, b| a.id.cmp(b.id));

    let mut tasks = Vec::new();
    for task in Task::BOTH {
        let k = task_index(task);
        let present = rows.iter().filter(|r| r.pred[k].is_some()).count();
        if present == rows.len() {
            tasks.push(task);
        } else if present > 0 {
            let gap = rows.iter().find(|r| r.pred[k].is_none()).map(|r| r.id).unwrap_or_default();
            return Err(EvalError::Invalid(format!("{task} predictions present for some records but not {gap}")));
        }
    }
    if tasks.is_empty() {
        return Err(EvalError::Invalid("predictions carry no task scores".into()));
    }

    let mut groups = Vec::new();
    let mut config_averages = Vec::new();
    let mut histograms = Vec::new();
    let mut scatter = Vec::new();
    for &task in &tasks {
        let k = task_index(task);
        for split in EvalSplit::BOTH {
            let in_split: Vec<&Row> = rows.iter().filter(|r| r.split == split).collect();
            if in_split.is_empty() {
                continue;
            }
            let mut per_config = Vec::new();
            for c in Configuration::ALL {
                let sel: Vec<&&Row> = in_split.iter().filter(|r| r.configuration == c).collect();
                if sel.is_empty() {
                    continue;
                }
                let t: Vec<f64> = sel.iter().map(|r| r.truth[k]).collect();
                let p: Vec<f64> = sel.iter().map(|r| r.pred[k].expect("checked")).collect();
                let m = Metrics::compute(&t, &p)?;
                per_config.push(m.clone());
                groups.push(GroupMetrics { task, split, configuration: c.slug().to_string(), metrics: m });
            }
            let t: Vec<f64> = in_split.iter().map(|r| r.truth[k]).collect();
            let p: Vec<f64> = in_split.iter().map(|r| r.pred[k].expect("checked")).collect();
            groups.push(GroupMetrics { task, split, configuration: "all".into(), metrics: Metrics::compute(&t, &p)? });

            let mean_of = |f: &dyn Fn(&Metrics) -> Option<f64>| -> Option<f64> {
                let v: Option<Vec<f64>> = per_config.iter().map(f).collect();
                v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
            };
            config_averages.push(ConfigAverage {
                task,
                split,
                configurations: per_config.len(),
                mse: per_config.iter().map(|m| m.mse).sum::<f64>() / per_config.len() as f64,
                lcc: mean_of(&|m| m.lcc),
                srcc: mean_of(&|m| m.srcc),
            });
        }
        let mut counts = [0usize; 10];
        for r in &rows {
            counts[decile(r.truth[k])] += 1;
        }
        let fractions = counts.map(|c| c as f64 / rows.len() as f64);
        histograms.push(Histogram { task, counts, fractions });
        scatter.push((
            task,
            rows.iter()
                .map(|r| ScatterPoint { id: r.id.to_string(), truth: r.truth[k], predicted: r.pred[k].expect("checked") })
                .collect(),
        ));
    }

    let watermark = manifest
        .label_provenance
        .as_deref()
        .filter(|p| p.starts_with(SURROGATE_WATERMARK))
        .map(|_| SURROGATE_WATERMARK.to_string());
    Ok(EvalReport {
        watermark,
        label_provenance: manifest.label_provenance.clone(),
        prediction_provenance: predictions.provenance.clone(),
        tasks,
        groups,
        config_averages,
        histograms,
        scatter,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn triple(m: Option<(f64, Option<f64>, Option<f64>)>) -> String {
    match m {
        Some((mse, l, s)) => format!("{:>8} {:>8} {:>8}", format!("{mse:.4}"), cell(l), cell(s)),
        None => format!("{:>8} {:>8} {:>8}", "-", "-", "-"),
    }
}

fn table_header(out: &mut String, label: &str) {
    let _ = writeln!(out, "{:<18} {:^26}   {:^26}", "", EvalSplit::Seen.title(), EvalSplit::Unseen.title());
    let _ = writeln!(out, "{label:<18} {:>8} {:>8} {:>8}   {:>8} {:>8} {:>8}", "MSE", "LCC", "SRCC", "MSE", "LCC", "SRCC");
}

impl EvalReport {
    pub fn group(&self, task: Task, split: EvalSplit, configuration: Option<Configuration>) -> Option<&Metrics> {
        let slug = configuration.map_or("all", Configuration::slug);
        self.groups
            .iter()
            .find(|g| g.task == task && g.split == split && g.configuration == slug)
            .map(|g| &g.metrics)
    }

    pub fn config_average(&self, task: Task, split: EvalSplit) -> Option<&ConfigAverage> {
        self.config_averages.iter().find(|a| a.task == task && a.split == split)
    }

    pub fn scatter(&self, task: Task) -> Option<&[ScatterPoint]> {
        self.scatter.iter().find(|(t, _)| *t == task).map(|(_, v)| v.as_slice())
    }

    /// Aligned text tables: one per task, configurations as rows and
    /// Seen/Unseen × {MSE, LCC, SRCC} as columns, followed by score distributions.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(w) = &self.watermark {
            let _ = writeln!(out, "*** {w} ***");
        }
        let _ = writeln!(out, "labels: {}", self.label_provenance.as_deref().unwrap_or("-"));
        let _ = writeln!(out, "predictions: {}", self.prediction_provenance);
        for &task in &self.tasks {
            let _ = writeln!(out, "\n{} prediction", if task == Task::Quality { "Quality" } else { "Intelligibility" });
            table_header(&mut out, "Configuration");
            let m = |split, c| self.group(task, split, c).map(|m| (m.mse, m.lcc, m.srcc));
            for c in Configuration::ALL {
                let (s, u) = (m(EvalSplit::Seen, Some(c)), m(EvalSplit::Unseen, Some(c)));
                if s.is_some() || u.is_some() {
                    let _ = writeln!(out, "{:<18} {}   {}", c.title(), triple(s), triple(u));
                }
            }
            let _ = writeln!(
                out,
                "{:<18} {}   {}",
                "All (pooled)",
                triple(m(EvalSplit::Seen, None)),
                triple(m(EvalSplit::Unseen, None))
            );
            let avg = |split| self.config_average(task, split).map(|a| (a.mse, a.lcc, a.srcc));
            let _ = writeln!(
                out,
                "{:<18} {}   {}",
                "Mean of configs",
                triple(avg(EvalSplit::Seen)),
                triple(avg(EvalSplit::Unseen))
            );
            let n = |split| self.group(task, split, None).map_or(0, |m| m.n);
            let _ = writeln!(out, "n: seen {}, unseen {}", n(EvalSplit::Seen), n(EvalSplit::Unseen));
        }
        for h in &self.histograms {
            let _ = writeln!(out, "\nDistribution of true {} scores", h.task);
            for (k, (&c, &f)) in h.counts.iter().zip(&h.fractions).enumerate() {
                let hi = if k == 9 { "]" } else { ")" };
                let _ = writeln!(out, "[{:.1}, {:.1}{hi} {:>6.1}% {:>8}", k as f64 / 10.0, (k + 1) as f64 / 10.0, f * 100.0, c);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Two-column `truth<TAB>predicted` data in record-id order.
    pub fn scatter_tsv(&self, task: Task) -> Option<String> {
        self.scatter(task).map(|points| {
            let mut out = String::from("truth\tpredicted\n");
            for p in points {
                let _ = writeln!(out, "{}\t{}", p.truth, p.predicted);
            }
            out
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub task: Task,
    pub model: String,
    pub seen: Option<Metrics>,
    pub unseen: Option<Metrics>,
}

/// Single-task versus multi-task comparison on the pooled test splits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub watermark: Option<String>,
    pub single_task_parameters: Vec<(Task, usize)>,
    pub multi_task_parameters: usize,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn new(
        multi: &EvalReport,
        multi_parameters: usize,
        singles: &[(Task, &EvalReport, usize)],
    ) -> Result<Self> {
        let mut rows = Vec::new();
        for &(task, single, _) in singles {
            if !single.tasks.contains(&task) || !multi.tasks.contains(&task) {
                return Err(EvalError::Invalid(format!("{task} missing from an ablation report")));
            }
            for (model, rep) in [("single-task", single), ("multi-task", multi)] {
                rows.push(AblationRow {
                    task,
                    model: model.into(),
                    seen: rep.group(task, EvalSplit::Seen, None).cloned(),
                    unseen: rep.group(task, EvalSplit::Unseen, None).cloned(),
                });
            }
        }
        Ok(Self {
            watermark: multi.watermark.clone(),
            single_task_parameters: singles.iter().map(|&(t, _, p)| (t, p)).collect(),
            multi_task_parameters: multi_parameters,
            rows,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(w) = &self.watermark {
            let _ = writeln!(out, "*** {w} ***");
        }
        let _ = writeln!(out, "multi-task parameters: {}", self.multi_task_parameters);
        for (t, p) in &self.single_task_parameters {
            let _ = writeln!(out, "single-task ({t}) parameters: {p}");
        }
        let triple_of = |m: &Option<Metrics>| triple(m.as_ref().map(|m| (m.mse, m.lcc, m.srcc)));
        for task in Task::BOTH {
            let rows: Vec<&AblationRow> = self.rows.iter().filter(|r| r.task == task).collect();
            if rows.is_empty() {
                continue;
            }
            let _ = writeln!(out, "\n{task}: single-task vs multi-task");
            table_header(&mut out, "");
            for r in &rows {
                let _ = writeln!(out, "{:<18} {}   {}", r.model, triple_of(&r.seen), triple_of(&r.unseen));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::PredictionRow;
    use crate::hearing::builtin_pattern_bank;
    use crate::synth::{build_test_manifest, CleanSource, NoiseSource};

    fn labeled_manifest() -> CorpusManifest {
        let clean: Vec<_> = (0..3).map(|i| CleanSource { path: format!("c{i}"), num_samples: 0 }).collect();
        let noise: Vec<_> = (0..2).map(|i| NoiseSource { name: format!("n{i}"), path: format!("n{i}"), num_samples: 0 }).collect();
        let mut m = build_test_manifest(&clean, &noise, &builtin_pattern_bank(), 11).unwrap();
        for (k, r) in m.records.iter_mut().enumerate() {
            r.quality = Some(((k * 37) % 101) as f64 / 100.0);
            r.intelligibility = Some(((k * 53) % 97) as f64 / 96.0);
        }
        m.label_provenance = Some(format!("{SURROGATE_WATERMARK} test"));
        m
    }

    fn perfect(m: &CorpusManifest) -> PredictionFile {
        let rows = m
            .records
            .iter()
            .map(|r| PredictionRow { id: r.id.clone(), quality: r.quality, intelligibility: r.intelligibility })
            .collect();
        PredictionFile::new("oracle", rows).unwrap()
    }

    #[test]
    fn perfect_predictor_scores_perfectly() {
        let m = labeled_manifest();
        let rep = build_report(&perfect(&m), &m, &builtin_pattern_bank()).unwrap();
        assert_eq!(rep.groups.len(), 2 * 2 * 7);
        for g in &rep.groups {
            assert_eq!(g.metrics.mse, 0.0);
            assert!((g.metrics.lcc.unwrap() - 1.0).abs() < 1e-12);
            assert!((g.metrics.srcc.unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(rep.watermark.as_deref(), Some(SURROGATE_WATERMARK));
        assert!(rep.to_text().contains(SURROGATE_WATERMARK));
    }

    #[test]
    fn configurations_partition_the_pool() {
        let m = labeled_manifest();
        let mut p = perfect(&m);
        for (k, r) in p.rows.iter_mut().enumerate() {
            r.quality = Some((k % 7) as f64 / 7.0);
        }
        let rep = build_report(&p, &m, &builtin_pattern_bank()).unwrap();
        for task in Task::BOTH {
            for split in EvalSplit::BOTH {
                let sum: usize = Configuration::ALL.iter().map(|&c| rep.group(task, split, Some(c)).unwrap().n).sum();
                assert_eq!(sum, rep.group(task, split, None).unwrap().n);
                assert_eq!(sum, 3 * 2 * 4 * 12);
            }
            let h = rep.histograms.iter().find(|h| h.task == task).unwrap();
            assert_eq!(h.counts.iter().sum::<usize>(), m.records.len());
        }
    }

    #[test]
    fn missing_predictions_are_listed() {
        let m = labeled_manifest();
        let mut p = perfect(&m);
        let gone = p.rows.pop().unwrap().id;
        let err = build_report(&p, &m, &builtin_pattern_bank()).unwrap_err();
        assert!(err.to_string().contains(&gone));
    }

    #[test]
    fn order_independent() {
        let m = labeled_manifest();
        let p = perfect(&m);
        let mut shuffled = p.clone();
        shuffled.rows.reverse();
        let mut m2 = m.clone();
        m2.records.reverse();
        let bank = builtin_pattern_bank();
        let a = build_report(&p, &m, &bank).unwrap();
        let b = build_report(&shuffled, &m2, &bank).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn table_layout_has_six_configurations_and_both_splits() {
        let m = labeled_manifest();
        let text = build_report(&perfect(&m), &m, &builtin_pattern_bank()).unwrap().to_text();
        for c in Configuration::ALL {
            assert_eq!(text.matches(&format!("{:<18} ", c.title())).count(), 2, "{c}");
        }
        assert!(text.contains("Seen") && text.contains("Unseen") && text.contains("SRCC"));
    }

    #[test]
    fn single_task_predictions_produce_one_task() {
        let m = labeled_manifest();
        let mut p = perfect(&m);
        for r in &mut p.rows {
            r.intelligibility = None;
        }
        let rep = build_report(&p, &m, &builtin_pattern_bank()).unwrap();
        assert_eq!(rep.tasks, vec![Task::Quality]);
        assert!(rep.scatter_tsv(Task::Intelligibility).is_none());
        assert_eq!(rep.scatter_tsv(Task::Quality).unwrap().lines().count(), m.records.len() + 1);
    }
}
