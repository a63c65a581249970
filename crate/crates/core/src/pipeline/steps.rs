use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{PipelineError, Precision, Result, RunConfig};
use crate::dsp::wav_len;
use crate::eval::{build_report, AblationReport, EvalReport, PredictionFile, PredictionRow};
use crate::hearing::PatternBank;
use crate::labels::{attach_labels, surrogate_file, LabelFile, SurrogateParams};
use crate::nn::{concat_inputs_with, load_checkpoint, save_checkpoint, ModelParams, Task};
use crate::synth::{
    build_test_manifest, build_train_manifest, CleanSource, CorpusManifest, NoiseSource, Realizer, Split,
    UtteranceRecord,
};
use crate::train::{fit, predict as predict_one, EpochRecord, Example, TrainMode};
use crate::util::{relative_to, write_atomic};
use crate::Scalar;

pub const MODEL_FILE: &str = "model.hprm";
pub const HISTORY_FILE: &str = "history.jsonl";
pub const RUN_FILE: &str = "run.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Train,
    Test,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    write_atomic(path, text).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn read_manifest(path: &Path) -> Result<CorpusManifest> {
    Ok(CorpusManifest::parse(&read_text(path)?)?)
}

/// `.wav` files directly inside `dir`, sorted by file name, with their lengths.
pub fn scan_audio_dir(dir: &Path) -> Result<Vec<(PathBuf, usize)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let n = wav_len(&p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            Ok((p, n))
        })
        .collect()
}

/// Builds a manifest from two audio directories and writes it to `out`.
/// Audio paths are stored relative to the manifest's directory when possible.
pub fn synthesize(
    clean_dir: &Path,
    noise_dir: &Path,
    kind: CorpusKind,
    seed: u64,
    bank: &PatternBank,
    out: &Path,
) -> Result<CorpusManifest> {
    let out_dir = base_dir(out);
    fs::create_dir_all(if out_dir.as_os_str().is_empty() { Path::new(".") } else { &out_dir })
        .map_err(io_err(&out_dir))?;
    let rel = |p: &Path| relative_to(p, if out_dir.as_os_str().is_empty() { Path::new(".") } else { &out_dir });
    let clean: Vec<CleanSource> = scan_audio_dir(clean_dir)?
        .into_iter()
        .map(|(p, n)| CleanSource { path: rel(&p).to_string_lossy().into_owned(), num_samples: n })
        .collect();
    let noise: Vec<NoiseSource> = scan_audio_dir(noise_dir)?
        .into_iter()
        .map(|(p, n)| NoiseSource {
            name: p.file_stem().map(|s| s.to_string_lossy().replace(char::is_whitespace, "_")).unwrap_or_default(),
            path: rel(&p).to_string_lossy().into_owned(),
            num_samples: n,
        })
        .collect();
    let manifest = match kind {
        CorpusKind::Train => build_train_manifest(&clean, &noise, bank, seed)?,
        CorpusKind::Test => build_test_manifest(&clean, &noise, bank, seed)?,
    };
    log::info!(
        "synthesized {} records from {} clean and {} noise files",
        manifest.records.len(),
        clean.len(),
        noise.len()
    );
    write_text(out, &manifest.to_text())?;
    Ok(manifest)
}

pub fn surrogate_label_file(
    manifest_path: &Path,
    bank: &PatternBank,
    params: &SurrogateParams,
    out: &Path,
) -> Result<LabelFile> {
    let manifest = read_manifest(manifest_path)?;
    let realizer = Realizer::new(bank, base_dir(manifest_path));
    let labels = surrogate_file(&realizer, &manifest, params)
        .map_err(|source| PipelineError::Labels { context: manifest_path.display().to_string(), source })?;
    log::info!("computed surrogate labels for {} records", labels.rows.len());
    write_text(out, &labels.to_text())?;
    Ok(labels)
}

pub fn attach_label_file(manifest_path: &Path, labels_path: &Path, out: &Path) -> Result<CorpusManifest> {
    let manifest = read_manifest(manifest_path)?;
    let labels = LabelFile::parse(&read_text(labels_path)?)
        .map_err(|source| PipelineError::Labels { context: labels_path.display().to_string(), source })?;
    let labeled = attach_labels(&manifest, &labels)
        .map_err(|source| PipelineError::Labels { context: labels_path.display().to_string(), source })?;
    log::info!("attached labels to {} records", labeled.records.len());
    write_text(out, &labeled.to_text())?;
    Ok(labeled)
}

fn realize_input<T: Scalar>(realizer: &Realizer<'_>, record: &UtteranceRecord, run: &RunConfig) -> Result<crate::nn::Tensor2<T>> {
    let (spec, audiogram) = realizer.realize(record)?;
    Ok(concat_inputs_with(&spec, &audiogram, run.features.log_magnitude))
}

/// Realizes the TRAIN and VAL records of a labeled manifest in parallel.
pub fn load_examples<T: Scalar>(
    manifest: &CorpusManifest,
    realizer: &Realizer<'_>,
    run: &RunConfig,
) -> Result<(Vec<Example<T>>, Vec<Example<T>>)> {
    let load = |split: Split| -> Result<Vec<Example<T>>> {
        let records: Vec<&UtteranceRecord> = manifest.split(split).collect();
        records
            .par_iter()
            .map(|r| {
                let (Some(q), Some(i)) = (r.quality, r.intelligibility) else {
                    return Err(PipelineError::Config(format!("record {} has no labels; attach labels first", r.id)));
                };
                Ok(Example {
                    id: r.id.clone(),
                    input: realize_input(realizer, r, run)?,
                    quality: T::lit(q),
                    intelligibility: T::lit(i),
                })
            })
            .collect()
    };
    Ok((load(Split::Train)?, load(Split::Val)?))
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub parameters: usize,
    pub train_records: usize,
    pub val_records: usize,
    pub history: Vec<EpochRecord>,
    pub model_path: PathBuf,
}

fn history_text(history: &[EpochRecord]) -> String {
    let mut out = String::new();
    for h in history {
        let _ = writeln!(out, "{}", serde_json::to_string(h).expect("history serializes"));
    }
    out
}

fn train_as<T: Scalar>(manifest: &CorpusManifest, realizer: &Realizer<'_>, out_dir: &Path, run: &RunConfig) -> Result<TrainSummary> {
    let (train_set, val_set) = load_examples::<T>(manifest, realizer, run)?;
    log::info!("training on {} TRAIN and {} VAL records", train_set.len(), val_set.len());
    let mut rng = ChaCha8Rng::seed_from_u64(run.train.seed);
    let params = ModelParams::<T>::init(run.model_config(), &mut rng)?;
    let parameters = params.num_parameters();
    let result = fit(&train_set, &val_set, params, &run.train)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let model_path = out_dir.join(MODEL_FILE);
    save_checkpoint(&model_path, &result.best_params)?;
    write_text(&out_dir.join(HISTORY_FILE), &history_text(&result.history))?;
    let header = format!(
        "# effective configuration\n# manifest digest {}\n# best epoch {}\n",
        manifest.digest, result.best_epoch
    );
    write_text(&out_dir.join(RUN_FILE), &(header + &run.to_toml()))?;
    Ok(TrainSummary {
        best_epoch: result.best_epoch,
        stopped_early: result.stopped_early,
        parameters,
        train_records: train_set.len(),
        val_records: val_set.len(),
        history: result.history,
        model_path,
    })
}

/// Trains on a labeled manifest and writes the checkpoint, the per-epoch history
/// and the effective configuration into `out_dir`.
pub fn train(manifest_path: &Path, out_dir: &Path, run: &RunConfig, bank: &PatternBank) -> Result<TrainSummary> {
    run.validate()?;
    let manifest = read_manifest(manifest_path)?;
    let realizer = Realizer::new(bank, base_dir(manifest_path));
    match run.precision {
        Precision::F32 => train_as::<f32>(&manifest, &realizer, out_dir, run),
        Precision::F64 => train_as::<f64>(&manifest, &realizer, out_dir, run),
    }
}

fn run_config_for(model_path: &Path) -> Result<RunConfig> {
    let path = base_dir(model_path).join(RUN_FILE);
    if path.is_file() {
        RunConfig::from_toml(&read_text(&path)?)
    } else {
        Ok(RunConfig::default())
    }
}

fn predict_as<T: Scalar>(
    manifest: &CorpusManifest,
    realizer: &Realizer<'_>,
    model_path: &Path,
    run: &RunConfig,
) -> Result<Vec<PredictionRow>> {
    let params: ModelParams<T> = load_checkpoint(model_path)?;
    let mut rows = manifest
        .records
        .par_iter()
        .map(|r| {
            let input = realize_input::<T>(realizer, r, run)?;
            let (q, i) = predict_one(&params, &input)?;
            Ok(PredictionRow { id: r.id.clone(), quality: q.map(Scalar::as_f64), intelligibility: i.map(Scalar::as_f64) })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(rows)
}

/// Runs the model over every record of `manifest`; labels are not needed.
/// Feature and precision settings come from the `run.toml` beside the checkpoint.
pub fn predict_records(
    manifest: &CorpusManifest,
    realizer: &Realizer<'_>,
    model_path: &Path,
) -> Result<PredictionFile> {
    let run = run_config_for(model_path)?;
    let bytes = fs::read(model_path).map_err(io_err(model_path))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let rows = match run.precision {
        Precision::F32 => predict_as::<f32>(manifest, realizer, model_path, &run)?,
        Precision::F64 => predict_as::<f64>(manifest, realizer, model_path, &run)?,
    };
    let name = model_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(PredictionFile::new(format!("model={name} sha256={}", &digest[..16]), rows)?)
}

pub fn predict(manifest_path: &Path, model_path: &Path, bank: &PatternBank, out: &Path) -> Result<PredictionFile> {
    let manifest = read_manifest(manifest_path)?;
    let realizer = Realizer::new(bank, base_dir(manifest_path));
    let preds = predict_records(&manifest, &realizer, model_path)?;
    log::info!("predicted {} records", preds.rows.len());
    write_text(out, &preds.to_text())?;
    Ok(preds)
}

fn write_report(report: &EvalReport, out_dir: &Path) -> Result<()> {
    write_text(&out_dir.join("report.txt"), &report.to_text())?;
    write_text(&out_dir.join("report.json"), &report.to_json())?;
    for task in Task::BOTH {
        if let Some(tsv) = report.scatter_tsv(task) {
            write_text(&out_dir.join(format!("scatter_{task}.tsv")), &tsv)?;
        }
    }
    Ok(())
}

/// Writes `report.txt`, `report.json` and one `scatter_<task>.tsv` per task.
pub fn evaluate(manifest_path: &Path, predictions_path: &Path, bank: &PatternBank, out_dir: &Path) -> Result<EvalReport> {
    let manifest = read_manifest(manifest_path)?;
    let predictions = PredictionFile::parse(&read_text(predictions_path)?)?;
    let report = build_report(&predictions, &manifest, bank)?;
    write_report(&report, out_dir)?;
    log::info!("evaluated {} records", report.scatter.first().map_or(0, |(_, s)| s.len()));
    Ok(report)
}

/// Trains the multi-task model and both single-task models from the same seed,
/// evaluates each on the test manifest and writes the comparison tables.
pub fn ablation(
    train_manifest: &Path,
    test_manifest: &Path,
    out_dir: &Path,
    run: &RunConfig,
    bank: &PatternBank,
) -> Result<AblationReport> {
    let test = read_manifest(test_manifest)?;
    let realizer = Realizer::new(bank, base_dir(test_manifest));
    let mut reports = Vec::new();
    for mode in [TrainMode::Multitask, TrainMode::QualityOnly, TrainMode::IntelligibilityOnly] {
        let dir = out_dir.join(match mode {
            TrainMode::Multitask => "multi-task",
            TrainMode::QualityOnly => "quality-only",
            TrainMode::IntelligibilityOnly => "intelligibility-only",
        });
        let mut cfg = run.clone();
        cfg.train.mode = mode;
        let summary = train(train_manifest, &dir, &cfg, bank)?;
        let preds = predict_records(&test, &realizer, &summary.model_path)?;
        write_text(&dir.join("predictions.tsv"), &preds.to_text())?;
        let report = build_report(&preds, &test, bank)?;
        write_report(&report, &dir)?;
        reports.push((report, summary.parameters));
    }
    let ablation = AblationReport::new(
        &reports[0].0,
        reports[0].1,
        &[(Task::Quality, &reports[1].0, reports[1].1), (Task::Intelligibility, &reports[2].0, reports[2].1)],
    )?;
    write_text(&out_dir.join("ablation.txt"), &ablation.to_text())?;
    write_text(&out_dir.join("ablation.json"), &ablation.to_json())?;
    Ok(ablation)
}
