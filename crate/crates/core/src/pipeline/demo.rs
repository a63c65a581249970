use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::steps::{self, CorpusKind, TrainSummary};
use super::synthetic::{noise_signal, speechlike_signal, TEST_NOISES, TRAIN_NOISES};
use super::{PipelineError, Result, RunConfig};
use crate::dsp::write_wav;
use crate::eval::EvalReport;
use crate::hearing::PatternBank;
use crate::labels::SurrogateParams;
use crate::train::TrainConfig;

#[derive(Debug, Clone)]
pub struct DemoOptions {
    pub seed: u64,
    /// Clean utterances for TRAIN/VAL; 10% (at least one) go to VAL.
    pub train_clean: usize,
    pub test_clean: usize,
    /// Mean clean duration; individual clips vary by ±20%.
    pub clip_secs: f64,
    pub noise_secs: f64,
    pub run: RunConfig,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            train_clean: 12,
            test_clean: 2,
            clip_secs: 0.6,
            noise_secs: 3.0,
            run: RunConfig {
                train: TrainConfig { max_epochs: 4, batch_size: 8, record_wall_time: false, ..TrainConfig::default() },
                ..RunConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoSummary {
    pub out_dir: PathBuf,
    pub train: TrainSummary,
    pub report: EvalReport,
}

fn write_clips(dir: &Path, prefix: &str, count: usize, mean_secs: f64, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let secs = mean_secs * rng.gen_range(0.8..1.2);
        let path = dir.join(format!("{prefix}-{i:03}.wav"));
        write_wav(&path, &speechlike_signal(secs, rng.gen())).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Generates audio, synthesizes TRAIN/VAL and test manifests, labels them with
/// the surrogate oracle, trains, predicts and evaluates, all under `out_dir`.
pub fn run_demo(out_dir: &Path, opts: &DemoOptions, bank: &PatternBank) -> Result<DemoSummary> {
    let audio = out_dir.join("audio");
    let dirs = ["clean_train", "clean_test", "noise_train", "noise_test"].map(|d| audio.join(d));
    for d in &dirs {
        std::fs::create_dir_all(d).map_err(|source| PipelineError::Io { path: d.clone(), source })?;
    }
    let seed = opts.seed;
    write_clips(&dirs[0], "train", opts.train_clean, opts.clip_secs, seed.wrapping_mul(4).wrapping_add(1))?;
    write_clips(&dirs[1], "test", opts.test_clean, opts.clip_secs, seed.wrapping_mul(4).wrapping_add(2))?;
    for (k, (dir, kinds)) in [(&dirs[2], TRAIN_NOISES), (&dirs[3], TEST_NOISES)].into_iter().enumerate() {
        for (j, kind) in kinds.into_iter().enumerate() {
            let path = dir.join(format!("{}.wav", kind.name()));
            let signal = noise_signal(kind, opts.noise_secs, seed ^ ((k * 16 + j) as u64 + 0x5eed));
            write_wav(&path, &signal).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        }
    }

    let params = SurrogateParams::default();
    let mut labeled = Vec::new();
    for (name, clean, noise, kind) in
        [("train", &dirs[0], &dirs[2], CorpusKind::Train), ("test", &dirs[1], &dirs[3], CorpusKind::Test)]
    {
        let manifest = out_dir.join(format!("{name}_manifest.tsv"));
        steps::synthesize(clean, noise, kind, seed, bank, &manifest)?;
        let labels = out_dir.join(format!("{name}_labels.tsv"));
        steps::surrogate_label_file(&manifest, bank, &params, &labels)?;
        let out = out_dir.join(format!("{name}_labeled.tsv"));
        steps::attach_label_file(&manifest, &labels, &out)?;
        labeled.push(out);
    }

    let mut run = opts.run.clone();
    run.train.seed = seed;
    let model_dir = out_dir.join("model");
    let train = steps::train(&labeled[0], &model_dir, &run, bank)?;
    let predictions = out_dir.join("predictions.tsv");
    steps::predict(&labeled[1], &train.model_path, bank, &predictions)?;
    let report = steps::evaluate(&labeled[1], &predictions, bank, &out_dir.join("report"))?;
    Ok(DemoSummary { out_dir: out_dir.to_path_buf(), train, report })
}
