use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hasa_core::pipeline::{Precision, RunConfig};
use hasa_core::train::TrainMode;

#[derive(Debug, Parser)]
#[command(name = "hasa", version, about = "Hearing-aid speech quality and intelligibility assessment")]
pub struct Cli {
    /// Worker threads for realization, training and prediction (default: all processors).
    #[arg(long, global = true, value_parser = clap::value_parser!(usize))]
    pub jobs: Option<usize>,
    /// Pattern bank file replacing the built-in 42 audiograms.
    #[arg(long, global = true)]
    pub bank: Option<PathBuf>,
    /// More log output (-v debug, -vv trace)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only warnings and errors
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Multitask,
    QualityOnly,
    IntelligibilityOnly,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrecisionArg {
    F32,
    F64,
}

/// Training settings that override the config file.
#[derive(Debug, Default, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Training seed; falls back to HASA_SEED.
    #[arg(long, env = "HASA_SEED")]
    pub train_seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub dense: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    /// Leave per-epoch wall-clock time out of the history.
    #[arg(long)]
    pub no_wall_time: bool,
}

impl TrainOverrides {
    pub fn any(&self) -> bool {
        self.epochs.is_some()
            || self.batch_size.is_some()
            || self.learning_rate.is_some()
            || self.patience.is_some()
            || self.train_seed.is_some()
            || self.mode.is_some()
            || self.precision.is_some()
            || self.hidden.is_some()
            || self.dense.is_some()
            || self.heads.is_some()
            || self.no_wall_time
    }

    pub fn apply(&self, run: &mut RunConfig) {
        let t = &mut run.train;
        if let Some(v) = self.epochs {
            t.max_epochs = v;
        }
        if let Some(v) = self.batch_size {
            t.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            t.learning_rate = v;
        }
        if let Some(v) = self.patience {
            t.patience = v;
        }
        if let Some(v) = self.train_seed {
            t.seed = v;
        }
        if let Some(m) = self.mode {
            t.mode = match m {
                ModeArg::Multitask => TrainMode::Multitask,
                ModeArg::QualityOnly => TrainMode::QualityOnly,
                ModeArg::IntelligibilityOnly => TrainMode::IntelligibilityOnly,
            };
        }
        if self.no_wall_time {
            t.record_wall_time = false;
        }
        if let Some(p) = self.precision {
            run.precision = match p {
                PrecisionArg::F32 => Precision::F32,
                PrecisionArg::F64 => Precision::F64,
            };
        }
        if let Some(v) = self.hidden {
            run.model.hidden = v;
        }
        if let Some(v) = self.dense {
            run.model.dense = v;
        }
        if let Some(v) = self.heads {
            run.model.heads = v;
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a TRAIN/VAL or TEST manifest from clean and noise WAV directories.
    Synthesize {
        #[arg(long)]
        clean_dir: PathBuf,
        #[arg(long)]
        noise_dir: PathBuf,
        #[arg(long, env = "HASA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "train")]
        kind: Kind,
    },
    /// Attach external labels or compute surrogate labels.
    #[command(subcommand)]
    Labels(LabelsCommand),
    /// Train a model on a labeled manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Score every record of a manifest; labels are not needed.
    Predict {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predictions against the labels of a test manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train multi-task and single-task models from one seed and compare them.
    Ablation {
        #[arg(long)]
        train_manifest: PathBuf,
        #[arg(long)]
        test_manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Run the whole pipeline on generated audio with surrogate labels.
    Demo {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, env = "HASA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        train_clean: usize,
        #[arg(long, default_value_t = 2)]
        test_clean: usize,
        #[arg(long, default_value_t = 0.6)]
        clip_secs: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Write the network's magnitude spectrogram for one record.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inspect the audiogram pattern bank.
    #[command(subcommand)]
    Bank(BankCommand),
}

#[derive(Debug, Subcommand)]
pub enum LabelsCommand {
    /// Copy scores from a label file onto a manifest.
    Attach {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute surrogate scores for every record.
    Surrogate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum BankCommand {
    /// Print the active bank.
    Print,
    /// Check a bank file (or the built-in one) against the 42-pattern layout.
    Validate {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}
