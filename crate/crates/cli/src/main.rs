//! `hasa`: command-line front end for corpus synthesis, labeling, training,
//! prediction and evaluation.

mod args;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use hasa_core::hearing::{builtin_pattern_bank, PatternBank, BUILTIN_BANK_TEXT};
use hasa_core::labels::SurrogateParams;
use hasa_core::pipeline::{self, CorpusKind, DemoOptions, PipelineError, RunConfig};
use hasa_core::synth::Realizer;

use args::{BankCommand, Cli, Command, LabelsCommand, TrainOverrides};

type Result<T> = std::result::Result<T, PipelineError>;

fn usage(msg: impl Into<String>) -> PipelineError {
    PipelineError::Usage(msg.into())
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} is not a directory", path.display())))
    }
}

fn load_bank(path: Option<&Path>) -> Result<PatternBank> {
    match path {
        None => Ok(builtin_pattern_bank()),
        Some(p) => {
            require_file(p, "pattern bank")?;
            let text = fs::read_to_string(p).map_err(|source| PipelineError::Io { path: p.to_path_buf(), source })?;
            Ok(PatternBank::parse(&text)?)
        }
    }
}

/// Defaults, then the config file, then explicit flags.
fn run_config(config: Option<&Path>, o: &TrainOverrides) -> Result<RunConfig> {
    let mut run = match config {
        Some(p) => {
            require_file(p, "config file")?;
            let text = fs::read_to_string(p).map_err(|source| PipelineError::Io { path: p.to_path_buf(), source })?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    o.apply(&mut run);
    run.validate()?;
    Ok(run)
}

fn run(cli: Cli) -> Result<()> {
    let bank = load_bank(cli.bank.as_deref())?;
    match cli.command {
        Command::Synthesize { clean_dir, noise_dir, seed, out, kind } => {
            require_dir(&clean_dir, "clean directory")?;
            require_dir(&noise_dir, "noise directory")?;
            let kind = match kind {
                args::Kind::Train => CorpusKind::Train,
                args::Kind::Test => CorpusKind::Test,
            };
            let m = pipeline::synthesize(&clean_dir, &noise_dir, kind, seed, &bank, &out)?;
            println!("wrote {} records to {}", m.records.len(), out.display());
        }
        Command::Labels(LabelsCommand::Attach { manifest, labels, out }) => {
            require_file(&manifest, "manifest")?;
            require_file(&labels, "label file")?;
            let m = pipeline::attach_label_file(&manifest, &labels, &out)?;
            println!("labeled {} records into {}", m.records.len(), out.display());
        }
        Command::Labels(LabelsCommand::Surrogate { manifest, out }) => {
            require_file(&manifest, "manifest")?;
            let f = pipeline::surrogate_label_file(&manifest, &bank, &SurrogateParams::default(), &out)?;
            println!("wrote {} surrogate labels to {}", f.rows.len(), out.display());
        }
        Command::Train { manifest, out_dir, config, overrides } => {
            require_file(&manifest, "manifest")?;
            let run = run_config(config.as_deref(), &overrides)?;
            let s = pipeline::train(&manifest, &out_dir, &run, &bank)?;
            println!(
                "trained {} parameters on {} records; best epoch {} of {}{}; model {}",
                s.parameters,
                s.train_records,
                s.best_epoch,
                s.history.len(),
                if s.stopped_early { " (early stop)" } else { "" },
                s.model_path.display()
            );
        }
        Command::Predict { manifest, model, out } => {
            require_file(&manifest, "manifest")?;
            require_file(&model, "model")?;
            let p = pipeline::predict(&manifest, &model, &bank, &out)?;
            println!("wrote {} predictions to {}", p.rows.len(), out.display());
        }
        Command::Evaluate { manifest, predictions, out } => {
            require_file(&manifest, "manifest")?;
            require_file(&predictions, "predictions file")?;
            let r = pipeline::evaluate(&manifest, &predictions, &bank, &out)?;
            print!("{}", r.to_text());
        }
        Command::Ablation { train_manifest, test_manifest, out_dir, config, overrides } => {
            require_file(&train_manifest, "training manifest")?;
            require_file(&test_manifest, "test manifest")?;
            let run = run_config(config.as_deref(), &overrides)?;
            let r = pipeline::ablation(&train_manifest, &test_manifest, &out_dir, &run, &bank)?;
            print!("{}", r.to_text());
        }
        Command::Demo { out_dir, seed, train_clean, test_clean, clip_secs, config, overrides } => {
            let mut opts = DemoOptions { seed, train_clean, test_clean, clip_secs, ..DemoOptions::default() };
            if config.is_some() || overrides.any() {
                let base = opts.run.clone();
                opts.run = match config.as_deref() {
                    Some(_) => run_config(config.as_deref(), &overrides)?,
                    None => {
                        let mut r = base;
                        overrides.apply(&mut r);
                        r.validate()?;
                        r
                    }
                };
            }
            let s = pipeline::run_demo(&out_dir, &opts, &bank)?;
            print!("{}", s.report.to_text());
        }
        Command::Features { manifest, id, out } => {
            require_file(&manifest, "manifest")?;
            let m = pipeline::read_manifest(&manifest)?;
            let record = m.records.iter().find(|r| r.id == id).ok_or_else(|| usage(format!("no record {id}")))?;
            let base: PathBuf = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
            let (spec, _) = Realizer::new(&bank, base).realize(record)?;
            let mut bytes = Vec::new();
            hasa_core::dsp::write_spectrogram(&mut bytes, &spec)?;
            hasa_core::util::write_atomic(&out, bytes).map_err(|source| PipelineError::Io { path: out.clone(), source })?;
            println!("wrote {}x{} spectrogram to {}", spec.frames(), spec.bins(), out.display());
        }
        Command::Bank(BankCommand::Print) => print!("{}", bank.to_text()),
        Command::Bank(BankCommand::Validate { file }) => {
            let text = match &file {
                Some(p) => {
                    require_file(p, "pattern bank")?;
                    fs::read_to_string(p).map_err(|source| PipelineError::Io { path: p.clone(), source })?
                }
                None => BUILTIN_BANK_TEXT.to_string(),
            };
            let b = PatternBank::parse(&text)?;
            b.validate_standard_layout()?;
            println!("{} patterns, standard layout ok", b.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "warn",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start {jobs} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
