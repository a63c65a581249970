use hasa_core::dsp::write_wav;
use hasa_core::hearing::{builtin_pattern_bank, PatternSplit};
use hasa_core::labels::{surrogate_labels, SurrogateParams};
use hasa_core::nn::{concat_inputs_with, ModelConfig, ModelParams};
use hasa_core::pipeline::{noise_signal, speechlike_signal, DemoNoise};
use hasa_core::synth::{Realizer, Split, UtteranceRecord, TRAIN_SNRS_DB};
use hasa_core::train::{fit, fit_single_task, Example, TrainConfig, TrainError, TrainMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Ten short noisy utterances with surrogate labels.
fn surrogate_corpus() -> Vec<Example<f64>> {
    let dir = tempfile::tempdir().unwrap();
    let bank = builtin_pattern_bank();
    write_wav(dir.path().join("noise.wav"), &noise_signal(DemoNoise::Babble, 2.0, 3)).unwrap();
    let seen: Vec<&str> =
        bank.entries().iter().filter(|e| e.split == PatternSplit::Seen).map(|e| e.id.as_str()).collect();
    let realizer = Realizer::new(&bank, dir.path());
    (0..10)
        .map(|i| {
            let clean = format!("c{i}.wav");
            write_wav(dir.path().join(&clean), &speechlike_signal(0.5, 40 + i as u64)).unwrap();
            let record = UtteranceRecord {
                id: format!("u{i}"),
                split: Split::Train,
                clean_path: clean,
                noise_name: "babble".into(),
                noise_path: "noise.wav".into(),
                noise_offset: 700 * i,
                snr_db: TRAIN_SNRS_DB[i % 7],
                audiogram_id: seen[(i * 5) % seen.len()].to_string(),
                quality: None,
                intelligibility: None,
            };
            let (q, it) = surrogate_labels(&realizer, &record, &SurrogateParams::default()).unwrap();
            let (spec, audiogram) = realizer.realize(&record).unwrap();
            Example { id: record.id, input: concat_inputs_with(&spec, &audiogram, true), quality: q, intelligibility: it }
        })
        .collect()
}

fn small_model(mode: TrainMode, seed: u64) -> ModelParams<f64> {
    let config = ModelConfig { hidden: 16, dense: 16, heads: 4, tasks: mode.task_set(), ..ModelConfig::default() };
    ModelParams::init(config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn quick_config() -> TrainConfig {
    TrainConfig { batch_size: 2, max_epochs: 3, record_wall_time: false, ..TrainConfig::default() }
}

#[test]
fn fit_is_deterministic() {
    let data = surrogate_corpus();
    let (train, val) = data.split_at(8);
    let a = fit(train, val, small_model(TrainMode::Multitask, 1), &quick_config()).unwrap();
    let b = fit(train, val, small_model(TrainMode::Multitask, 1), &quick_config()).unwrap();
    assert_eq!(a.best_params, b.best_params);
    assert_eq!(a.history, b.history);
}

#[test]
fn training_loss_decreases_over_first_epochs() {
    let data = surrogate_corpus();
    let init = ModelParams::init(ModelConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let result = fit(&data, &data, init, &quick_config()).unwrap();
    let losses: Vec<f64> = result.history.iter().map(|h| h.train_total).collect();
    assert_eq!(losses.len(), 3);
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}

#[test]
fn early_stop_keeps_best_epoch() {
    let data = surrogate_corpus();
    let (train, val) = data.split_at(8);
    // A large step makes VAL loss bounce, so patience 1 triggers quickly.
    let config = TrainConfig { learning_rate: 3e-2, patience: 1, max_epochs: 30, ..quick_config() };
    let result = fit(train, val, small_model(TrainMode::Multitask, 2), &config).unwrap();
    assert!(result.stopped_early, "ran {} epochs", result.history.len());
    assert_eq!(result.history.len(), result.best_epoch + 1);
    let best_val = result.history[result.best_epoch - 1].val_total;
    assert!(result.history.iter().all(|h| h.val_total >= best_val));

    let replay = TrainConfig { max_epochs: result.best_epoch, patience: 100, ..config };
    let rerun = fit(train, val, small_model(TrainMode::Multitask, 2), &replay).unwrap();
    assert_eq!(rerun.best_epoch, result.best_epoch);
    assert_eq!(rerun.best_params, result.best_params);
}

#[test]
fn single_task_training() {
    let data = surrogate_corpus();
    let (train, val) = data.split_at(8);
    let err = fit_single_task(train, val, small_model(TrainMode::Multitask, 0), &quick_config()).unwrap_err();
    assert!(matches!(err, TrainError::Config(_)));

    let config = TrainConfig { mode: TrainMode::QualityOnly, max_epochs: 1, ..quick_config() };
    let result = fit_single_task(train, val, small_model(TrainMode::QualityOnly, 0), &config).unwrap();
    assert!(result.history[0].train_quality.is_some());
    assert!(result.history[0].train_intelligibility.is_none());

    let mismatched = fit_single_task(train, val, small_model(TrainMode::IntelligibilityOnly, 0), &config);
    assert!(matches!(mismatched, Err(TrainError::Config(_))));
}

#[test]
fn invalid_configs_are_rejected() {
    let base = quick_config();
    let bad = [
        TrainConfig { learning_rate: 0.0, ..base.clone() },
        TrainConfig { rho: 1.0, ..base.clone() },
        TrainConfig { epsilon: 0.0, ..base.clone() },
        TrainConfig { batch_size: 0, ..base.clone() },
        TrainConfig { patience: 0, ..base.clone() },
        TrainConfig { max_epochs: 0, ..base.clone() },
        TrainConfig { alpha: 0.0, ..base.clone() },
        TrainConfig { beta: f64::NAN, ..base.clone() },
    ];
    for config in &bad {
        assert!(matches!(config.validate(), Err(TrainError::Config(_))), "{config:?}");
    }
    assert!(base.validate().is_ok());
    let data = surrogate_corpus();
    assert!(fit(&data, &[], small_model(TrainMode::Multitask, 0), &base).is_err());
}
