//! Seeded corpus construction: clean × noise × SNR × audiogram assignment, and
//! realization of a record into network features.

mod build;
mod manifest;
mod realize;

pub use build::{
    build_test_manifest, build_train_manifest, val_count, CleanSource, NoiseSource, TEST_SNRS_DB, TRAIN_SNRS_DB,
    VAL_FRACTION,
};
pub use manifest::{CorpusManifest, Split, UtteranceRecord, MANIFEST_COLUMNS, MANIFEST_HEADER};
pub use realize::{Realized, Realizer, PRESENTATION_RMS};

use thiserror::Error;

use crate::dsp::DspError;
use crate::hearing::HearingError;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("cardinality mismatch: {0}")]
    Cardinality(String),
    #[error("pattern bank: {0}")]
    Bank(String),
    #[error("manifest line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("duplicate record id {0}")]
    DuplicateId(String),
    #[error("unknown audiogram id {0}")]
    UnknownAudiogram(String),
    #[error("{path}: {source}")]
    Audio { path: String, source: DspError },
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Hearing(#[from] HearingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SynthError>;
