//! Ground-truth providers: externally computed score files and a built-in
//! surrogate oracle so the pipeline runs without external tools.

mod file;
mod surrogate;

pub use file::{attach_labels, LabelFile, LabelRow, LABELS_HEADER};
pub use surrogate::{
    band_snrs_db, effective_snr_db, surrogate_file, surrogate_labels, surrogate_scores, SurrogateParams,
    band_center, NUM_BANDS, SURROGATE_PROVENANCE, SURROGATE_WATERMARK,
};

use thiserror::Error;

use crate::dsp::DspError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("label file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("score {value} for {id} out of range [0, 1]")]
    OutOfRange { id: String, value: f64 },
    #[error("duplicate label id {0}")]
    DuplicateId(String),
    #[error("manifest records without labels: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("label ids not in manifest: {}", .0.join(", "))]
    Unknown(Vec<String>),
    #[error("invalid surrogate parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

pub type Result<T> = std::result::Result<T, LabelError>;
