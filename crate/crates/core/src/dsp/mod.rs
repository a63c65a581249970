//! Audio signals, STFT magnitude features and SNR-controlled mixing.
//!
//! Everything here runs in `f64`: the mixing contract is stated to 1e-9 dB and
//! the feature extractor is the entry point for every downstream precision.

mod io;
mod mix;
mod stft;

pub use io::{read_spectrogram, read_wav, wav_len, write_spectrogram, write_wav, SPECTROGRAM_MAGIC};
pub use mix::{mean_power, mix_at_snr, mix_at_snr_with_offset, noise_gain_for_snr, rms, rms_normalize};
pub use stft::{frame_count, hamming_window, stft_magnitude, Spectrogram, HOP_SIZE, NUM_BINS, WINDOW_SIZE};

use thiserror::Error;

/// The only sample rate the corpus pipeline accepts.
pub const SAMPLE_RATE_HZ: u32 = 16_000;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("utterance too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("degenerate power")]
    DegeneratePower,
    #[error("unsupported sample rate {0} Hz (expected {SAMPLE_RATE_HZ})")]
    SampleRate(u32),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("noise segment [{offset}, {offset}+{len}) exceeds noise length {available}")]
    NoiseTooShort { offset: usize, len: usize, available: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported wav format: {0}")]
    WavFormat(String),
    #[error("malformed spectrogram file: {0}")]
    SpectrogramFormat(String),
    #[error(transparent)]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DspError>;

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        assert!(sample_rate_hz > 0, "sample rate must be positive");
        Self { samples, sample_rate_hz }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self::new(self.samples.iter().map(|s| s * gain).collect(), self.sample_rate_hz)
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}
