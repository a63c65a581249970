use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{AudioSignal, DspError, Result};

pub const WINDOW_SIZE: usize = 512;
pub const HOP_SIZE: usize = 256;
pub const NUM_BINS: usize = WINDOW_SIZE / 2 + 1;

/// Frames x bins matrix of linear STFT magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    frames: usize,
    bins: usize,
    data: Vec<f64>,
    pub window_size: usize,
    pub hop_size: usize,
    pub sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn from_raw(frames: usize, bins: usize, data: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if frames == 0 || bins == 0 || data.len() != frames * bins {
            return Err(DspError::SpectrogramFormat(format!(
                "{frames}x{bins} with {} values",
                data.len()
            )));
        }
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DspError::SpectrogramFormat("negative or non-finite magnitude".into()));
        }
        Ok(Self {
            frames,
            bins,
            data,
            window_size: (bins - 1) * 2,
            hop_size: bins - 1,
            sample_rate_hz,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Bin with the largest magnitude in frame `t`.
    pub fn peak_bin(&self, t: usize) -> usize {
        self.frame(t)
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &m)| if m > best.1 { (k, m) } else { best })
            .0
    }
}

/// Symmetric Hamming window, `0.54 - 0.46 cos(2 pi n / (N - 1))`.
pub fn hamming_window(n: usize) -> Vec<f64> {
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos())
        .collect()
}

/// Number of full frames; the trailing partial frame is dropped.
pub fn frame_count(len: usize) -> Option<usize> {
    (len >= WINDOW_SIZE).then(|| (len - WINDOW_SIZE) / HOP_SIZE + 1)
}

pub fn stft_magnitude(signal: &AudioSignal) -> Result<Spectrogram> {
    let frames = frame_count(signal.len()).ok_or(DspError::TooShort {
        len: signal.len(),
        min: WINDOW_SIZE,
    })?;
    let window = hamming_window(WINDOW_SIZE);
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(WINDOW_SIZE);
    let mut buf = vec![Complex::new(0.0, 0.0); WINDOW_SIZE];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut data = Vec::with_capacity(frames * NUM_BINS);
    for t in 0..frames {
        let start = t * HOP_SIZE;
        for (slot, (x, w)) in buf
            .iter_mut()
            .zip(signal.samples[start..start + WINDOW_SIZE].iter().zip(&window))
        {
            *slot = Complex::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend(buf[..NUM_BINS].iter().map(|c| c.norm()));
    }
    Ok(Spectrogram {
        frames,
        bins: NUM_BINS,
        data,
        window_size: WINDOW_SIZE,
        hop_size: HOP_SIZE,
        sample_rate_hz: signal.sample_rate_hz,
    })
}
