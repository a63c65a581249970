use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{interp_log_freq, Audiogram, Result};
use crate::dsp::{AudioSignal, DspError, SAMPLE_RATE_HZ};

// NAL-R (Byrne & Dillon 1986): X = 0.15 * mean(H500, H1000, H2000),
// G(f) = X + 0.31 H(f) + k(f).
const NALR_X_FACTOR: f64 = 0.05;
const NALR_SLOPE: f64 = 0.31;
/// Frequency corrections k(f) in dB at 250..6000 Hz.
pub const NALR_CORRECTIONS_DB: [f64; 6] = [-17.0, -8.0, 1.0, -1.0, -2.0, -2.0];

/// Insertion gains in dB at the audiogram frequencies; negative prescriptions clamp to 0.
pub fn nalr_gains(audiogram: &Audiogram) -> [f64; 6] {
    let h = &audiogram.thresholds_db_hl;
    let x = NALR_X_FACTOR * (h[1] + h[2] + h[3]);
    let mut g = [0.0; 6];
    for (i, slot) in g.iter_mut().enumerate() {
        *slot = (x + NALR_SLOPE * h[i] + NALR_CORRECTIONS_DB[i]).max(0.0);
    }
    g
}

/// Gain in dB at `freq_hz` for a six-anchor curve.
pub fn gain_curve_at(gains_db: &[f64; 6], freq_hz: f64) -> f64 {
    interp_log_freq(gains_db, freq_hz)
}

/// Zero-phase filter: scales every DFT bin of the whole signal by the
/// interpolated linear gain, then transforms back.
pub fn apply_gain_curve(signal: &AudioSignal, gains_db: &[f64; 6]) -> Result<AudioSignal> {
    if signal.sample_rate_hz != SAMPLE_RATE_HZ {
        return Err(DspError::SampleRate(signal.sample_rate_hz).into());
    }
    let n = signal.len();
    if n == 0 {
        return Ok(signal.clone());
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = signal.samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let rate = signal.sample_rate_hz as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let freq = bin as f64 * rate / n as f64;
        *c *= 10f64.powf(gain_curve_at(gains_db, freq) / 20.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(AudioSignal::new(buf.iter().map(|c| c.re * scale).collect(), signal.sample_rate_hz))
}

pub fn apply_nalr(signal: &AudioSignal, audiogram: &Audiogram) -> Result<AudioSignal> {
    apply_gain_curve(signal, &nalr_gains(audiogram))
}
