//! Deterministic stand-ins for speech and environmental noise, used by the demo
//! and tests when no recorded corpus is available.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{AudioSignal, SAMPLE_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoNoise {
    White,
    Pink,
    Brown,
    Hum,
    Babble,
    Engine,
    Street,
    BabyCry,
}

impl DemoNoise {
    pub fn name(self) -> &'static str {
        match self {
            DemoNoise::White => "white",
            DemoNoise::Pink => "pink",
            DemoNoise::Brown => "brown",
            DemoNoise::Hum => "hum",
            DemoNoise::Babble => "babble",
            DemoNoise::Engine => "engine",
            DemoNoise::Street => "street",
            DemoNoise::BabyCry => "babycry",
        }
    }
}

pub const TRAIN_NOISES: [DemoNoise; 4] = [DemoNoise::Pink, DemoNoise::Brown, DemoNoise::Hum, DemoNoise::Babble];
pub const TEST_NOISES: [DemoNoise; 4] = [DemoNoise::Engine, DemoNoise::White, DemoNoise::Street, DemoNoise::BabyCry];

const FS: f64 = SAMPLE_RATE_HZ as f64;

fn peak_normalize(mut x: Vec<f64>, peak: f64) -> Vec<f64> {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
    x
}

/// Formant weighting: three Gaussian bumps on a log-frequency axis over a small floor.
fn formant_gain(freq: f64, formants: &[f64; 3]) -> f64 {
    formants
        .iter()
        .zip([1.0, 0.6, 0.35])
        .map(|(&f, a)| a * (-(freq / f).ln().powi(2) / 0.08).exp())
        .sum::<f64>()
        + 0.03
}

fn voiced(len: usize, rng: &mut ChaCha8Rng, f0_base: f64) -> Vec<f64> {
    let syllable_rate = rng.gen_range(3.0..6.0);
    let vibrato = rng.gen_range(0.5..3.0);
    let vowels = [[700.0, 1200.0, 2600.0], [300.0, 2300.0, 3000.0], [450.0, 900.0, 2500.0], [350.0, 1000.0, 2300.0]];
    let syllable_len = (FS / syllable_rate) as usize;
    let n_syll = len / syllable_len + 1;
    let plan: Vec<([f64; 3], bool)> =
        (0..n_syll).map(|_| (vowels[rng.gen_range(0..vowels.len())], rng.gen_bool(0.85))).collect();
    let mut phase = 0.0;
    (0..len)
        .map(|n| {
            let t = n as f64 / FS;
            let (formants, active) = plan[n / syllable_len];
            let pos = (n % syllable_len) as f64 / syllable_len as f64;
            let env = if active { (PI * pos).sin().powf(0.6) } else { 0.02 };
            let f0 = f0_base * (1.0 + 0.04 * (2.0 * PI * vibrato * t).sin());
            phase += 2.0 * PI * f0 / FS;
            let harmonics = ((7000.0 / f0) as usize).max(1);
            let s: f64 = (1..=harmonics)
                .map(|h| {
                    let f = f0 * h as f64;
                    formant_gain(f, &formants) * (phase * h as f64).sin() / (h as f64).sqrt()
                })
                .sum();
            env * s
        })
        .collect()
}

/// Harmonic, syllabically modulated signal with moving formants and a little
/// breath noise; broadband enough to excite every third-octave band.
pub fn speechlike_signal(duration_secs: f64, seed: u64) -> AudioSignal {
    let len = (duration_secs * FS).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = rng.gen_range(100.0..230.0);
    let mut x = voiced(len, &mut rng, f0);
    for v in &mut x {
        *v += 0.02 * rng.gen_range(-1.0..1.0);
    }
    AudioSignal::new(peak_normalize(x, 0.5), SAMPLE_RATE_HZ)
}

fn white(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn brown(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut acc = 0.0;
    (0..len)
        .map(|_| {
            acc = 0.995 * acc + 0.1 * rng.gen_range(-1.0..1.0);
            acc
        })
        .collect()
}

/// Paul Kellet's economy pink filter.
fn pink(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    (0..len)
        .map(|_| {
            let w: f64 = rng.gen_range(-1.0..1.0);
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect()
}

fn tone_stack(len: usize, f0: f64, harmonics: usize, tilt: f64) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let t = n as f64 / FS;
            (1..=harmonics).map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / (h as f64).powf(tilt)).sum()
        })
        .collect()
}

pub fn noise_signal(kind: DemoNoise, duration_secs: f64, seed: u64) -> AudioSignal {
    let len = (duration_secs * FS).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = match kind {
        DemoNoise::White => white(len, &mut rng),
        DemoNoise::Pink => pink(len, &mut rng),
        DemoNoise::Brown => brown(len, &mut rng),
        DemoNoise::Hum => {
            let hum = tone_stack(len, 50.0, 40, 0.7);
            hum.iter().zip(white(len, &mut rng)).map(|(h, w)| h + 0.05 * w).collect()
        }
        DemoNoise::Babble => {
            let mut acc = vec![0.0; len];
            for _ in 0..5 {
                let f0 = rng.gen_range(90.0..240.0);
                for (a, v) in acc.iter_mut().zip(voiced(len, &mut rng, f0)) {
                    *a += v;
                }
            }
            acc
        }
        DemoNoise::Engine => {
            let rumble = brown(len, &mut rng);
            let f0 = rng.gen_range(28.0..40.0);
            let tones = tone_stack(len, f0, 60, 0.5);
            (0..len)
                .map(|n| {
                    let am = 1.0 + 0.3 * (2.0 * PI * 7.0 * n as f64 / FS).sin();
                    am * tones[n] + 2.0 * rumble[n]
                })
                .collect()
        }
        DemoNoise::Street => {
            let bed = pink(len, &mut rng);
            let horn = tone_stack(len, 440.0, 8, 1.0);
            let mut gate = vec![0.0; len];
            let mut n = 0;
            while n < len {
                let on = rng.gen_bool(0.3);
                let dur = rng.gen_range(1600..8000);
                for g in gate.iter_mut().skip(n).take(dur) {
                    *g = if on { 1.0 } else { 0.0 };
                }
                n += dur;
            }
            (0..len).map(|n| bed[n] + 0.6 * gate[n] * horn[n]).collect()
        }
        DemoNoise::BabyCry => {
            let mut phase = 0.0;
            let breath = white(len, &mut rng);
            (0..len)
                .map(|n| {
                    let t = n as f64 / FS;
                    let f0 = 450.0 * (1.0 + 0.08 * (2.0 * PI * 6.0 * t).sin() + 0.1 * (2.0 * PI * 0.7 * t).sin());
                    phase += 2.0 * PI * f0 / FS;
                    let env = (2.0 * PI * 1.1 * t).sin().max(0.0).powf(0.5);
                    let s: f64 = (1..=12).map(|h| (phase * h as f64).sin() / h as f64).sum();
                    env * s + 0.05 * breath[n]
                })
                .collect()
        }
    };
    AudioSignal::new(peak_normalize(x, 0.5), SAMPLE_RATE_HZ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::rms;

    #[test]
    fn generators_are_deterministic_bounded_and_non_silent() {
        let a = speechlike_signal(0.5, 3);
        assert_eq!(a, speechlike_signal(0.5, 3));
        assert_ne!(a, speechlike_signal(0.5, 4));
        assert_eq!(a.len(), 8000);
        for kind in TRAIN_NOISES.into_iter().chain(TEST_NOISES) {
            let n = noise_signal(kind, 0.5, 1);
            assert_eq!(n, noise_signal(kind, 0.5, 1));
            assert!(n.samples.iter().all(|v| v.abs() <= 0.5 + 1e-12), "{}", kind.name());
            assert!(rms(&n.samples) > 1e-3, "{}", kind.name());
        }
    }
}
