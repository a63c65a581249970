use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AudioSignal, DspError, Result, Spectrogram, SAMPLE_RATE_HZ};

pub const SPECTROGRAM_MAGIC: &[u8; 4] = b"HSPC";

fn check_spec(spec: &hound::WavSpec) -> Result<()> {
    if spec.channels != 1 {
        return Err(DspError::WavFormat(format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(DspError::WavFormat(format!(
            "{:?} {}-bit, expected 16-bit PCM",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    if spec.sample_rate != SAMPLE_RATE_HZ {
        return Err(DspError::SampleRate(spec.sample_rate));
    }
    Ok(())
}

/// Reads a 16-bit PCM mono 16 kHz WAV file, scaling samples to [-1, 1).
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let reader = hound::WavReader::open(path)?;
    check_spec(&reader.spec())?;
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(AudioSignal::new(samples, SAMPLE_RATE_HZ))
}

/// Sample count from the header only.
pub fn wav_len(path: impl AsRef<Path>) -> Result<usize> {
    let reader = hound::WavReader::open(path)?;
    check_spec(&reader.spec())?;
    Ok(reader.len() as usize)
}

/// Writes 16-bit PCM; samples outside [-1, 1] are clipped.
pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    if signal.sample_rate_hz != SAMPLE_RATE_HZ {
        return Err(DspError::SampleRate(signal.sample_rate_hz));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for s in &signal.samples {
        let v = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}

/// `HSPC` | u32 frames | u32 bins | u32 sample rate | row-major f32, all little-endian.
pub fn write_spectrogram<W: Write>(mut w: W, spec: &Spectrogram) -> Result<()> {
    w.write_all(SPECTROGRAM_MAGIC)?;
    for v in [spec.frames() as u32, spec.bins() as u32, spec.sample_rate_hz] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut out = BufWriter::new(w);
    for v in spec.data() {
        out.write_all(&(*v as f32).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_spectrogram<R: Read>(r: R) -> Result<Spectrogram> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SPECTROGRAM_MAGIC {
        return Err(DspError::SpectrogramFormat("bad magic".into()));
    }
    let mut word = [0u8; 4];
    let mut next_u32 = |r: &mut BufReader<R>| -> Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let frames = next_u32(&mut r)? as usize;
    let bins = next_u32(&mut r)? as usize;
    let rate = next_u32(&mut r)?;
    let mut data = Vec::with_capacity(frames.saturating_mul(bins).min(1 << 26));
    let mut buf = [0u8; 4];
    for _ in 0..frames * bins {
        r.read_exact(&mut buf)?;
        data.push(f32::from_le_bytes(buf) as f64);
    }
    if r.read(&mut buf)? != 0 {
        return Err(DspError::SpectrogramFormat("trailing bytes".into()));
    }
    Spectrogram::from_raw(frames, bins, data, rate)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft_magnitude;

    #[test]
    fn spectrogram_file_round_trip() {
        let sig = AudioSignal::new((0..2000).map(|n| (n as f64 * 0.01).sin() * 0.3).collect(), 16_000);
        let spec = stft_magnitude(&sig).unwrap();
        let mut bytes = Vec::new();
        write_spectrogram(&mut bytes, &spec).unwrap();
        assert_eq!(&bytes[..4], b"HSPC");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 6);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 257);
        assert_eq!(bytes.len(), 16 + 6 * 257 * 4);
        let back = read_spectrogram(&bytes[..]).unwrap();
        assert_eq!(back.frames(), 6);
        for (a, b) in back.data().iter().zip(spec.data()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn wav_round_trip_and_rate_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let sig = AudioSignal::new(vec![0.0, 0.5, -0.5, 0.25], 16_000);
        write_wav(&path, &sig).unwrap();
        assert_eq!(wav_len(&path).unwrap(), 4);
        assert_eq!(read_wav(&path).unwrap(), sig);

        let bad = dir.path().join("b.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&bad, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&bad), Err(DspError::SampleRate(8000))));
    }
}
