use std::path::Path;

use super::{AudioBuffer, DspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

/// Reads a mono RIFF WAV file (16-bit PCM or 32-bit float) into `[-1, 1]` samples.
pub fn read_wav(path: &Path) -> Result<AudioBuffer, DspError> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(DspError::Audio(format!(
            "{}: {} channels, only mono is supported",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()?,
        (fmt, bits) => {
            return Err(DspError::Audio(format!(
                "{}: unsupported sample format {fmt:?} with {bits} bits",
                path.display()
            )))
        }
    };
    AudioBuffer::new(samples, spec.sample_rate)
}

pub fn write_wav(path: &Path, audio: &AudioBuffer, format: SampleFormat) -> Result<(), DspError> {
    let (bits, sample_format) = match format {
        SampleFormat::Pcm16 => (16, hound::SampleFormat::Int),
        SampleFormat::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate(),
        bits_per_sample: bits,
        sample_format,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in audio.samples() {
        match format {
            SampleFormat::Pcm16 => w.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16)?,
            SampleFormat::Float32 => w.write_sample(s as f32)?,
        }
    }
    w.finalize()?;
    Ok(())
}
