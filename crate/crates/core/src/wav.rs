//! Mono WAV input/output. Supported encodings are 16-bit PCM and 32-bit
//! float. Multichannel input is downmixed by averaging the channels of each
//! frame.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::spectral::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<(Waveform, WavEncoding)> {
    let file = File::open(path)?;
    read_wav_from(BufReader::new(file))
}

pub fn read_wav_from<R: Read>(reader: R) -> Result<(Waveform, WavEncoding)> {
    let mut reader = WavReader::new(reader)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::format(None, "WAV file declares zero channels"));
    }
    let (interleaved, enc): (Vec<f32>, _) = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => (
            reader
                .samples::<i16>()
                .map(|s| s.map(|v| v as f32 / 32768.0))
                .collect::<std::result::Result<_, _>>()?,
            WavEncoding::Pcm16,
        ),
        (SampleFormat::Float, 32) => (
            reader.samples::<f32>().collect::<std::result::Result<_, _>>()?,
            WavEncoding::Float32,
        ),
        (fmt, bits) => {
            return Err(Error::format(
                None,
                format!("unsupported WAV encoding {fmt:?} with {bits} bits per sample"),
            ))
        }
    };
    let samples: Vec<f32> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect();
    let w = Waveform::new(samples, spec.sample_rate)?;
    Ok((w, enc))
}

pub fn write_wav(path: impl AsRef<Path>, w: &Waveform, enc: WavEncoding) -> Result<()> {
    let file = File::create(path)?;
    write_wav_to(BufWriter::new(file), w, enc)
}

pub fn write_wav_to<W: Write + Seek>(writer: W, w: &Waveform, enc: WavEncoding) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: match enc {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match enc {
            WavEncoding::Pcm16 => SampleFormat::Int,
            WavEncoding::Float32 => SampleFormat::Float,
        },
    };
    let mut out = WavWriter::new(writer, spec)?;
    for &s in &w.samples {
        match enc {
            WavEncoding::Pcm16 => {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.write_sample(v)?;
            }
            WavEncoding::Float32 => out.write_sample(s)?,
        }
    }
    out.finalize()?;
    Ok(())
}
