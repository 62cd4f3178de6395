use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioClip;
use crate::error::{Error, Result};

const PCM16_SCALE: f64 = 32768.0;

fn pcm16_spec(sample_rate: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

fn map_write(err: hound::Error, path: &Path) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        other => Error::WavFormat(other.to_string()),
    }
}

// The file is already open, so decoder I/O failures mean the stream is short
// or malformed.
fn map_read(err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::WavFormat(format!("truncated or unreadable: {e}")),
        other => Error::WavFormat(other.to_string()),
    }
}

/// Reads a mono PCM16 WAV file; samples are scaled by 1/32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_wav_from(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_wav_from<R: Read>(reader: R) -> Result<AudioClip> {
    let reader = WavReader::new(reader).map_err(map_read)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::WavFormat(format!(
            "expected mono, found {} channels",
            spec.channels
        )));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::WavFormat(format!(
            "expected 16-bit integer PCM, found {}-bit {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / PCM16_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(map_read)?;
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes the clip as 16-bit mono PCM; values are clamped to the PCM16 range.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_wav_to(clip, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_wav_to<W: Write + Seek>(clip: &AudioClip, writer: W) -> Result<()> {
    if let Some(i) = clip.samples().iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let here = Path::new("<stream>");
    let mut w = WavWriter::new(writer, pcm16_spec(clip.sample_rate())).map_err(|e| map_write(e, here))?;
    for &s in clip.samples() {
        let v = (s * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(|e| map_write(e, here))?;
    }
    w.finalize().map_err(|e| map_write(e, here))
}
