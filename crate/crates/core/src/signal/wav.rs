//! RIFF/WAVE reading and writing for 16-bit PCM.

use std::fs;
use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct FmtChunk {
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return format_err("fmt chunk shorter than 16 bytes");
    }
    let mut format = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let bits = u16_at(body, 14);
    if format == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the subformat GUID, whose first two bytes are the format code
        if body.len() < 26 {
            return format_err("extensible fmt chunk is truncated");
        }
        format = u16_at(body, 24);
    }
    if format != FORMAT_PCM {
        return Err(Error::UnsupportedFormat(format!("format tag {format:#06x}, only PCM is supported")));
    }
    if bits != 16 {
        return Err(Error::UnsupportedFormat(format!("{bits}-bit samples, only 16-bit PCM is supported")));
    }
    if channels == 0 {
        return format_err("zero channels");
    }
    if sample_rate == 0 {
        return format_err("zero sample rate");
    }
    Ok(FmtChunk { channels, sample_rate, bits })
}

/// Decodes a WAV byte buffer; multichannel audio is averaged to mono and scaled by 2^-15.
pub fn read_wav<S: Scalar>(bytes: &[u8]) -> Result<AudioClip<S>> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return format_err("missing RIFF/WAVE signature");
    }
    let mut fmt = None;
    let mut data = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format(format!("chunk {:?} runs past end of file", String::from_utf8_lossy(id))))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are padded to even length
        pos = body_end + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    let frame_bytes = fmt.channels as usize * (fmt.bits as usize / 8);
    if data.len() % frame_bytes != 0 {
        return format_err(format!("data size {} is not a whole number of {frame_bytes}-byte frames", data.len()));
    }
    let channels = fmt.channels as f64;
    let samples: Vec<S> = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64)
                .sum();
            S::cast(sum / channels / 32768.0)
        })
        .collect();
    if samples.is_empty() {
        return format_err("data chunk holds no samples");
    }
    AudioClip::new(samples, fmt.sample_rate)
}

pub fn load_wav<S: Scalar>(path: impl AsRef<Path>) -> Result<AudioClip<S>> {
    let bytes = fs::read(path.as_ref())?;
    read_wav(&bytes)
}

/// Encodes a clip as 16-bit mono PCM. Samples are clamped to `[-1, 1 - 2^-15]`,
/// scaled by 32768 and rounded to nearest.
pub fn write_wav<S: Scalar>(clip: &AudioClip<S>) -> Vec<u8> {
    let n = clip.len();
    let data_bytes = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_bytes.to_le_bytes());
    let hi = 1.0 - 2f64.powi(-15);
    for &s in clip.samples() {
        let v = (s.as_f64().clamp(-1.0, hi) * 32768.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn save_wav<S: Scalar>(clip: &AudioClip<S>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), write_wav(clip))?;
    Ok(())
}
