//! RIFF/WAVE reader for 16-bit PCM, mono or stereo.

use super::AudioBuffer;
use crate::error::{Error, Result};

fn err(chunk: &str, message: impl Into<String>) -> Error {
    Error::WavParse {
        chunk: chunk.to_string(),
        message: message.into(),
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    channels: u16,
    sample_rate: u32,
}

pub fn parse_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 {
        return Err(err("RIFF", "file shorter than the 12-byte RIFF header"));
    }
    match &bytes[0..4] {
        b"RIFF" => {}
        b"RIFX" => return Err(err("RIFF", "big-endian RIFX files are not supported")),
        other => return Err(err("RIFF", format!("bad magic {:?}", String::from_utf8_lossy(other)))),
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(err("RIFF", "form type is not WAVE"));
    }

    let mut format: Option<Format> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = String::from_utf8_lossy(&bytes[pos..pos + 4]).into_owned();
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body.checked_add(size).filter(|&e| e <= bytes.len());
        match id.as_str() {
            "fmt " => {
                let end = end.ok_or_else(|| err("fmt ", "chunk truncated"))?;
                if size < 16 {
                    return Err(err("fmt ", format!("chunk is {size} bytes, need at least 16")));
                }
                let tag = u16_at(bytes, body);
                if tag != 1 {
                    return Err(err("fmt ", format!("format tag {tag} is not integer PCM")));
                }
                let channels = u16_at(bytes, body + 2);
                if channels != 1 && channels != 2 {
                    return Err(err(
                        "fmt ",
                        format!("{channels} channels; only mono and stereo are supported"),
                    ));
                }
                let sample_rate = u32_at(bytes, body + 4);
                if sample_rate == 0 {
                    return Err(err("fmt ", "sample rate is zero"));
                }
                let bits = u16_at(bytes, body + 14);
                if bits != 16 {
                    return Err(err("fmt ", format!("{bits}-bit samples; only 16-bit PCM is supported")));
                }
                format = Some(Format { channels, sample_rate });
                pos = end + (size & 1);
            }
            "data" => {
                let fmt = format
                    .as_ref()
                    .ok_or_else(|| err("data", "data chunk before fmt chunk"))?;
                let end = end.ok_or_else(|| {
                    err(
                        "data",
                        format!("declares {size} bytes but only {} remain", bytes.len() - body),
                    )
                })?;
                let frame_bytes = 2 * fmt.channels as usize;
                if !size.is_multiple_of(frame_bytes) {
                    return Err(err(
                        "data",
                        format!("{size} bytes is not a whole number of {frame_bytes}-byte frames"),
                    ));
                }
                let samples = bytes[body..end]
                    .chunks_exact(frame_bytes)
                    .map(|fr| {
                        let sum: f64 = fr
                            .chunks_exact(2)
                            .map(|s| f64::from(i16::from_le_bytes([s[0], s[1]])) / 32768.0)
                            .sum();
                        sum / f64::from(fmt.channels)
                    })
                    .collect();
                return AudioBuffer::new(samples, fmt.sample_rate);
            }
            _ => {
                let end = end.ok_or_else(|| err(&id, "chunk truncated"))?;
                pos = end + (size & 1);
            }
        }
    }
    Err(err("data", "no data chunk found"))
}

/// Mono 16-bit PCM WAV bytes; samples are clamped to [−1, 1].
pub fn encode_wav_pcm16(a: &AudioBuffer) -> Vec<u8> {
    let data_len = (a.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&a.sample_rate.to_le_bytes());
    out.extend_from_slice(&(a.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &a.samples {
        let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
