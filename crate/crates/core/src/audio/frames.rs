use super::AudioBuffer;
use crate::error::{Error, Result};

/// `floor((len − frame) / hop) + 1`, or one padded frame when `len < frame`.
pub fn frame_count(len: usize, frame: usize, hop: usize) -> usize {
    if len < frame {
        1
    } else {
        (len - frame) / hop + 1
    }
}

fn check_framing(frame: usize, hop: usize) -> Result<()> {
    if frame < 2 || hop == 0 {
        return Err(Error::InvalidParameter(format!(
            "framing needs frame > 1 and hop >= 1, got frame={frame} hop={hop}"
        )));
    }
    Ok(())
}

/// Fixed-length frames, the last zero-padded only when the whole signal is
/// shorter than one frame.
pub fn frames(samples: &[f64], frame: usize, hop: usize) -> Result<Vec<Vec<f64>>> {
    check_framing(frame, hop)?;
    let n = frame_count(samples.len(), frame, hop);
    Ok((0..n)
        .map(|f| {
            let start = f * hop;
            let mut out = vec![0.0; frame];
            let end = (start + frame).min(samples.len());
            if start < end {
                out[..end - start].copy_from_slice(&samples[start..end]);
            }
            out
        })
        .collect())
}

fn is_non_negative(s: f64) -> bool {
    s >= 0.0
}

/// Fraction of adjacent sample pairs whose signs differ; zero counts as positive.
pub fn zcr_frames(a: &AudioBuffer, frame: usize, hop: usize) -> Result<Vec<f64>> {
    Ok(frames(&a.samples, frame, hop)?
        .iter()
        .map(|f| {
            let crossings = f
                .windows(2)
                .filter(|w| is_non_negative(w[0]) != is_non_negative(w[1]))
                .count();
            crossings as f64 / (frame - 1) as f64
        })
        .collect())
}

pub fn rms_frames(a: &AudioBuffer, frame: usize, hop: usize) -> Result<Vec<f64>> {
    Ok(frames(&a.samples, frame, hop)?
        .iter()
        .map(|f| (f.iter().map(|s| s * s).sum::<f64>() / frame as f64).sqrt())
        .collect())
}
