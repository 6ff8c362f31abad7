use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::AudioBuffer;
use crate::error::{Error, Result};

/// Training-set augmentations, each producing one extra copy of an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Augmentation {
    Noise { factor: f64 },
    Stretch { rate: f64 },
    Shift { max_frac: f64 },
    Pitch { semitones: f64 },
}

impl Augmentation {
    /// The four techniques with their usual constants.
    pub fn standard_set() -> [Augmentation; 4] {
        [
            Augmentation::Noise { factor: 0.035 },
            Augmentation::Stretch { rate: 0.8 },
            Augmentation::Shift { max_frac: 0.25 },
            Augmentation::Pitch { semitones: 0.7 },
        ]
    }

    pub fn apply<R: Rng>(&self, a: &AudioBuffer, rng: &mut R) -> Result<AudioBuffer> {
        match *self {
            Augmentation::Noise { factor } => Ok(augment_noise(a, factor, rng).0),
            Augmentation::Stretch { rate } => augment_stretch(a, rate),
            Augmentation::Shift { max_frac } => Ok(augment_shift(a, max_frac, rng)),
            Augmentation::Pitch { semitones } => augment_pitch(a, semitones),
        }
    }
}

/// Adds white Gaussian noise of standard deviation `factor · u · max|s|`,
/// `u ~ U(0, 1)`. Returns the noisy buffer and the drawn amplitude.
pub fn augment_noise<R: Rng>(a: &AudioBuffer, factor: f64, rng: &mut R) -> (AudioBuffer, f64) {
    let peak = a.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    let u: f64 = rng.random();
    let amplitude = factor * u * peak;
    let samples = a
        .samples
        .iter()
        .map(|&s| {
            let n: f64 = rng.sample(StandardNormal);
            s + amplitude * n
        })
        .collect();
    (a.with_samples(samples), amplitude)
}

/// Linear-interpolation resampling of `samples` to `out_len` points, reading
/// the source at positions `i · step`.
fn resample_linear(samples: &[f64], out_len: usize, step: f64) -> Vec<f64> {
    if samples.is_empty() {
        return vec![0.0; out_len];
    }
    let last = samples.len() - 1;
    (0..out_len)
        .map(|i| {
            let pos = (i as f64 * step).min(last as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(last);
            let frac = pos - lo as f64;
            samples[lo] * (1.0 - frac) + samples[hi] * frac
        })
        .collect()
}

/// Resamples to `round(len / rate)` samples; `rate < 1` lengthens.
pub fn augment_stretch(a: &AudioBuffer, rate: f64) -> Result<AudioBuffer> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "stretch rate must be positive, got {rate}"
        )));
    }
    let out_len = (a.len() as f64 / rate).round() as usize;
    Ok(a.with_samples(resample_linear(&a.samples, out_len, rate)))
}

/// Moves samples by a uniform integer offset in `±max_frac · sample_rate`,
/// zero-filling the vacated region. Positive offsets delay the signal.
pub fn augment_shift<R: Rng>(a: &AudioBuffer, max_frac: f64, rng: &mut R) -> AudioBuffer {
    let max = (max_frac.abs() * f64::from(a.sample_rate)).round() as i64;
    let shift = rng.random_range(-max..=max);
    let n = a.len() as i64;
    let samples = (0..n)
        .map(|i| {
            let src = i - shift;
            if (0..n).contains(&src) {
                a.samples[src as usize]
            } else {
                0.0
            }
        })
        .collect();
    a.with_samples(samples)
}

/// Windowed overlap-add time stretch to exactly `target_len` samples. Keeps
/// local waveform shape (and so pitch) while changing duration.
pub fn time_stretch_ola(samples: &[f64], target_len: usize) -> Vec<f64> {
    const FRAME: usize = 1024;
    const HOP: usize = 256;
    if samples.is_empty() || target_len == 0 {
        return vec![0.0; target_len];
    }
    let ratio = samples.len() as f64 / target_len as f64;
    let window: Vec<f64> = (0..FRAME)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / FRAME as f64).cos())
        .collect();
    let mut out = vec![0.0; target_len];
    let mut norm = vec![0.0; target_len];
    let half = (FRAME / 2) as i64;
    let mut out_start = -half;
    while out_start < target_len as i64 {
        let in_start = ((out_start + half) as f64 * ratio).round() as i64 - half;
        for (k, &w) in window.iter().enumerate() {
            let o = out_start + k as i64;
            if o < 0 || o >= target_len as i64 {
                continue;
            }
            let i = in_start + k as i64;
            let s = if i >= 0 && (i as usize) < samples.len() {
                samples[i as usize]
            } else {
                0.0
            };
            out[o as usize] += w * s;
            norm[o as usize] += w;
        }
        out_start += HOP as i64;
    }
    out.iter()
        .zip(&norm)
        .map(|(v, n)| if *n > 1e-9 { v / n } else { 0.0 })
        .collect()
}

/// Shifts pitch by resampling with factor `2^(semitones/12)` and then
/// time-stretching back to the original length.
pub fn augment_pitch(a: &AudioBuffer, semitones: f64) -> Result<AudioBuffer> {
    if !(semitones.abs() < 12.0) {
        return Err(Error::InvalidParameter(format!(
            "pitch shift must be under an octave, got {semitones}"
        )));
    }
    let factor = 2f64.powf(semitones / 12.0);
    let resampled = augment_stretch(a, factor)?;
    Ok(a.with_samples(time_stretch_ola(&resampled.samples, a.len())))
}
