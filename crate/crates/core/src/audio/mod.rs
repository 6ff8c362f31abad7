//! WAV ingestion and utterance-level speech features: trimming, zero
//! crossing rate, RMS energy, MFCCs, and the four training augmentations.

mod augment;
mod fft;
mod frames;
mod mfcc;
mod wav;

pub use augment::{augment_noise, augment_pitch, augment_shift, augment_stretch, time_stretch_ola, Augmentation};
pub use fft::{fft_in_place, power_spectrum};
pub use frames::{frame_count, frames, rms_frames, zcr_frames};
pub use mfcc::{dct_ii_matrix, hz_to_mel, mel_filterbank, mel_to_hz, mfcc_frames, MfccParams};
pub use wav::{encode_wav_pcm16, parse_wav};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_OFFSET_S: f64 = 0.6;
pub const DEFAULT_DURATION_S: f64 = 2.5;

/// Length of [`FeatureVector`]: mean ZCR, mean RMS, 13 mean MFCCs.
pub const FEATURE_LEN: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("audio samples must be finite".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}

/// Keeps `[offset, offset + duration)` seconds, zero-padding at the end.
pub fn trim(a: &AudioBuffer, offset_s: f64, duration_s: f64) -> Result<AudioBuffer> {
    if !(offset_s >= 0.0) || !(duration_s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trim offset and duration must be non-negative, got {offset_s} and {duration_s}"
        )));
    }
    let sr = f64::from(a.sample_rate);
    let start = (offset_s * sr).round() as usize;
    let len = (duration_s * sr).round() as usize;
    if start >= a.len() && len > 0 {
        warn!(
            "trim offset {offset_s}s is past the end of a {:.3}s buffer; output is silence",
            a.duration_s()
        );
    } else if start + len > a.len() {
        warn!(
            "buffer shorter than requested window; zero-padding {} samples",
            start + len - a.len()
        );
    }
    let mut out = vec![0.0; len];
    if start < a.len() {
        let avail = (a.len() - start).min(len);
        out[..avail].copy_from_slice(&a.samples[start..start + avail]);
    }
    Ok(a.with_samples(out))
}

/// Per-utterance summary features, in order: mean ZCR, mean RMS, mean MFCC₀…₁₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zcr(&self) -> f64 {
        self.0[0]
    }

    pub fn rms(&self) -> f64 {
        self.0[1]
    }

    pub fn mfcc(&self) -> &[f64] {
        &self.0[2..]
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn feature_vector(a: &AudioBuffer) -> Result<FeatureVector> {
    feature_vector_with(a, &MfccParams::default())
}

pub fn feature_vector_with(a: &AudioBuffer, params: &MfccParams) -> Result<FeatureVector> {
    let zcr = zcr_frames(a, params.n_fft, params.hop)?;
    let rms = rms_frames(a, params.n_fft, params.hop)?;
    let mfcc = mfcc_frames(a, params)?;
    let mut out = vec![mean(&zcr), mean(&rms)];
    out.extend((0..params.n_mfcc).map(|c| mfcc.iter().map(|f| f[c]).sum::<f64>() / mfcc.len() as f64));
    Ok(FeatureVector(out))
}
