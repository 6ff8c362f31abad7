use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::fft::power_spectrum;
use super::frames::frames;
use super::AudioBuffer;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MfccParams {
    pub n_mfcc: usize,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
}

impl Default for MfccParams {
    fn default() -> Self {
        Self {
            n_mfcc: 13,
            n_fft: 2048,
            hop: 512,
            n_mels: 26,
        }
    }
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters, `n_mels × (n_fft/2 + 1)`, equally spaced on the mel
/// scale from 0 Hz to Nyquist. Returns the filters and their center
/// frequencies in Hz.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32) -> (Matrix, Vec<f64>) {
    let sr = f64::from(sample_rate);
    let top = hz_to_mel(sr / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    let bank = Matrix::from_fn(n_mels, n_bins, |m, k| {
        let f = k as f64 * sr / n_fft as f64;
        let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let rise = (f - lo) / (c - lo);
        let fall = (hi - f) / (hi - c);
        rise.min(fall).max(0.0)
    });
    (bank, edges[1..=n_mels].to_vec())
}

/// Orthonormal DCT-II; row `k` is the `k`-th basis vector.
pub fn dct_ii_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |k, i| {
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
    })
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Log mel energies per frame (before the DCT).
pub(crate) fn log_mel_frames(a: &AudioBuffer, p: &MfccParams) -> Result<Vec<Vec<f64>>> {
    if !p.n_fft.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "n_fft {} is not a power of two",
            p.n_fft
        )));
    }
    if p.n_mels == 0 || p.n_mfcc > p.n_mels {
        return Err(Error::InvalidParameter(format!(
            "need 0 < n_mfcc <= n_mels, got n_mfcc={} n_mels={}",
            p.n_mfcc, p.n_mels
        )));
    }
    let window = hann(p.n_fft);
    let (bank, _) = mel_filterbank(p.n_mels, p.n_fft, a.sample_rate);
    frames(&a.samples, p.n_fft, p.hop)?
        .into_iter()
        .map(|f| {
            let windowed: Vec<f64> = f.iter().zip(&window).map(|(s, w)| s * w).collect();
            let power = power_spectrum(&windowed)?;
            Ok(bank
                .iter_rows()
                .map(|filter| {
                    let e: f64 = filter.iter().zip(&power).map(|(w, pw)| w * pw).sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect())
        })
        .collect()
}

pub fn mfcc_frames(a: &AudioBuffer, p: &MfccParams) -> Result<Vec<Vec<f64>>> {
    let dct = dct_ii_matrix(p.n_mels);
    Ok(log_mel_frames(a, p)?
        .iter()
        .map(|logmel| {
            (0..p.n_mfcc)
                .map(|k| dct.row(k).iter().zip(logmel).map(|(c, v)| c * v).sum())
                .collect()
        })
        .collect())
}
