//! Fixtures shared by the benchmarks.

use cdqkl_core::audio::AudioBuffer;
use cdqkl_core::harness::{apply_scaler, fit_scaler, synth_dataset, SynthKind};
use cdqkl_core::LabeledDataset;

/// Scaled XOR data with `m` rows.
pub fn xor_rows(m: usize) -> LabeledDataset {
    let ds = synth_dataset(SynthKind::XorBlobs, m, 0.3, 1).expect("valid synth parameters");
    apply_scaler(&fit_scaler(&ds).expect("nonempty"), &ds).expect("same width")
}

/// A 2.5 s two-tone clip at 22.05 kHz.
pub fn tone_clip() -> AudioBuffer {
    let sr = 22_050;
    let samples = (0..(sr as usize * 5 / 2))
        .map(|i| {
            let t = i as f64 / f64::from(sr);
            0.5 * (2.0 * std::f64::consts::PI * 440.0 * t).sin() + 0.2 * (2.0 * std::f64::consts::PI * 1250.0 * t).sin()
        })
        .collect();
    AudioBuffer::new(samples, sr).expect("finite samples")
}
