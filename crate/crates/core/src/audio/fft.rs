use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Iterative radix-2 decimation-in-time FFT, forward direction, unnormalized.
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("FFT length {n} is not a power of two")));
    }
    if n <= 1 {
        return Ok(());
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let step = Complex64::from_polar(1.0, -2.0 * PI / len as f64);
        for chunk in buf.chunks_mut(len) {
            let mut w = Complex64::new(1.0, 0.0);
            let (lo, hi) = chunk.split_at_mut(len / 2);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let t = *b * w;
                *b = *a - t;
                *a += t;
                w *= step;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// `|X_k|²` for `k = 0..=n/2` of a real frame.
pub fn power_spectrum(frame: &[f64]) -> Result<Vec<f64>> {
    let mut buf: Vec<Complex64> = frame.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf)?;
    Ok(buf[..=frame.len() / 2].iter().map(Complex64::norm_sqr).collect())
}
