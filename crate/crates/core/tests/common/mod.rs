//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cdqkl_core::statevec::{zero_state, Gate, StateVector};
use cdqkl_core::{LabeledDataset, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `m` points in `[0, π]^d` with both labels present.
pub fn random_dataset(r: &mut impl Rng, m: usize, d: usize) -> LabeledDataset {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| r.random_range(0.0..std::f64::consts::PI)).collect())
        .collect();
    let mut labels: Vec<i8> = (0..m).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
    labels[0] = 1;
    if m > 1 {
        labels[1] = -1;
    }
    LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
}

/// A state reached from |0…0⟩ by a random rotation layer and a CNOT ladder.
pub fn random_state(r: &mut impl Rng, n: usize) -> StateVector {
    let mut s = zero_state(n).unwrap();
    for _ in 0..2 {
        for q in 0..n {
            s.apply(&Gate::Ry(q, r.random_range(-3.0..3.0))).unwrap();
            s.apply(&Gate::Rz(q, r.random_range(-3.0..3.0))).unwrap();
        }
        for q in 1..n {
            s.apply(&Gate::Cnot(q - 1, q)).unwrap();
        }
    }
    s
}

pub type CMat = Vec<Vec<Complex64>>;

/// Full `2^n × 2^n` matrix of `g` acting on an `n`-qubit register
/// (little-endian: qubit q is bit q of the basis index).
pub fn embed(g: &Gate, n: usize) -> CMat {
    let dim = 1usize << n;
    let local = g.matrix();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        match g.qubits() {
            (q, None) => {
                let b = (col >> q) & 1;
                for r in 0..2 {
                    out[(col & !(1 << q)) | (r << q)][col] += local[r][b];
                }
            }
            (a, Some(bq)) => {
                let c_local = (((col >> a) & 1) << 1) | ((col >> bq) & 1);
                for r_local in 0..4 {
                    let row = (col & !(1 << a) & !(1 << bq)) | (((r_local >> 1) & 1) << a) | ((r_local & 1) << bq);
                    out[row][col] += local[r_local][c_local];
                }
            }
        }
    }
    out
}

pub fn cmatmul(a: &CMat, b: &CMat) -> CMat {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn cmatvec(a: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn identity(n: usize) -> CMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Complex64::new(f64::from(u8::from(i == j)), 0.0))
                .collect()
        })
        .collect()
}

/// max |(U†U − I)_ij|.
pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s: Complex64 = (0..n).map(|k| u[k][i].conj() * u[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

/// Gaussian elimination with partial pivoting; `None` when (near-)singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-11 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn dual_value(k: &Matrix, y: &[f64], alpha: &[f64]) -> f64 {
    let m = y.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Exact maximum of the soft-margin SVM dual by enumerating every
/// assignment of each α_i to {0, C, free} and solving the equality-
/// constrained stationarity system on the free set.
pub fn svm_dual_oracle(k: &Matrix, y: &[f64], c: f64) -> (f64, Vec<f64>) {
    let m = y.len();
    let mut best = (f64::NEG_INFINITY, vec![0.0; m]);
    for code in 0..3usize.pow(m as u32) {
        let mut state = vec![0u8; m];
        let mut t = code;
        for s in state.iter_mut() {
            *s = (t % 3) as u8;
            t /= 3;
        }
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let fixed_balance: f64 = (0..m).filter(|&i| state[i] != 2).map(|i| y[i] * alpha[i]).sum();
        if free.is_empty() {
            if fixed_balance.abs() > 1e-12 {
                continue;
            }
        } else {
            let nf = free.len();
            let mut a = vec![vec![0.0; nf + 1]; nf + 1];
            let mut rhs = vec![0.0; nf + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = y[i] * y[j] * k[(i, j)];
                }
                a[r][nf] = y[i];
                a[nf][r] = y[i];
                let fixed: f64 = (0..m)
                    .filter(|&j| state[j] != 2)
                    .map(|j| y[i] * y[j] * k[(i, j)] * alpha[j])
                    .sum();
                rhs[r] = 1.0 - fixed;
            }
            rhs[nf] = -fixed_balance;
            let Some(sol) = solve_dense(a, rhs) else { continue };
            if sol[..nf].iter().any(|&v| !(-1e-9..=c + 1e-9).contains(&v)) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        let v = dual_value(k, y, &alpha);
        if v > best.0 {
            best = (v, alpha);
        }
    }
    best
}

/// |DFT|² by direct summation, bins 0..=n/2.
pub fn naive_power(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let s: Complex64 = frame
                .iter()
                .enumerate()
                .map(|(t, &x)| x * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64))
                .sum();
            s.norm_sqr()
        })
        .collect()
}

/// Canonical 16-bit mono RIFF file built byte by byte.
pub fn wav_bytes(samples: &[i16], sample_rate: u32, channels: u16) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut b = Vec::new();
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data_len).to_le_bytes());
    b.extend_from_slice(b"WAVE");
    b.extend_from_slice(b"fmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&channels.to_le_bytes());
    b.extend_from_slice(&sample_rate.to_le_bytes());
    b.extend_from_slice(&(sample_rate * 2 * u32::from(channels)).to_le_bytes());
    b.extend_from_slice(&(2 * channels).to_le_bytes());
    b.extend_from_slice(&16u16.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        b.extend_from_slice(&s.to_le_bytes());
    }
    b
}
