//! Exact dense statevector simulation over a small fixed gate set.
//!
//! Qubit `q` is bit `q` of the basis-state index (little-endian), so
//! amplitude `k` belongs to the computational basis state whose `q`-th bit
//! is `(k >> q) & 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{check_dim, Error, Result};

/// Largest register this simulator will allocate.
pub const MAX_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    /// `exp(-i φ/2 Z⊗Z)` on the two qubits.
    Rzz(usize, usize, f64),
    /// Control, target.
    Cnot(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => (q, None),
            Gate::Rzz(a, b, _) | Gate::Cnot(a, b) => (a, Some(b)),
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) | Gate::Rzz(_, _, a) => Some(a),
            Gate::H(_) | Gate::Cnot(..) => None,
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(q),
            Gate::Rx(q, a) => Gate::Rx(q, -a),
            Gate::Ry(q, a) => Gate::Ry(q, -a),
            Gate::Rz(q, a) => Gate::Rz(q, -a),
            Gate::Rzz(p, q, a) => Gate::Rzz(p, q, -a),
            Gate::Cnot(c, t) => Gate::Cnot(c, t),
        }
    }

    /// Dense matrix of the gate in the basis |b_first b_second⟩ where the
    /// first listed qubit is the high bit (index = 2·b_first + b_second for
    /// two-qubit gates).
    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *self {
            Gate::H(_) => vec![
                vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
                vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
            ],
            Gate::Rx(_, a) => {
                let (s, co) = (a / 2.0).sin_cos();
                vec![vec![c(co, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(co, 0.0)]]
            }
            Gate::Ry(_, a) => {
                let (s, co) = (a / 2.0).sin_cos();
                vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
            }
            Gate::Rz(_, a) => vec![
                vec![Complex64::from_polar(1.0, -a / 2.0), ZERO],
                vec![ZERO, Complex64::from_polar(1.0, a / 2.0)],
            ],
            Gate::Rzz(_, _, a) => {
                let m = Complex64::from_polar(1.0, -a / 2.0);
                let p = Complex64::from_polar(1.0, a / 2.0);
                let d = [m, p, p, m];
                (0..4)
                    .map(|i| (0..4).map(|j| if i == j { d[i] } else { ZERO }).collect())
                    .collect()
            }
            Gate::Cnot(..) => {
                let perm = [0, 1, 3, 2];
                (0..4)
                    .map(|i| (0..4).map(|j| if perm[i] == j { ONE } else { ZERO }).collect())
                    .collect()
            }
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let (a, b) = self.qubits();
        for q in std::iter::once(a).chain(b) {
            if q >= n_qubits {
                return Err(Error::QubitIndex { index: q, n_qubits });
            }
        }
        if b == Some(a) {
            return Err(Error::DuplicateQubit(a));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// |0…0⟩ on `n_qubits` qubits.
pub fn zero_state(n_qubits: usize) -> Result<StateVector> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::Capacity {
            requested: n_qubits,
            max: MAX_QUBITS,
        });
    }
    let mut amplitudes = vec![ZERO; 1 << n_qubits];
    amplitudes[0] = ONE;
    Ok(StateVector { n_qubits, amplitudes })
}

pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    check_dim("inner product qubit count", a.n_qubits, b.n_qubits)?;
    Ok(a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum())
}

/// Probability of reading out |0…0⟩.
pub fn prob_zero(state: &StateVector) -> f64 {
    state.amplitudes[0].norm_sqr()
}

impl StateVector {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Applies a gate in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::H(q) => {
                let h = FRAC_1_SQRT_2;
                self.for_each_pair(q, |a0, a1| {
                    let (x, y) = (*a0, *a1);
                    *a0 = (x + y) * h;
                    *a1 = (x - y) * h;
                });
            }
            Gate::Rx(q, angle) => {
                let (s, c) = (angle / 2.0).sin_cos();
                let mis = Complex64::new(0.0, -s);
                self.for_each_pair(q, |a0, a1| {
                    let (x, y) = (*a0, *a1);
                    *a0 = x * c + y * mis;
                    *a1 = x * mis + y * c;
                });
            }
            Gate::Ry(q, angle) => {
                let (s, c) = (angle / 2.0).sin_cos();
                self.for_each_pair(q, |a0, a1| {
                    let (x, y) = (*a0, *a1);
                    *a0 = x * c - y * s;
                    *a1 = x * s + y * c;
                });
            }
            Gate::Rz(q, angle) => {
                let lo = Complex64::from_polar(1.0, -angle / 2.0);
                let hi = Complex64::from_polar(1.0, angle / 2.0);
                let mask = 1usize << q;
                for (k, amp) in self.amplitudes.iter_mut().enumerate() {
                    *amp *= if k & mask == 0 { lo } else { hi };
                }
            }
            Gate::Rzz(a, b, angle) => {
                let same = Complex64::from_polar(1.0, -angle / 2.0);
                let diff = Complex64::from_polar(1.0, angle / 2.0);
                for (k, amp) in self.amplitudes.iter_mut().enumerate() {
                    let parity = ((k >> a) ^ (k >> b)) & 1;
                    *amp *= if parity == 0 { same } else { diff };
                }
            }
            Gate::Cnot(control, target) => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for k in 0..self.amplitudes.len() {
                    if k & cm != 0 && k & tm == 0 {
                        self.amplitudes.swap(k, k | tm);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.apply(g))
    }

    /// Visits every amplitude pair differing only in bit `q`, low index first.
    fn for_each_pair(&mut self, q: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let stride = 1usize << q;
        for block in self.amplitudes.chunks_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                f(a0, a1);
            }
        }
    }
}
