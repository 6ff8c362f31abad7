//! Trainable fidelity kernels and kernel–target alignment.
//!
//! One layer of the feature map applies, in order:
//! 1. `H` on every qubit;
//! 2. `RZ(x_j)` on qubit `j mod n` for each feature `j`;
//! 3. `RZZ((π − x̄_a)(π − x̄_b))` for each entangling pair, where `x̄_q` is the
//!    sum of the features assigned to qubit `q`;
//! 4. `RY(θ[layer, q])` on every qubit;
//! 5. `CNOT(a → b)` for each entangling pair, in list order.
//!
//! The last layer's trainable block acts identically on both states of an
//! overlap, so the kernel does not depend on its angles.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::rng;
use crate::statevec::{inner_product, prob_zero, zero_state, Gate, StateVector, MAX_QUBITS};

/// Default finite-difference step for [`grad_fd`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    n_qubits: usize,
    n_layers: usize,
    feature_dim: usize,
    entangle_pairs: Vec<(usize, usize)>,
}

impl AnsatzSpec {
    /// Ansatz with the default linear chain of entangling pairs.
    pub fn new(n_qubits: usize, n_layers: usize, feature_dim: usize) -> Result<Self> {
        let pairs = (1..n_qubits).map(|q| (q - 1, q)).collect();
        Self::with_pairs(n_qubits, n_layers, feature_dim, pairs)
    }

    pub fn with_pairs(
        n_qubits: usize,
        n_layers: usize,
        feature_dim: usize,
        entangle_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Capacity {
                requested: n_qubits,
                max: MAX_QUBITS,
            });
        }
        if n_layers == 0 {
            return Err(Error::InvalidParameter("n_layers must be at least 1".into()));
        }
        if feature_dim == 0 {
            return Err(Error::InvalidParameter("feature_dim must be at least 1".into()));
        }
        for &(a, b) in &entangle_pairs {
            for q in [a, b] {
                if q >= n_qubits {
                    return Err(Error::QubitIndex { index: q, n_qubits });
                }
            }
            if a == b {
                return Err(Error::DuplicateQubit(a));
            }
        }
        Ok(Self {
            n_qubits,
            n_layers,
            feature_dim,
            entangle_pairs,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn entangle_pairs(&self) -> &[(usize, usize)] {
        &self.entangle_pairs
    }

    pub fn n_params(&self) -> usize {
        self.n_layers * self.n_qubits
    }

    pub fn qubit_of_feature(&self, j: usize) -> usize {
        j % self.n_qubits
    }

    /// Gate sequence of `U(x; θ)`.
    pub fn circuit(&self, x: &[f64], theta: &ThetaVector) -> Result<Vec<Gate>> {
        check_dim("feature vector", self.feature_dim, x.len())?;
        check_dim("theta vector", self.n_params(), theta.len())?;
        let n = self.n_qubits;

        let mut qubit_sum = vec![0.0; n];
        for (j, &v) in x.iter().enumerate() {
            qubit_sum[self.qubit_of_feature(j)] += v;
        }

        let mut gates = Vec::with_capacity(self.n_layers * (3 * n + x.len() + 2 * self.entangle_pairs.len()));
        for layer in 0..self.n_layers {
            gates.extend((0..n).map(Gate::H));
            gates.extend(
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| Gate::Rz(self.qubit_of_feature(j), v)),
            );
            gates.extend(
                self.entangle_pairs
                    .iter()
                    .map(|&(a, b)| Gate::Rzz(a, b, (PI - qubit_sum[a]) * (PI - qubit_sum[b]))),
            );
            gates.extend((0..n).map(|q| Gate::Ry(q, theta.get(self, layer, q))));
            gates.extend(self.entangle_pairs.iter().map(|&(a, b)| Gate::Cnot(a, b)));
        }
        Ok(gates)
    }
}

/// Trainable angles, row-major over (layer, qubit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThetaVector(pub Vec<f64>);

impl ThetaVector {
    pub fn zeros(spec: &AnsatzSpec) -> Self {
        Self(vec![0.0; spec.n_params()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, spec: &AnsatzSpec, layer: usize, qubit: usize) -> f64 {
        self.0[layer * spec.n_qubits + qubit]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    fn shifted(&self, p: usize, delta: f64) -> Self {
        let mut t = self.clone();
        t.0[p] += delta;
        t
    }
}

/// Symmetric Gram matrix of a fidelity kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KernelMatrix(pub Matrix);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    pub max_asymmetry: f64,
    pub max_diagonal_deviation: f64,
    pub min_eigenvalue: f64,
}

impl KernelDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.max_asymmetry <= 1e-10 && self.max_diagonal_deviation <= 1e-10 && self.min_eigenvalue >= -1e-9
    }
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn diagnostics(&self) -> KernelDiagnostics {
        let m = &self.0;
        KernelDiagnostics {
            max_asymmetry: m.max_asymmetry(),
            max_diagonal_deviation: (0..m.rows()).map(|i| (m[(i, i)] - 1.0).abs()).fold(0.0, f64::max),
            min_eigenvalue: symmetric_eigenvalues(m).first().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<i8>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<i8>) -> Result<Self> {
        check_dim("dataset labels", features.rows(), labels.len())?;
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::InvalidLabel(bad.to_string()));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Row-wise concatenation.
    pub fn concat(parts: &[&LabeledDataset]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyInput("no datasets to concatenate"))?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            check_dim("concatenated feature width", first.dim(), p.dim())?;
            rows.extend(p.features.to_rows());
            labels.extend_from_slice(&p.labels);
        }
        let features = if rows.is_empty() {
            Matrix::zeros(0, first.dim())
        } else {
            Matrix::from_rows(&rows).expect("widths checked")
        };
        Self::new(features, labels)
    }
}

/// `U(x; θ)|0…0⟩`.
pub fn encode(spec: &AnsatzSpec, x: &[f64], theta: &ThetaVector) -> Result<StateVector> {
    let mut state = zero_state(spec.n_qubits)?;
    state.apply_all(&spec.circuit(x, theta)?)?;
    Ok(state)
}

fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    inner_product(a, b).expect("states share a spec").norm_sqr()
}

/// `|⟨ψ(x_i)|ψ(x_j)⟩|²` from two prepared states.
pub fn kernel_entry(spec: &AnsatzSpec, xi: &[f64], xj: &[f64], theta: &ThetaVector) -> Result<f64> {
    Ok(fidelity(&encode(spec, xi, theta)?, &encode(spec, xj, theta)?))
}

/// `|⟨0|U†(x_i) U(x_j)|0⟩|²` from a single compute-uncompute circuit.
pub fn kernel_entry_inverted(spec: &AnsatzSpec, xi: &[f64], xj: &[f64], theta: &ThetaVector) -> Result<f64> {
    let forward = spec.circuit(xj, theta)?;
    let uncompute: Vec<Gate> = spec.circuit(xi, theta)?.iter().rev().map(Gate::inverse).collect();
    let mut state = zero_state(spec.n_qubits)?;
    state.apply_all(forward.iter().chain(&uncompute))?;
    Ok(prob_zero(&state))
}

fn encode_rows(spec: &AnsatzSpec, x: &Matrix, theta: &ThetaVector) -> Result<Vec<StateVector>> {
    check_dim("feature width", spec.feature_dim, x.cols())?;
    x.iter_rows().map(|row| encode(spec, row, theta)).collect()
}

fn gram(states: &[StateVector]) -> KernelMatrix {
    let m = states.len();
    let mut k = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = fidelity(&states[i], &states[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    KernelMatrix(k)
}

pub fn kernel_matrix(spec: &AnsatzSpec, x: &Matrix, theta: &ThetaVector) -> Result<KernelMatrix> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput("kernel matrix needs at least one point"));
    }
    Ok(gram(&encode_rows(spec, x, theta)?))
}

/// Rows index test points, columns index training points.
pub fn cross_kernel(spec: &AnsatzSpec, x_train: &Matrix, x_test: &Matrix, theta: &ThetaVector) -> Result<Matrix> {
    let train = encode_rows(spec, x_train, theta)?;
    let test = encode_rows(spec, x_test, theta)?;
    Ok(Matrix::from_fn(test.len(), train.len(), |i, j| {
        fidelity(&test[i], &train[j])
    }))
}

/// Ideal kernel `y yᵀ`.
pub fn target_kernel(labels: &[i8]) -> Result<Matrix> {
    if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::InvalidLabel(bad.to_string()));
    }
    let m = labels.len();
    Ok(Matrix::from_fn(m, m, |i, j| f64::from(labels[i] * labels[j])))
}

/// Uncentered kernel–target alignment `⟨K, K*⟩_F / (‖K‖_F ‖K*‖_F)`.
pub fn alignment(k: &Matrix, k_star: &Matrix) -> Result<f64> {
    check_dim("alignment rows", k.rows(), k_star.rows())?;
    check_dim("alignment cols", k.cols(), k_star.cols())?;
    let (nk, ns) = (k.frobenius_norm(), k_star.frobenius_norm());
    if nk == 0.0 || ns == 0.0 {
        return Err(Error::DegenerateInput("alignment of a zero-norm matrix".into()));
    }
    Ok(k.frobenius_dot(k_star) / (nk * ns))
}

/// Negative alignment of the shard's kernel with its labels.
pub fn local_loss(spec: &AnsatzSpec, shard: &LabeledDataset, theta: &ThetaVector) -> Result<f64> {
    if shard.is_empty() {
        return Err(Error::EmptyInput("local loss needs a nonempty shard"));
    }
    let k = kernel_matrix(spec, shard.features(), theta)?;
    Ok(-alignment(k.matrix(), &target_kernel(shard.labels())?)?)
}

/// Central finite-difference gradient of [`local_loss`].
pub fn grad_fd(spec: &AnsatzSpec, shard: &LabeledDataset, theta: &ThetaVector, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    (0..theta.len())
        .map(|p| {
            let up = local_loss(spec, shard, &theta.shifted(p, h))?;
            let down = local_loss(spec, shard, &theta.shifted(p, -h))?;
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

/// Exact gradient of [`local_loss`] by the two-term shift rule.
///
/// Each angle appears twice in `U†(x_i;θ) U(x_j;θ)`: once in the ket circuit
/// and once (inverted) in the bra circuit. Shifting the ket occurrence by
/// ±π/2 is the same as preparing `ψ(x_j)` with a shifted angle, so the four
/// shifted kernels per pair are overlaps between cached shifted and unshifted
/// states.
pub fn grad_param_shift(spec: &AnsatzSpec, shard: &LabeledDataset, theta: &ThetaVector) -> Result<Vec<f64>> {
    if shard.is_empty() {
        return Err(Error::EmptyInput("gradient needs a nonempty shard"));
    }
    let x = shard.features();
    let states = encode_rows(spec, x, theta)?;
    let k = gram(&states);
    let k_star = target_kernel(shard.labels())?;

    // dA/dK_ij for the quotient A = S / (‖K‖ ‖K*‖).
    let s = k.0.frobenius_dot(&k_star);
    let nk = k.0.frobenius_norm();
    let ns = k_star.frobenius_norm();
    let m = shard.len();
    let weight = Matrix::from_fn(m, m, |i, j| {
        k_star[(i, j)] / (nk * ns) - s * k.0[(i, j)] / (nk.powi(3) * ns)
    });

    let mut grad = Vec::with_capacity(theta.len());
    for p in 0..theta.len() {
        let plus = encode_rows(spec, x, &theta.shifted(p, FRAC_PI_2))?;
        let minus = encode_rows(spec, x, &theta.shifted(p, -FRAC_PI_2))?;
        let mut d_align = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                let ket = fidelity(&states[i], &plus[j]) - fidelity(&states[i], &minus[j]);
                let bra = fidelity(&plus[i], &states[j]) - fidelity(&minus[i], &states[j]);
                // K is symmetric, so the (i, j) and (j, i) terms are equal.
                d_align += weight[(i, j)] * (ket + bra);
            }
        }
        grad.push(-d_align);
    }
    Ok(grad)
}

/// Shift-rule gradient on a seeded uniform subset of `q` points.
///
/// Sampled indices are sorted, so `q == shard.len()` reproduces the full
/// gradient bit for bit.
pub fn grad_stochastic(
    spec: &AnsatzSpec,
    shard: &LabeledDataset,
    theta: &ThetaVector,
    q: usize,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    if q == 0 || q > shard.len() {
        return Err(Error::InvalidParameter(format!(
            "minibatch size {q} outside 1..={}",
            shard.len()
        )));
    }
    let mut idx = sample(&mut rng::seeded(rng_seed), shard.len(), q).into_vec();
    idx.sort_unstable();
    grad_param_shift(spec, &shard.subset(&idx), theta)
}
