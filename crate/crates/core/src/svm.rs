//! Binary soft-margin SVM trained in the dual on a precomputed kernel, plus
//! the classical linear and Gaussian kernels.
//!
//! The solver is SMO with maximal-violating-pair working-set selection. It
//! minimizes `½ αᵀQα − Σα` with `Q_ij = y_i y_j K_ij`, `0 ≤ α ≤ C` and
//! `Σ α_i y_i = 0`; the gradient `G = Qα − 1` is maintained incrementally.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};

const TAU: f64 = 1e-12;
/// Floor on the pair-update cap; degenerate low-rank kernels at large C
/// need many cheap updates even for a handful of points.
const MIN_ITER_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    /// Iteration cap, in units of `M` pair updates (never below 100 000).
    pub max_passes: usize,
    /// Run an eigenvalue check on the kernel and warn if it is indefinite.
    pub check_psd: bool,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 200,
            check_psd: true,
        }
    }
}

impl SmoParams {
    pub fn with_c(c: f64) -> Self {
        Self { c, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub labels: Vec<f64>,
    pub c: f64,
    pub iterations: usize,
}

impl SvmModel {
    pub fn support_indices(&self) -> Vec<usize> {
        self.alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn dual_objective(&self, k: &Matrix) -> f64 {
        dual_objective(k, &self.labels, &self.alphas)
    }
}

/// `Σα − ½ Σ α_i α_j y_i y_j K_ij`.
pub fn dual_objective(k: &Matrix, y: &[f64], alpha: &[f64]) -> f64 {
    let m = alpha.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn linear_kernel(x: &Matrix) -> Matrix {
    linear_cross(x, x)
}

pub fn gaussian_kernel(x: &Matrix, gamma: f64) -> Matrix {
    gaussian_cross(x, x, gamma)
}

/// Rows are `x_eval`, columns `x_train`.
pub fn linear_cross(x_train: &Matrix, x_eval: &Matrix) -> Matrix {
    Matrix::from_fn(x_eval.rows(), x_train.rows(), |i, j| {
        x_eval.row(i).iter().zip(x_train.row(j)).map(|(a, b)| a * b).sum()
    })
}

pub fn gaussian_cross(x_train: &Matrix, x_eval: &Matrix, gamma: f64) -> Matrix {
    Matrix::from_fn(x_eval.rows(), x_train.rows(), |i, j| {
        let d2: f64 = x_eval
            .row(i)
            .iter()
            .zip(x_train.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (-gamma * d2).exp()
    })
}

fn validate_labels(y: &[f64]) -> Result<()> {
    match y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        Some(bad) => Err(Error::InvalidLabel(bad.to_string())),
        None => Ok(()),
    }
}

pub fn smo_train(k: &Matrix, y: &[f64], params: &SmoParams) -> Result<SvmModel> {
    let m = y.len();
    if m == 0 {
        return Err(Error::EmptyInput("SVM training set"));
    }
    check_dim("kernel rows", m, k.rows())?;
    check_dim("kernel cols", m, k.cols())?;
    validate_labels(y)?;
    if !(params.c > 0.0) || !(params.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SMO needs C > 0 and tol > 0, got C={} tol={}",
            params.c, params.tol
        )));
    }
    if params.check_psd {
        let asym = k.max_asymmetry();
        let min_eig = symmetric_eigenvalues(k)[0];
        if asym > 1e-10 || min_eig < -1e-9 {
            warn!(
                "kernel is not PSD within tolerance (asymmetry {asym:.3e}, min eigenvalue {min_eig:.3e}); proceeding"
            );
        }
    }

    let c = params.c;
    if y.iter().all(|&v| v == y[0]) {
        return Ok(SvmModel {
            alphas: vec![0.0; m],
            bias: y[0],
            labels: y.to_vec(),
            c,
            iterations: 0,
        });
    }

    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let max_iter = params.max_passes.saturating_mul(m).max(MIN_ITER_CAP);
    let mut iterations = 0;
    loop {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..m {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.tol {
            break;
        }
        if iterations >= max_iter {
            warn!(
                "SMO hit the iteration cap ({max_iter}) with violation {:.3e}",
                gmax - gmin
            );
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    Ok(SvmModel {
        bias: bias_from_gradient(&alpha, &grad, y, c),
        alphas: alpha,
        labels: y.to_vec(),
        c,
        iterations,
    })
}

/// Average over free vectors, or the midpoint of the interval the bounded
/// vectors allow when none are free.
fn bias_from_gradient(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        0.5 * (ub + lb)
    };
    -rho
}

/// Scores `Σ_j α_j y_j K(x, x_j) + b` for every row of `k_cross`.
pub fn decision(model: &SvmModel, k_cross: &Matrix) -> Result<Vec<f64>> {
    check_dim("cross-kernel columns", model.alphas.len(), k_cross.cols())?;
    Ok(k_cross
        .iter_rows()
        .map(|row| {
            row.iter()
                .zip(model.alphas.iter().zip(&model.labels))
                .map(|(kv, (a, yv))| a * yv * kv)
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

/// Sign of each score, with ties going to +1.
pub fn predict(model: &SvmModel, k_cross: &Matrix) -> Result<Vec<i8>> {
    Ok(decision(model, k_cross)?
        .into_iter()
        .map(|s| if s >= 0.0 { 1 } else { -1 })
        .collect())
}

pub fn accuracy(predictions: &[i8], labels: &[i8]) -> Result<f64> {
    check_dim("accuracy inputs", labels.len(), predictions.len())?;
    if labels.is_empty() {
        return Err(Error::EmptyInput("accuracy of an empty prediction set"));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Largest KKT violation of a trained model on its own training kernel.
pub fn kkt_violation(model: &SvmModel, k: &Matrix) -> Result<f64> {
    let scores = decision(model, k)?;
    let c = model.c;
    Ok(scores
        .iter()
        .zip(model.alphas.iter().zip(&model.labels))
        .map(|(f, (&a, &yv))| {
            let margin = yv * f;
            if a <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if a >= c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            }
        })
        .fold(0.0, f64::max))
}
