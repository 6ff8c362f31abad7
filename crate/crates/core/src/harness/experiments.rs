//! Experiment runners and their reports.

use log::{info, warn};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use crate::consensus::{build_graph, initial_theta, run_cdqkl, NodeData, NodeMetrics};
use crate::error::{Error, Result};
use crate::harness::config::{DataConfig, ExperimentConfig};
use crate::harness::data::{
    apply_scaler, extract_files, fit_scaler, label_for, list_wavs, load_csv, shard_indices, split_dataset,
    split_indices, synth_dataset, FeatureScaler, ShardMode,
};
use crate::qkernel::{alignment, AnsatzSpec, KernelDiagnostics, LabeledDataset, ThetaVector};
use crate::qkernel::{cross_kernel, grad_param_shift, kernel_matrix, local_loss, target_kernel};
use crate::svm::{accuracy, gaussian_cross, gaussian_kernel, linear_cross, linear_kernel, predict, smo_train};
use crate::svm::{kkt_violation, SmoParams};
use crate::Matrix;

/// Scaled train/test splits ready for angle encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub scaler: FeatureScaler,
}

/// Loads or generates the configured data, splits it, and fits the scaler on
/// the training rows only.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let (train, test) = match &cfg.data {
        DataConfig::Synthetic { kind, m, noise, .. } => {
            let ds = synth_dataset(*kind, *m, *noise, cfg.data_seed())?;
            split_dataset(&ds, cfg.split.test_fraction, cfg.split_seed())?
        }
        DataConfig::Csv { path, test_path } => {
            let ds = load_csv(path)?;
            match test_path {
                Some(tp) => (ds, load_csv(tp)?),
                None => split_dataset(&ds, cfg.split.test_fraction, cfg.split_seed())?,
            }
        }
        DataConfig::Wav {
            dir,
            label_map,
            augment,
        } => {
            let files = list_wavs(dir)?;
            if files.is_empty() {
                return Err(Error::EmptyInput("directory contains no WAV files"));
            }
            // Split by file so augmented copies never straddle the split.
            let labelled: Vec<PathBuf> = files
                .into_iter()
                .filter(|p| {
                    let name = p
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let hit = label_for(&name, label_map).is_some();
                    if !hit {
                        warn!("no label rule matches {name}; skipping");
                    }
                    hit
                })
                .collect();
            let (tr, te) = split_indices(labelled.len(), cfg.split.test_fraction, cfg.split_seed())?;
            let pick = |idx: &[usize]| idx.iter().map(|&i| labelled[i].clone()).collect::<Vec<_>>();
            (
                extract_files(&pick(&tr), label_map, augment, cfg.augment_seed())?,
                extract_files(&pick(&te), label_map, &[], cfg.augment_seed())?,
            )
        }
    };
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            context: "train/test feature width",
            expected: train.dim(),
            found: test.dim(),
        });
    }
    let scaler = fit_scaler(&train)?;
    Ok(PreparedData {
        train: apply_scaler(&scaler, &train)?,
        test: apply_scaler(&scaler, &test)?,
        scaler,
    })
}

/// Serializes a report with its `wall_time_s` field removed. Keys come out
/// sorted, so equal reports give equal bytes.
pub fn canonical_json<T: Serialize>(report: &T) -> Result<String> {
    let mut v = serde_json::to_value(report)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("wall_time_s");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

fn fit_and_score(
    k_train: &Matrix,
    k_test: &Matrix,
    train: &LabeledDataset,
    test: &LabeledDataset,
    p: &SmoParams,
) -> Result<(f64, f64)> {
    let model = smo_train(k_train, &train.labels_f64(), p)?;
    Ok((
        accuracy(&predict(&model, k_train)?, train.labels())?,
        accuracy(&predict(&model, k_test)?, test.labels())?,
    ))
}

/// Single-node alignment gradient descent with shift-rule gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralTraining {
    pub theta: ThetaVector,
    pub loss_before: f64,
    pub loss_after: f64,
    pub iterations: usize,
}

pub fn train_central(
    spec: &AnsatzSpec,
    train: &LabeledDataset,
    start: ThetaVector,
    eta: f64,
    iterations: usize,
) -> Result<CentralTraining> {
    let loss_before = local_loss(spec, train, &start)?;
    let mut theta = start;
    for it in 0..iterations {
        let g = grad_param_shift(spec, train, &theta)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                node: 0,
                iteration: it,
                detail: "central pre-training".into(),
            });
        }
        for (t, d) in theta.0.iter_mut().zip(&g) {
            *t -= eta * d;
        }
    }
    Ok(CentralTraining {
        loss_after: local_loss(spec, train, &theta)?,
        theta,
        loss_before,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub method: String,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
    pub gamma: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub central: CentralTraining,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl Table1Report {
    pub fn row(&self, method: &str) -> Option<&Table1Row> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<26}{:>16}{:>16}", "Method", "Train Accuracy", "Test Accuracy");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<26}{:>15.2}%{:>15.2}%",
                r.method,
                100.0 * r.train_accuracy,
                100.0 * r.test_accuracy
            );
        }
        s
    }
}

pub const TABLE1_METHODS: [&str; 5] = [
    "Linear SVM",
    "Gaussian SVM (C = 1)",
    "Gaussian SVM (C = 1000)",
    "Central QSVM (C = 1)",
    "Central QSVM (C = 1000)",
];

/// Classical baselines and the centrally trained quantum kernel on one split.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Table1Report> {
    cfg.validate()?;
    let started = Instant::now();
    let data = prepare_data(cfg)?;
    let (train, test) = (&data.train, &data.test);
    let (xtr, xte) = (train.features(), test.features());
    let gamma = cfg.svm.gamma_for(train.dim());

    let mut rows = Vec::with_capacity(5);
    let mut push = |name: &str, (tr, te): (f64, f64)| {
        rows.push(Table1Row {
            method: name.to_string(),
            train_accuracy: tr,
            test_accuracy: te,
        })
    };

    let lin = (linear_kernel(xtr), linear_cross(xtr, xte));
    push(
        TABLE1_METHODS[0],
        fit_and_score(&lin.0, &lin.1, train, test, &cfg.svm.params())?,
    );
    let gauss = (gaussian_kernel(xtr, gamma), gaussian_cross(xtr, xte, gamma));
    push(
        TABLE1_METHODS[1],
        fit_and_score(&gauss.0, &gauss.1, train, test, &cfg.svm.params_with_c(1.0))?,
    );
    push(
        TABLE1_METHODS[2],
        fit_and_score(&gauss.0, &gauss.1, train, test, &cfg.svm.params_with_c(1000.0))?,
    );

    let spec = cfg.ansatz_spec(train.dim())?;
    let iterations = cfg.optimizer.central_iterations.unwrap_or(cfg.optimizer.iterations);
    let central = train_central(
        &spec,
        train,
        initial_theta(&spec, cfg.seed, None),
        cfg.optimizer.eta,
        iterations,
    )?;
    info!(
        "central pre-training loss {:.4} -> {:.4}",
        central.loss_before, central.loss_after
    );
    let kq = kernel_matrix(&spec, xtr, &central.theta)?;
    let kq_test = cross_kernel(&spec, xtr, xte, &central.theta)?;
    push(
        TABLE1_METHODS[3],
        fit_and_score(kq.matrix(), &kq_test, train, test, &cfg.svm.params_with_c(1.0))?,
    );
    push(
        TABLE1_METHODS[4],
        fit_and_score(kq.matrix(), &kq_test, train, test, &cfg.svm.params_with_c(1000.0))?,
    );

    Ok(Table1Report {
        rows,
        gamma,
        n_train: train.len(),
        n_test: test.len(),
        central,
        config: cfg.clone(),
        seed: cfg.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    /// 1-based, as displayed.
    pub node: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub before: NodeMetrics,
    pub after: NodeMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub nodes: Vec<NodeReport>,
    /// Rounds at which the series below were sampled.
    pub eval_iterations: Vec<usize>,
    /// `losses[t][i]`: node i's alignment loss at `eval_iterations[t]`.
    pub losses: Vec<Vec<f64>>,
    pub mean_loss: Vec<f64>,
    pub disagreement: Vec<f64>,
    pub initial_thetas: Vec<ThetaVector>,
    pub final_thetas: Vec<ThetaVector>,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl MetricsReport {
    pub fn mean_whole_test(&self, after: bool) -> f64 {
        let n = self.nodes.len().max(1) as f64;
        self.nodes
            .iter()
            .map(|r| if after { r.after.whole_test } else { r.before.whole_test })
            .sum::<f64>()
            / n
    }

    /// One block per node with rows Local Train, Local Test, Whole Train,
    /// Whole Test and before/after columns.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16}{:<14}{:>18}{:>18}",
            "Node", "Metric", "Before Training", "After Training"
        );
        for r in &self.nodes {
            let rows = [
                ("Local Train", r.before.local_train, r.after.local_train),
                ("Local Test", r.before.local_test, r.after.local_test),
                ("Whole Train", r.before.whole_train, r.after.whole_train),
                ("Whole Test", r.before.whole_test, r.after.whole_test),
            ];
            for (k, (name, b, a)) in rows.iter().enumerate() {
                let label = if k == 0 {
                    format!("CDQKL Node {}", r.node)
                } else {
                    String::new()
                };
                let _ = writeln!(s, "{label:<16}{name:<14}{:>17.2}%{:>17.2}%", 100.0 * b, 100.0 * a);
            }
        }
        s
    }
}

/// Shards both splits across the nodes: the training split with the
/// configured mode, the test split iid.
pub fn build_nodes(cfg: &ExperimentConfig, data: &PreparedData) -> Result<Vec<NodeData>> {
    let n = cfg.network.n_nodes;
    let seed = cfg.sharding_seed();
    let train_idx = shard_indices(&data.train, n, cfg.sharding.mode, seed)?;
    let test_idx = shard_indices(&data.test, n, ShardMode::Iid, seed.wrapping_add(1))?;
    Ok(train_idx
        .iter()
        .zip(&test_idx)
        .map(|(tr, te)| NodeData {
            train: data.train.subset(tr),
            test: data.test.subset(te),
        })
        .collect())
}

/// The full distributed experiment.
pub fn run_table2(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let started = Instant::now();
    let data = prepare_data(cfg)?;
    let nodes = build_nodes(cfg, &data)?;
    let spec = cfg.ansatz_spec(data.train.dim())?;
    let graph = build_graph(&cfg.network.topology, cfg.network.n_nodes)?;
    let hist = run_cdqkl(&spec, &nodes, &graph, &cfg.cdqkl_options())?;

    let reports = nodes
        .iter()
        .enumerate()
        .map(|(i, d)| NodeReport {
            node: i + 1,
            n_train: d.train.len(),
            n_test: d.test.len(),
            before: hist.before[i],
            after: hist.after[i],
        })
        .collect();
    let mean_loss = hist
        .evals
        .iter()
        .map(|e| e.losses.iter().sum::<f64>() / e.losses.len() as f64)
        .collect();
    Ok(MetricsReport {
        nodes: reports,
        eval_iterations: hist.evals.iter().map(|e| e.iteration).collect(),
        losses: hist.evals.iter().map(|e| e.losses.clone()).collect(),
        mean_loss,
        disagreement: hist.evals.iter().map(|e| e.disagreement).collect(),
        initial_thetas: hist.initial_thetas,
        final_thetas: hist.final_thetas,
        config: cfg.clone(),
        seed: cfg.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub n_points: usize,
    pub theta: ThetaVector,
    /// Whether `theta` came from central pre-training or the seeded start.
    pub trained: bool,
    pub alignment: f64,
    pub diagnostics: KernelDiagnostics,
    pub kernel: Vec<Vec<f64>>,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// Quantum kernel on the scaled training split.
pub fn run_kernel(cfg: &ExperimentConfig, train_theta: bool) -> Result<KernelReport> {
    cfg.validate()?;
    let started = Instant::now();
    let data = prepare_data(cfg)?;
    let spec = cfg.ansatz_spec(data.train.dim())?;
    let mut theta = initial_theta(&spec, cfg.seed, None);
    if train_theta {
        let iterations = cfg.optimizer.central_iterations.unwrap_or(cfg.optimizer.iterations);
        theta = train_central(&spec, &data.train, theta, cfg.optimizer.eta, iterations)?.theta;
    }
    let k = kernel_matrix(&spec, data.train.features(), &theta)?;
    Ok(KernelReport {
        n_points: k.size(),
        alignment: alignment(k.matrix(), &target_kernel(data.train.labels())?)?,
        diagnostics: k.diagnostics(),
        kernel: k.matrix().to_rows(),
        theta,
        trained: train_theta,
        seed: cfg.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Gaussian,
    /// Quantum kernel at the centrally trained parameters.
    Quantum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmReport {
    pub kernel: KernelKind,
    pub c: f64,
    pub gamma: Option<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub n_support: usize,
    pub iterations: usize,
    pub bias: f64,
    pub kkt_violation: f64,
    pub seed: u64,
    pub wall_time_s: f64,
}

pub fn run_svm(cfg: &ExperimentConfig, kind: KernelKind) -> Result<SvmReport> {
    cfg.validate()?;
    let started = Instant::now();
    let data = prepare_data(cfg)?;
    let (xtr, xte) = (data.train.features(), data.test.features());
    let mut gamma = None;
    let (k, kx) = match kind {
        KernelKind::Linear => (linear_kernel(xtr), linear_cross(xtr, xte)),
        KernelKind::Gaussian => {
            let g = cfg.svm.gamma_for(data.train.dim());
            gamma = Some(g);
            (gaussian_kernel(xtr, g), gaussian_cross(xtr, xte, g))
        }
        KernelKind::Quantum => {
            let spec = cfg.ansatz_spec(data.train.dim())?;
            let iterations = cfg.optimizer.central_iterations.unwrap_or(cfg.optimizer.iterations);
            let t = train_central(
                &spec,
                &data.train,
                initial_theta(&spec, cfg.seed, None),
                cfg.optimizer.eta,
                iterations,
            )?;
            (
                kernel_matrix(&spec, xtr, &t.theta)?.0,
                cross_kernel(&spec, xtr, xte, &t.theta)?,
            )
        }
    };
    let params = cfg.svm.params();
    let model = smo_train(&k, &data.train.labels_f64(), &params)?;
    Ok(SvmReport {
        kernel: kind,
        c: params.c,
        gamma,
        train_accuracy: accuracy(&predict(&model, &k)?, data.train.labels())?,
        test_accuracy: accuracy(&predict(&model, &kx)?, data.test.labels())?,
        n_support: model.support_indices().len(),
        iterations: model.iterations,
        bias: model.bias,
        kkt_violation: kkt_violation(&model, &k)?,
        seed: cfg.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}
