//! Consensus-based distributed training of a shared kernel parameter vector.
//!
//! Each round every node mixes its neighbours' parameters through a doubly
//! stochastic matrix, then takes a gradient step on its private shard at the
//! mixed point (combine-then-adapt). Rounds are synchronous.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::qkernel::{cross_kernel, grad_param_shift, grad_stochastic, kernel_matrix, local_loss};
use crate::qkernel::{AnsatzSpec, LabeledDataset, ThetaVector};
use crate::rng::{self, Stream};
use crate::svm::{accuracy, predict, smo_train, SmoParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "edges")]
pub enum Topology {
    Ring,
    Complete,
    Star,
    Line,
    Explicit(Vec<(usize, usize)>),
}

/// Undirected connected graph without self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl NetworkGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Edges as `(low, high)` pairs, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == i || b == i).count()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search(&key).is_ok()
    }

    /// Neighbours plus the node itself.
    pub fn neighborhood(&self, i: usize) -> Vec<usize> {
        (0..self.n_nodes).filter(|&j| j == i || self.has_edge(i, j)).collect()
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n_nodes];
        let mut out = Vec::new();
        for start in 0..self.n_nodes {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &(a, b) in &self.edges {
                    let other = if a == v {
                        b
                    } else if b == v {
                        a
                    } else {
                        continue;
                    };
                    if !seen[other] {
                        seen[other] = true;
                        stack.push(other);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

pub fn build_graph(topology: &Topology, n_nodes: usize) -> Result<NetworkGraph> {
    if n_nodes < 2 {
        return Err(Error::InvalidParameter(format!(
            "a network needs at least 2 nodes, got {n_nodes}"
        )));
    }
    let raw: Vec<(usize, usize)> = match topology {
        Topology::Ring => (0..n_nodes).map(|i| (i, (i + 1) % n_nodes)).collect(),
        Topology::Complete => (0..n_nodes)
            .flat_map(|i| ((i + 1)..n_nodes).map(move |j| (i, j)))
            .collect(),
        Topology::Star => (1..n_nodes).map(|i| (0, i)).collect(),
        Topology::Line => (1..n_nodes).map(|i| (i - 1, i)).collect(),
        Topology::Explicit(edges) => edges.clone(),
    };
    let mut set = BTreeSet::new();
    for (a, b) in raw {
        if a >= n_nodes || b >= n_nodes {
            return Err(Error::InvalidParameter(format!(
                "edge ({a}, {b}) references a node outside 0..{n_nodes}"
            )));
        }
        if a == b {
            return Err(Error::InvalidParameter(format!("self-loop on node {a}")));
        }
        set.insert((a.min(b), a.max(b)));
    }
    let g = NetworkGraph {
        n_nodes,
        edges: set.into_iter().collect(),
    };
    let components = g.components();
    if components.len() > 1 {
        return Err(Error::DisconnectedGraph { components });
    }
    Ok(g)
}

/// Doubly stochastic mixing weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConsensusMatrix(Matrix);

impl ConsensusMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n_nodes(&self) -> usize {
        self.0.rows()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.0.iter_rows().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.0.cols())
            .map(|j| (0..self.0.rows()).map(|i| self.0[(i, j)]).sum())
            .collect()
    }

    /// Eigenvalue magnitudes, descending. The matrix is symmetric by construction.
    pub fn spectrum_magnitudes(&self) -> Vec<f64> {
        let mut mags: Vec<f64> = symmetric_eigenvalues(&self.0).into_iter().map(f64::abs).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        mags
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectrum_magnitudes()[0]
    }

    /// Second-largest eigenvalue magnitude; governs the averaging rate.
    pub fn sigma2(&self) -> f64 {
        self.spectrum_magnitudes().get(1).copied().unwrap_or(0.0)
    }
}

/// `w_ij = 1 / (1 + max(d_i, d_j))` on edges, remainder on the diagonal.
pub fn metropolis_weights(g: &NetworkGraph) -> ConsensusMatrix {
    let n = g.n_nodes();
    let deg: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut w = Matrix::zeros(n, n);
    for &(a, b) in g.edges() {
        let v = 1.0 / (1 + deg[a].max(deg[b])) as f64;
        w[(a, b)] = v;
        w[(b, a)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    ConsensusMatrix(w)
}

/// `λ_i = Σ_j w_ij θ_j`.
pub fn consensus_mix(thetas: &[ThetaVector], w: &ConsensusMatrix) -> Result<Vec<ThetaVector>> {
    check_dim("mixing node count", w.n_nodes(), thetas.len())?;
    let dim = thetas.first().map_or(0, ThetaVector::len);
    for t in thetas {
        check_dim("theta length across nodes", dim, t.len())?;
    }
    Ok((0..thetas.len())
        .map(|i| {
            let mut out = vec![0.0; dim];
            for (j, t) in thetas.iter().enumerate() {
                let wij = w.weight(i, j);
                if wij != 0.0 {
                    for (o, v) in out.iter_mut().zip(t.as_slice()) {
                        *o += wij * v;
                    }
                }
            }
            ThetaVector(out)
        })
        .collect())
}

/// `Σ_i ‖θ_i − θ̄‖₂`.
pub fn disagreement(thetas: &[ThetaVector]) -> f64 {
    let n = thetas.len();
    if n == 0 {
        return 0.0;
    }
    let dim = thetas[0].len();
    let mean: Vec<f64> = (0..dim)
        .map(|p| thetas.iter().map(|t| t.0[p]).sum::<f64>() / n as f64)
        .collect();
    thetas
        .iter()
        .map(|t| {
            t.0.iter()
                .zip(&mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GradMode {
    Full,
    /// Minibatch of `q` points per node per round, clamped to the shard size.
    Stochastic {
        q: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: usize,
    pub theta: ThetaVector,
    pub lambda: ThetaVector,
    pub shard: LabeledDataset,
    pub eta: f64,
}

impl NodeState {
    pub fn new(id: usize, theta: ThetaVector, shard: LabeledDataset, eta: f64) -> Self {
        Self {
            id,
            lambda: theta.clone(),
            theta,
            shard,
            eta,
        }
    }
}

/// One synchronous round with a caller-supplied gradient oracle, evaluated
/// at the mixed point `λ_i`.
pub fn cdqkl_step_with<F>(states: &mut [NodeState], w: &ConsensusMatrix, round: usize, mut grad: F) -> Result<()>
where
    F: FnMut(&NodeState, &ThetaVector) -> Result<Vec<f64>>,
{
    let previous: Vec<ThetaVector> = states.iter().map(|s| s.theta.clone()).collect();
    let mixed = consensus_mix(&previous, w)?;
    for (state, lambda) in states.iter_mut().zip(mixed) {
        let g = grad(state, &lambda)?;
        check_dim("gradient length", lambda.len(), g.len())?;
        if let Some(p) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                node: state.id,
                iteration: round,
                detail: format!("component {p} is {} at lambda {:?}", g[p], lambda.as_slice()),
            });
        }
        state.theta = ThetaVector(lambda.0.iter().zip(&g).map(|(l, gv)| l - state.eta * gv).collect());
        state.lambda = lambda;
    }
    Ok(())
}

/// One round of consensus gradient descent on the alignment loss.
pub fn cdqkl_step(
    spec: &AnsatzSpec,
    states: &mut [NodeState],
    w: &ConsensusMatrix,
    mode: GradMode,
    round: usize,
    rng_seed: u64,
) -> Result<()> {
    cdqkl_step_with(states, w, round, |node, lambda| match mode {
        GradMode::Full => grad_param_shift(spec, &node.shard, lambda),
        GradMode::Stochastic { q } => {
            let seed = rng::derive_seed(rng_seed, Stream::StochasticGradient, &[node.id as u64, round as u64]);
            grad_stochastic(spec, &node.shard, lambda, q.min(node.shard.len()), seed)
        }
    })
}

/// A node's private training shard and its share of the test split.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// All nodes start from one seeded draw.
    #[default]
    Shared,
    /// Each node draws its own start.
    PerNode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdqklOptions {
    pub eta: f64,
    pub eta_per_node: Option<Vec<f64>>,
    pub iterations: usize,
    pub grad_mode: GradMode,
    /// Loss/disagreement sampling period; 0 records only the endpoints.
    pub eval_every: usize,
    pub seed: u64,
    pub svm: SmoParams,
    pub init: InitMode,
    /// Explicit starting parameters, overriding `init`.
    pub initial_thetas: Option<Vec<ThetaVector>>,
    /// Skip the SVM accuracy metrics (dynamics-only runs).
    pub skip_metrics: bool,
}

impl Default for CdqklOptions {
    fn default() -> Self {
        Self {
            eta: 0.2,
            eta_per_node: None,
            iterations: 300,
            grad_mode: GradMode::Full,
            eval_every: 10,
            seed: 0,
            svm: SmoParams::default(),
            init: InitMode::Shared,
            initial_thetas: None,
            skip_metrics: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub local_train: f64,
    pub local_test: f64,
    pub whole_train: f64,
    pub whole_test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub iteration: usize,
    pub losses: Vec<f64>,
    pub disagreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub evals: Vec<EvalPoint>,
    pub before: Vec<NodeMetrics>,
    pub after: Vec<NodeMetrics>,
    pub initial_thetas: Vec<ThetaVector>,
    pub final_thetas: Vec<ThetaVector>,
}

/// Draws a starting vector uniformly from `[−π/4, π/4]` per component.
pub fn initial_theta(spec: &AnsatzSpec, seed: u64, node: Option<usize>) -> ThetaVector {
    let coords: Vec<u64> = node.map(|i| i as u64).into_iter().collect();
    let mut r = rng::substream(seed, Stream::Init, &coords);
    ThetaVector(
        (0..spec.n_params())
            .map(|_| r.random_range(-FRAC_PI_4..=FRAC_PI_4))
            .collect(),
    )
}

fn train_and_score(
    spec: &AnsatzSpec,
    theta: &ThetaVector,
    train: &LabeledDataset,
    test: &LabeledDataset,
    svm: &SmoParams,
) -> Result<(f64, f64)> {
    let k = kernel_matrix(spec, train.features(), theta)?;
    let model = smo_train(k.matrix(), &train.labels_f64(), svm)?;
    let train_acc = accuracy(&predict(&model, k.matrix())?, train.labels())?;
    let cross = cross_kernel(spec, train.features(), test.features(), theta)?;
    let test_acc = accuracy(&predict(&model, &cross)?, test.labels())?;
    Ok((train_acc, test_acc))
}

/// Local metrics train on the node's own shard; whole metrics train on the
/// union of every node's training shard. Both use the node's parameters.
pub fn node_metrics(
    spec: &AnsatzSpec,
    theta: &ThetaVector,
    local: &NodeData,
    whole: &NodeData,
    svm: &SmoParams,
) -> Result<NodeMetrics> {
    let (local_train, local_test) = train_and_score(spec, theta, &local.train, &local.test, svm)?;
    let (whole_train, whole_test) = train_and_score(spec, theta, &whole.train, &whole.test, svm)?;
    Ok(NodeMetrics {
        local_train,
        local_test,
        whole_train,
        whole_test,
    })
}

fn union(nodes: &[NodeData]) -> Result<NodeData> {
    let trains: Vec<&LabeledDataset> = nodes.iter().map(|n| &n.train).collect();
    let tests: Vec<&LabeledDataset> = nodes.iter().map(|n| &n.test).collect();
    Ok(NodeData {
        train: LabeledDataset::concat(&trains)?,
        test: LabeledDataset::concat(&tests)?,
    })
}

pub fn run_cdqkl(
    spec: &AnsatzSpec,
    nodes: &[NodeData],
    graph: &NetworkGraph,
    opts: &CdqklOptions,
) -> Result<TrainingHistory> {
    let n = graph.n_nodes();
    check_dim("shard count", n, nodes.len())?;
    if let Some(etas) = &opts.eta_per_node {
        check_dim("per-node step sizes", n, etas.len())?;
    }
    let w = metropolis_weights(graph);

    let thetas: Vec<ThetaVector> = match &opts.initial_thetas {
        Some(t) => {
            check_dim("initial theta count", n, t.len())?;
            for th in t {
                check_dim("initial theta length", spec.n_params(), th.len())?;
            }
            t.clone()
        }
        None => match opts.init {
            InitMode::Shared => vec![initial_theta(spec, opts.seed, None); n],
            InitMode::PerNode => (0..n).map(|i| initial_theta(spec, opts.seed, Some(i))).collect(),
        },
    };
    let mut states: Vec<NodeState> = nodes
        .iter()
        .zip(thetas)
        .enumerate()
        .map(|(i, (d, th))| {
            let eta = opts.eta_per_node.as_ref().map_or(opts.eta, |e| e[i]);
            NodeState::new(i, th, d.train.clone(), eta)
        })
        .collect();
    let initial_thetas: Vec<ThetaVector> = states.iter().map(|s| s.theta.clone()).collect();

    let whole = if opts.skip_metrics { None } else { Some(union(nodes)?) };
    let metrics = |states: &[NodeState]| -> Result<Vec<NodeMetrics>> {
        match &whole {
            None => Ok(Vec::new()),
            Some(whole) => states
                .iter()
                .zip(nodes)
                .map(|(s, d)| node_metrics(spec, &s.theta, d, whole, &opts.svm))
                .collect(),
        }
    };
    let record = |states: &[NodeState], iteration: usize| -> Result<EvalPoint> {
        let losses = states
            .iter()
            .map(|s| local_loss(spec, &s.shard, &s.theta))
            .collect::<Result<Vec<_>>>()?;
        let thetas: Vec<ThetaVector> = states.iter().map(|s| s.theta.clone()).collect();
        Ok(EvalPoint {
            iteration,
            losses,
            disagreement: disagreement(&thetas),
        })
    };

    let before = metrics(&states)?;
    let mut evals = vec![record(&states, 0)?];
    for k in 1..=opts.iterations {
        cdqkl_step(spec, &mut states, &w, opts.grad_mode, k, opts.seed)?;
        if k == opts.iterations || (opts.eval_every > 0 && k % opts.eval_every == 0) {
            evals.push(record(&states, k)?);
        }
    }
    let after = metrics(&states)?;

    Ok(TrainingHistory {
        evals,
        before,
        after,
        initial_thetas,
        final_thetas: states.into_iter().map(|s| s.theta).collect(),
    })
}
