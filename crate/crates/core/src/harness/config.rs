//! JSON experiment configuration. Every section has defaults, so `{}` is a
//! valid config describing the desk-scale distributed preset.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::audio::Augmentation;
use crate::consensus::{CdqklOptions, GradMode, InitMode, Topology};
use crate::error::{Error, Result};
use crate::harness::data::{LabelRule, ShardMode, SynthKind};
use crate::qkernel::AnsatzSpec;
use crate::rng::{self, Stream};
use crate::svm::SmoParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root seed; every unspecified sub-seed is derived from it.
    pub seed: u64,
    pub ansatz: AnsatzConfig,
    pub network: NetworkConfig,
    pub optimizer: OptimizerConfig,
    pub svm: SvmConfig,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub sharding: ShardingConfig,
    pub eval_every: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ansatz: AnsatzConfig::default(),
            network: NetworkConfig::default(),
            optimizer: OptimizerConfig::default(),
            svm: SvmConfig::default(),
            data: DataConfig::default(),
            split: SplitConfig::default(),
            sharding: ShardingConfig::default(),
            eval_every: 10,
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    /// Defaults to the nearest-neighbour chain.
    pub entangle_pairs: Option<Vec<(usize, usize)>>,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            n_layers: 2,
            entangle_pairs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub topology: Topology,
    pub n_nodes: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            topology: Topology::Ring,
            n_nodes: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub eta: f64,
    pub eta_per_node: Option<Vec<f64>>,
    pub iterations: usize,
    pub grad_mode: GradMode,
    pub init: InitMode,
    /// Iterations for the single-node pre-training behind the Central QSVM
    /// rows; defaults to `iterations`.
    pub central_iterations: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta: 0.2,
            eta_per_node: None,
            iterations: 300,
            grad_mode: GradMode::Full,
            // Distinct starts give the consensus dynamics something to
            // contract; shared starts remain available.
            init: InitMode::PerNode,
            central_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    /// Gaussian baseline width; defaults to `1 / feature_dim`.
    pub gamma: Option<f64>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        let p = SmoParams::default();
        Self {
            c: p.c,
            tol: p.tol,
            max_passes: p.max_passes,
            gamma: None,
        }
    }
}

impl SvmConfig {
    pub fn params(&self) -> SmoParams {
        self.params_with_c(self.c)
    }

    pub fn params_with_c(&self, c: f64) -> SmoParams {
        SmoParams {
            c,
            tol: self.tol,
            max_passes: self.max_passes,
            check_psd: true,
        }
    }

    pub fn gamma_for(&self, feature_dim: usize) -> f64 {
        self.gamma.unwrap_or(1.0 / feature_dim.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", deny_unknown_fields)]
pub enum DataConfig {
    Synthetic {
        kind: SynthKind,
        m: usize,
        noise: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// A single CSV that is split, or a train CSV plus an explicit test CSV.
    Csv {
        path: PathBuf,
        #[serde(default)]
        test_path: Option<PathBuf>,
    },
    Wav {
        dir: PathBuf,
        label_map: Vec<LabelRule>,
        #[serde(default)]
        augment: Vec<Augmentation>,
    },
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Synthetic {
            kind: SynthKind::XorBlobs,
            m: 200,
            noise: 0.3,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShardingConfig {
    pub mode: ShardMode,
    pub seed: Option<u64>,
}

impl Default for ShardingConfig {
    fn default() -> Self {
        Self {
            mode: ShardMode::Iid,
            seed: None,
        }
    }
}

impl ExperimentConfig {
    /// Desk-scale distributed run: 4 qubits, 2 layers, ring of 4, 160/40
    /// synthetic rows, 300 full-gradient rounds at η = 0.2, C = 1.
    pub fn desk_preset() -> Self {
        Self::default()
    }

    /// The long-horizon run: 3000 rounds at C = 1.
    pub fn long_preset() -> Self {
        let mut c = Self::default();
        c.optimizer.iterations = 3000;
        c.eval_every = 100;
        c
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk_preset()),
            "long" => Ok(Self::long_preset()),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected desk or long)"
            ))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.network.n_nodes == 0 {
            return bad("network.n_nodes must be positive".into());
        }
        if !(self.optimizer.eta.is_finite() && self.optimizer.eta >= 0.0) {
            return bad(format!(
                "optimizer.eta must be finite and non-negative, got {}",
                self.optimizer.eta
            ));
        }
        if let Some(etas) = &self.optimizer.eta_per_node {
            if etas.len() != self.network.n_nodes {
                return bad(format!(
                    "optimizer.eta_per_node has {} entries for {} nodes",
                    etas.len(),
                    self.network.n_nodes
                ));
            }
        }
        if let GradMode::Stochastic { q } = self.optimizer.grad_mode {
            if q < 2 {
                return bad(format!("stochastic minibatch needs q >= 2, got {q}"));
            }
        }
        if !(self.svm.c > 0.0) || !(self.svm.tol > 0.0) {
            return bad("svm.c and svm.tol must be positive".into());
        }
        if let Some(g) = self.svm.gamma {
            if !(g > 0.0) {
                return bad(format!("svm.gamma must be positive, got {g}"));
            }
        }
        if !(0.0..1.0).contains(&self.split.test_fraction) {
            return bad(format!(
                "split.test_fraction must be in [0, 1), got {}",
                self.split.test_fraction
            ));
        }
        Ok(())
    }

    pub fn ansatz_spec(&self, feature_dim: usize) -> Result<AnsatzSpec> {
        let a = &self.ansatz;
        match &a.entangle_pairs {
            None => AnsatzSpec::new(a.n_qubits, a.n_layers, feature_dim),
            Some(p) => AnsatzSpec::with_pairs(a.n_qubits, a.n_layers, feature_dim, p.clone()),
        }
    }

    pub fn cdqkl_options(&self) -> CdqklOptions {
        CdqklOptions {
            eta: self.optimizer.eta,
            eta_per_node: self.optimizer.eta_per_node.clone(),
            iterations: self.optimizer.iterations,
            grad_mode: self.optimizer.grad_mode,
            eval_every: self.eval_every,
            seed: self.seed,
            svm: self.svm.params(),
            init: self.optimizer.init,
            initial_thetas: None,
            skip_metrics: false,
        }
    }

    pub fn data_seed(&self) -> u64 {
        match &self.data {
            DataConfig::Synthetic { seed: Some(s), .. } => *s,
            _ => rng::derive_seed(self.seed, Stream::Data, &[]),
        }
    }

    pub fn split_seed(&self) -> u64 {
        self.split
            .seed
            .unwrap_or_else(|| rng::derive_seed(self.seed, Stream::Split, &[]))
    }

    pub fn sharding_seed(&self) -> u64 {
        self.sharding
            .seed
            .unwrap_or_else(|| rng::derive_seed(self.seed, Stream::Sharding, &[]))
    }

    pub fn augment_seed(&self) -> u64 {
        rng::derive_seed(self.seed, Stream::Augment, &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn round_trips_through_json() {
        let mut c = ExperimentConfig::long_preset();
        c.network.topology = Topology::Explicit(vec![(0, 1), (1, 2), (2, 3)]);
        c.optimizer.grad_mode = GradMode::Stochastic { q: 8 };
        c.data = DataConfig::Wav {
            dir: "clips".into(),
            label_map: vec![LabelRule {
                pattern: "sad".into(),
                label: -1,
            }],
            augment: Augmentation::standard_set().to_vec(),
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"sed": 1}"#),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_json(r#"{"optimizer": {"eta": -1}}"#).is_err());
        assert!(
            ExperimentConfig::from_json(r#"{"network": {"n_nodes": 3}, "optimizer": {"eta_per_node": [0.1]}}"#)
                .is_err()
        );
        assert!(ExperimentConfig::preset("huge").is_err());
    }

    #[test]
    fn sub_seeds_differ_and_follow_root() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seed = 1;
        assert_ne!(a.split_seed(), a.sharding_seed());
        assert_ne!(a.split_seed(), b.split_seed());
        b.split.seed = Some(99);
        assert_eq!(b.split_seed(), 99);
    }
}
