//! Consensus-based distributed quantum kernel learning on a classical
//! simulator.
//!
//! Nodes of a network each hold a private labelled shard, train the angles
//! of a fidelity-kernel feature map by maximizing kernel–target alignment,
//! and exchange only those angles with their neighbours through a doubly
//! stochastic mixing matrix. Trained kernels feed an SMO support vector
//! machine. The `audio` module turns WAV recordings into the fixed-length
//! feature vectors the kernels consume, and `harness` wires everything into
//! reproducible experiments.

pub mod audio;
pub mod consensus;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod qkernel;
pub mod rng;
pub mod statevec;
pub mod svm;

pub use consensus::{
    build_graph, metropolis_weights, run_cdqkl, CdqklOptions, ConsensusMatrix, GradMode, NetworkGraph, NodeData,
    NodeMetrics, NodeState, Topology, TrainingHistory,
};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use qkernel::{AnsatzSpec, KernelMatrix, LabeledDataset, ThetaVector};
pub use statevec::{Gate, StateVector};
pub use svm::{SmoParams, SvmModel};
