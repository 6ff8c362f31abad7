//! Configuration, dataset plumbing and experiment runners.

pub mod config;
pub mod data;
pub mod experiments;

pub use config::ExperimentConfig;
pub use data::{
    apply_scaler, extract_features, fit_scaler, load_csv, save_csv, shard, split_dataset, synth_dataset, FeatureScaler,
    LabelRule, ShardMode, SynthKind,
};
pub use experiments::{
    canonical_json, prepare_data, run_kernel, run_svm, run_table1, run_table2, KernelKind, MetricsReport, Table1Report,
    TABLE1_METHODS,
};
