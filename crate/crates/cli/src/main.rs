use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdqkl_core::audio::Augmentation;
use cdqkl_core::harness::config::DataConfig;
use cdqkl_core::harness::data::{extract_features, save_csv, synth_dataset, LabelRule, SynthKind};
use cdqkl_core::harness::{run_kernel, run_svm, run_table1, run_table2, ExperimentConfig, KernelKind};
use cdqkl_core::{Error, Result};

#[derive(Parser)]
#[command(name = "cdqkl", version, about = "Distributed quantum kernel learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audio feature extraction.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Synthetic datasets.
    #[command(subcommand)]
    Data(DataCmd),
    /// Quantum kernel matrices.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Single SVM fits.
    #[command(subcommand)]
    Svm(SvmCmd),
    /// Classical baselines against the centrally trained quantum kernel.
    Table1(Common),
    /// The distributed training experiment.
    #[command(subcommand)]
    Cdqkl(CdqklCmd),
    /// Alias for `cdqkl run`.
    Table2(Common),
}

#[derive(Subcommand)]
enum FeaturesCmd {
    /// Featurize every labelled WAV file in a directory into a CSV.
    Extract {
        #[command(flatten)]
        common: Common,
        /// WAV directory; overrides the config's `data.dir`.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Filename rule `PATTERN=LABEL`, e.g. `_sad=-1`. Repeatable.
        #[arg(long = "label", value_parser = parse_rule)]
        labels: Vec<LabelRule>,
        /// Add one copy per standard augmentation for every file.
        #[arg(long)]
        augment: bool,
    },
}

#[derive(Subcommand)]
enum DataCmd {
    /// Write a synthetic two-class dataset as CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Option<SynthArg>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
    },
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Kernel matrix and diagnostics on the training split.
    Compute {
        #[command(flatten)]
        common: Common,
        /// Pre-train the parameters centrally before computing the kernel.
        #[arg(long)]
        train: bool,
    },
}

#[derive(Subcommand)]
enum SvmCmd {
    /// Fit and score one SVM.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "gaussian")]
        kernel: KernelArg,
        /// Overrides the config's `svm.c`.
        #[arg(long)]
        c: Option<f64>,
        /// Overrides the config's `svm.gamma`.
        #[arg(long)]
        gamma: Option<f64>,
    },
}

#[derive(Subcommand)]
enum CdqklCmd {
    Run(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; omitted sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset used when no config is given.
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Overrides the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file. Reports go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `optimizer.iterations`.
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthArg {
    XorBlobs,
    TwoGaussians,
    RingVsCore,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Gaussian,
    Quantum,
}

fn parse_rule(s: &str) -> std::result::Result<LabelRule, String> {
    let (pattern, label) = s.rsplit_once('=').ok_or("expected PATTERN=LABEL")?;
    let label = cdqkl_core::harness::data::parse_label(label).ok_or(format!("bad label `{label}`"))?;
    Ok(LabelRule {
        pattern: pattern.to_string(),
        label,
    })
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::preset(&self.preset)?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.iterations {
            cfg.optimizer.iterations = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_path(&self, cfg: &ExperimentConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| cfg.output.clone())
    }
}

/// Prints to stdout; a closed pipe (e.g. `| head`) is not an error.
fn print_stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Writes the JSON report to `out`, or prints it when there is no file.
/// A text rendering, when available, goes to stdout alongside a file.
fn emit<T: Serialize>(report: &T, text: Option<String>, out: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    match out {
        Some(p) => {
            std::fs::write(p, json + "\n")?;
            if let Some(t) = text {
                print_stdout(&t)?;
            }
        }
        None => print_stdout(&(json + "\n"))?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Features(FeaturesCmd::Extract {
            common,
            dir,
            labels,
            augment,
        }) => {
            let cfg = common.load()?;
            let (cfg_dir, cfg_rules, cfg_aug) = match &cfg.data {
                DataConfig::Wav {
                    dir,
                    label_map,
                    augment,
                } => (Some(dir.clone()), label_map.clone(), augment.clone()),
                _ => (None, Vec::new(), Vec::new()),
            };
            let dir = dir
                .or(cfg_dir)
                .ok_or_else(|| Error::Config("no WAV directory given".into()))?;
            let rules = if labels.is_empty() { cfg_rules } else { labels };
            if rules.is_empty() {
                return Err(Error::Config("no label rules given".into()));
            }
            let aug = if augment {
                Augmentation::standard_set().to_vec()
            } else {
                cfg_aug
            };
            let ds = extract_features(&dir, &rules, &aug, cfg.augment_seed())?;
            let out = common
                .out_path(&cfg)
                .ok_or_else(|| Error::Config("--out is required".into()))?;
            save_csv(&ds, &out)?;
            eprintln!("wrote {} rows to {}", ds.len(), out.display());
        }
        Command::Data(DataCmd::Synth { common, kind, m, noise }) => {
            let cfg = common.load()?;
            let (mut k, mut mm, mut nn) = (SynthKind::XorBlobs, 200, 0.3);
            if let DataConfig::Synthetic { kind, m, noise, .. } = &cfg.data {
                (k, mm, nn) = (*kind, *m, *noise);
            }
            if let Some(kind) = kind {
                k = match kind {
                    SynthArg::XorBlobs => SynthKind::XorBlobs,
                    SynthArg::TwoGaussians => SynthKind::TwoGaussians,
                    SynthArg::RingVsCore => SynthKind::RingVsCore,
                };
            }
            let ds = synth_dataset(k, m.unwrap_or(mm), noise.unwrap_or(nn), cfg.data_seed())?;
            match common.out_path(&cfg) {
                Some(p) => save_csv(&ds, &p)?,
                None => cdqkl_core::harness::data::write_csv(&ds, std::io::stdout().lock())?,
            }
        }
        Command::Kernel(KernelCmd::Compute { common, train }) => {
            let cfg = common.load()?;
            emit(&run_kernel(&cfg, train)?, None, common.out_path(&cfg).as_deref())?;
        }
        Command::Svm(SvmCmd::Run {
            common,
            kernel,
            c,
            gamma,
        }) => {
            let mut cfg = common.load()?;
            if let Some(c) = c {
                cfg.svm.c = c;
            }
            if gamma.is_some() {
                cfg.svm.gamma = gamma;
            }
            let kind = match kernel {
                KernelArg::Linear => KernelKind::Linear,
                KernelArg::Gaussian => KernelKind::Gaussian,
                KernelArg::Quantum => KernelKind::Quantum,
            };
            emit(&run_svm(&cfg, kind)?, None, common.out_path(&cfg).as_deref())?;
        }
        Command::Table1(common) => {
            let cfg = common.load()?;
            let r = run_table1(&cfg)?;
            emit(&r, Some(r.to_text()), common.out_path(&cfg).as_deref())?;
        }
        Command::Cdqkl(CdqklCmd::Run(common)) | Command::Table2(common) => {
            let cfg = common.load()?;
            let r = run_table2(&cfg)?;
            emit(&r, Some(r.to_text()), common.out_path(&cfg).as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
