//! Command-line front end.

mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelConfig;
use crate::solver::SolverConfig;

pub use commands::load_generators;

#[derive(Debug, Parser)]
#[command(name = "lietrans", version, about = "Learn linear transformation generators from point sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Method {
    #[value(name = "convex")]
    #[serde(rename = "convex")]
    Convex,
    #[value(name = "convex+gradient")]
    #[serde(rename = "convex+gradient")]
    ConvexGradient,
    #[value(name = "nonconvex")]
    #[serde(rename = "nonconvex")]
    Nonconvex,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Convex => "convex",
            Method::ConvexGradient => "convex+gradient",
            Method::Nonconvex => "nonconvex",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize base points, neighbours and ground-truth generators from a spec.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Learn generators from a data directory.
    Learn {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "convex+gradient")]
        method: Method,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Matched operator-norm error between two generator directories.
    Eval {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate several learn runs against their ground truth into one CSV.
    EvalBatch {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// Ground-truth directory; defaults to each run's data directory.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply `exp(j·eta·A_k)` for `j = -steps..=steps` to an image.
    Apply {
        #[arg(long)]
        gens: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 3)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spanning-tree embedding of a data directory.
    Embed {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        gens: PathBuf,
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit kernel vector fields to a point set.
    Kernel {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a fitted kernel model at new points.
    KernelPredict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random points on the unit circle.
    GenCircle {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn default_true() -> bool {
    true
}

/// Configuration file of `learn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    /// Solver for the convex stage, or for the whole run with `nonconvex`.
    #[serde(default)]
    pub solver: SolverConfig,
    /// Gradient refinement after the convex stage; defaults to `solver`.
    #[serde(default)]
    pub refine: Option<SolverConfig>,
    /// Sampled atoms `r`; defaults to `min(n, 5000)`.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Disentangle the final strengths and generators.
    #[serde(default = "default_true")]
    pub disentangle: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            solver: SolverConfig::default(),
            refine: None,
            samples: None,
            disentangle: true,
        }
    }
}

/// Configuration file of `kernel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct KernelCommandConfig {
    #[serde(flatten)]
    pub kernel: KernelConfig,
    /// Score the first field against the unit-circle tangent on this many fresh points.
    #[serde(default)]
    pub circle_holdout: Option<usize>,
    #[serde(default)]
    pub holdout_seed: u64,
}

/// Record written by every command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub wall_seconds: f64,
    pub version: String,
    #[serde(default)]
    pub results: serde_json::Value,
}

/// 0 success, 2 bad input, 3 numerical failure.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("LIETRANS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // A pool may already exist when called repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads();
    match cli.command {
        Command::Gen { config, out, seed } => commands::gen(&config, &out, seed),
        Command::Learn {
            data,
            method,
            config,
            out,
            k,
            lambda,
            seed,
        } => commands::learn(&data, method, config.as_deref(), &out, k, lambda, seed),
        Command::Eval { est, truth, out } => commands::eval(&est, &truth, &out),
        Command::EvalBatch { runs, truth, out } => commands::eval_batch(&runs, truth.as_deref(), &out),
        Command::Apply {
            gens,
            image,
            steps,
            eta,
            out,
        } => commands::apply(&gens, &image, steps, eta, &out),
        Command::Embed { data, gens, root, out } => commands::embed(&data, &gens, root, &out),
        Command::Kernel {
            data,
            config,
            out,
            k,
            lambda,
            seed,
        } => commands::kernel(&data, config.as_deref(), &out, k, lambda, seed),
        Command::KernelPredict { model, points, out } => commands::kernel_predict(&model, &points, &out),
        Command::GenCircle { n, seed, out } => commands::gen_circle(n, seed, &out),
    }
}
