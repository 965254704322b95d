//! Optimisation: sampled convex relaxation, non-convex baseline, full convex oracle.

mod adagrad;
mod closed_form;
mod driver;
mod full_convex;
mod nonconvex;
mod objective;
mod pipeline;
mod prox;
mod reconstruct;
mod sampled;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::whiten::WhitenTransform;

pub use adagrad::AdagradState;
pub use closed_form::{closed_form_weights, generators_from_atom_weights};
pub use full_convex::{solve_full_convex, FullConvexSolution, FULL_CONVEX_MAX_DIM, FULL_CONVEX_MAX_N};
pub use nonconvex::{solve_nonconvex, NonconvexInit, NonconvexProblem, NonconvexSolution};
pub use objective::AtomProblem;
pub use pipeline::{convex_plus_gradient, learn_convex, ConvexFit, PipelineResult};
pub use prox::{nuclear_norm_estimate, prox_trace_norm, prox_trace_norm_with_norm, subsampled_trace_norm, Svt};
pub use reconstruct::{atom_generators, reconstruct_generators, Reconstruction};
pub(crate) use sampled::run_atom_problem;
pub use sampled::{sample_indices, solve_sampled_convex, solve_sampled_convex_with_samples};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `Σ_i ‖r_i‖²`.
    #[default]
    Squared,
    /// `Σ_i sqrt(‖r_i‖² + eps)`, a smooth stand-in for the unsquared norm.
    SmoothedNorm { eps: f64 },
}

impl Loss {
    /// Loss of one residual row and the scale `c` such that the row gradient is `c · r`.
    pub(crate) fn row(&self, sq_norm: f64) -> (f64, f64) {
        match *self {
            Loss::Squared => (sq_norm, 2.0),
            Loss::SmoothedNorm { eps } => {
                let v = (sq_norm + eps).sqrt();
                (v, 1.0 / v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SvtMode {
    /// Exact SVD unless `min(n, r) > 500`, then randomized with `p = 10`, `q = 2`.
    #[default]
    Auto,
    Exact,
    Randomized { oversample: usize, power_iters: usize },
}

fn default_step() -> f64 {
    0.1
}
fn default_delta() -> f64 {
    1e-8
}
fn default_iters() -> usize {
    2000
}
fn default_k() -> usize {
    1
}
fn default_restarts() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-9
}
fn default_true() -> bool {
    true
}

/// Solver settings shared by every optimiser in this module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default)]
    pub loss: Loss,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_delta")]
    pub adagrad_delta: f64,
    /// Rows per minibatch; `None` means `min(n, 256)`.
    #[serde(default)]
    pub minibatch: Option<usize>,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub svt_mode: SvtMode,
    #[serde(default)]
    pub tracenorm_rows: Option<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Whiten pairs inside the sampled convex solver.
    #[serde(default = "default_true")]
    pub whiten: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            loss: Loss::Squared,
            lambda: 0.0,
            step: default_step(),
            adagrad_delta: default_delta(),
            minibatch: None,
            iters: default_iters(),
            k: default_k(),
            svt_mode: SvtMode::Auto,
            tracenorm_rows: None,
            restarts: default_restarts(),
            seed: 0,
            tol: default_tol(),
            whiten: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda must be finite and >= 0"));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(invalid("step must be > 0"));
        }
        if !(self.adagrad_delta >= 0.0) {
            return Err(invalid("adagrad_delta must be >= 0"));
        }
        if self.iters == 0 {
            return Err(invalid("iters must be >= 1"));
        }
        if self.k == 0 {
            return Err(invalid("K must be >= 1"));
        }
        if self.minibatch == Some(0) {
            return Err(invalid("minibatch must be >= 1"));
        }
        if let SvtMode::Randomized { oversample, .. } = self.svt_mode {
            if oversample < 5 {
                return Err(invalid("randomized SVT needs oversampling >= 5"));
            }
        }
        if let Loss::SmoothedNorm { eps } = self.loss {
            if !(eps > 0.0) {
                return Err(invalid("smoothed norm needs eps > 0"));
            }
        }
        if self.tracenorm_rows == Some(0) {
            return Err(invalid("tracenorm_rows must be >= 1"));
        }
        Ok(())
    }

    pub(crate) fn batch_size(&self, n: usize) -> usize {
        self.minibatch.unwrap_or(256).min(n).max(1)
    }

    pub(crate) fn svt(&self, rows: usize, cols: usize) -> Svt {
        let randomized = |oversample, power_iters| Svt::Randomized {
            rank: self.k,
            oversample,
            power_iters,
            seed: self.seed,
        };
        match self.svt_mode {
            SvtMode::Exact => Svt::Exact,
            SvtMode::Randomized {
                oversample,
                power_iters,
            } => randomized(oversample, power_iters),
            SvtMode::Auto if rows.min(cols) > 500 => randomized(10, 2),
            SvtMode::Auto => Svt::Exact,
        }
    }
}

/// Weights over sampled rank-one atoms `(x̄_j - x_j) x_jᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSolution {
    /// `n x r`; row `i` weights the atoms that transform point `i`.
    pub alpha: DMatrix<f64>,
    pub sample_idx: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub config: Option<SolverConfig>,
    /// Whitening applied to the pairs before forming atoms.
    pub whiten: Option<WhitenTransform>,
    /// Right factor applied to every atom (`Σ⁻¹` for closed-form weights).
    pub atom_metric: Option<DMatrix<f64>>,
    /// Per-transform atom weights (`r x K`) when known in closed form.
    pub atom_weights: Option<DMatrix<f64>>,
}
