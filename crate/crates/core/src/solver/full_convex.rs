//! Trace-norm relaxation over one unrolled transform per point. Oracle scale only.

use nalgebra::DMatrix;

use super::driver::{minimize, DriverConfig, StepRule};
use super::objective::RowObjective;
use super::prox::{prox_trace_norm_with_norm, Svt};
use super::{Loss, SolverConfig};
use crate::data::PairSet;
use crate::error::{Error, Result};
use crate::linalg::{mat_row_major, nuclear_norm};

pub const FULL_CONVEX_MAX_DIM: usize = 16;
pub const FULL_CONVEX_MAX_N: usize = 200;

struct FullProblem {
    x: DMatrix<f64>,
    diffs: DMatrix<f64>,
    loss: Loss,
}

impl FullProblem {
    fn residual_row(&self, z: &DMatrix<f64>, i: usize) -> Vec<f64> {
        let d = self.x.ncols();
        (0..d)
            .map(|p| {
                let mut s = -self.diffs[(i, p)];
                for q in 0..d {
                    s += z[(i, p * d + q)] * self.x[(i, q)];
                }
                s
            })
            .collect()
    }
}

impl RowObjective for FullProblem {
    fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    fn param_shape(&self) -> (usize, usize) {
        let d = self.x.ncols();
        (self.x.nrows(), d * d)
    }

    fn value(&self, z: &DMatrix<f64>) -> f64 {
        (0..self.x.nrows())
            .map(|i| {
                let r = self.residual_row(z, i);
                self.loss.row(r.iter().map(|v| v * v).sum()).0
            })
            .sum()
    }

    fn gradient(&self, z: &DMatrix<f64>, rows: Option<&[usize]>) -> DMatrix<f64> {
        let d = self.x.ncols();
        let mut g = DMatrix::zeros(z.nrows(), z.ncols());
        let all: Vec<usize> = (0..z.nrows()).collect();
        for &i in rows.unwrap_or(&all) {
            let r = self.residual_row(z, i);
            let (_, c) = self.loss.row(r.iter().map(|v| v * v).sum());
            for p in 0..d {
                for q in 0..d {
                    g[(i, p * d + q)] = c * r[p] * self.x[(i, q)];
                }
            }
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct FullConvexSolution {
    /// `n x d²`; row `i` is the row-major unrolling of point `i`'s transform.
    pub z: DMatrix<f64>,
    pub objective_trace: Vec<f64>,
}

impl FullConvexSolution {
    pub fn row_matrix(&self, i: usize) -> DMatrix<f64> {
        let d = (self.z.ncols() as f64).sqrt().round() as usize;
        let row: Vec<f64> = self.z.row(i).iter().copied().collect();
        mat_row_major(&row, d)
    }
}

/// Proximal gradient with a fixed `1/L` step on the full `n x d²` variable.
pub fn solve_full_convex(pairs: &PairSet, cfg: &SolverConfig) -> Result<FullConvexSolution> {
    cfg.validate()?;
    let (n, d) = (pairs.len(), pairs.dim());
    if d > FULL_CONVEX_MAX_DIM || n > FULL_CONVEX_MAX_N {
        return Err(Error::SizeLimit(format!(
            "full convex relaxation limited to d <= {FULL_CONVEX_MAX_DIM}, n <= {FULL_CONVEX_MAX_N}; got d = {d}, n = {n}"
        )));
    }
    let problem = FullProblem {
        x: pairs.base().clone(),
        diffs: pairs.differences(),
        loss: cfg.loss,
    };
    let max_sq = problem
        .x
        .row_iter()
        .map(|r| r.norm_squared())
        .fold(0.0, f64::max);
    let lipschitz = match cfg.loss {
        Loss::Squared => 2.0 * max_sq,
        Loss::SmoothedNorm { eps } => max_sq / eps.sqrt(),
    };
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
    let driver = DriverConfig {
        rule: StepRule::Fixed(step),
        lambda: cfg.lambda,
        batch: n,
        iters: cfg.iters,
        tol: cfg.tol,
        seed: cfg.seed,
    };
    let out = minimize(
        &problem,
        DMatrix::zeros(n, d * d),
        &driver,
        |v, tau| prox_trace_norm_with_norm(v, tau, &Svt::Exact),
        nuclear_norm,
    )?;
    Ok(FullConvexSolution {
        z: out.params,
        objective_trace: out.trace,
    })
}
