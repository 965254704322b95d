//! Trace-norm regularised weights over sampled rank-one atoms.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::driver::{minimize, DriverConfig, StepRule};
use super::objective::AtomProblem;
use super::prox::{nuclear_norm_estimate, prox_trace_norm_with_norm};
use super::{AlphaSolution, SolverConfig};
use crate::data::PairSet;
use crate::error::{invalid, Result};
use crate::linalg::nuclear_norm;
use crate::whiten::{default_ridge, WhitenTransform};

/// `r` distinct row indices in increasing order; all rows when `r == n`.
pub fn sample_indices(n: usize, r: usize, seed: u64) -> Vec<usize> {
    if r >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a70b);
    let mut idx = sample(&mut rng, n, r).into_vec();
    idx.sort_unstable();
    idx
}

/// Solves the sampled relaxation with `r` atoms drawn by `cfg.seed`.
pub fn solve_sampled_convex(pairs: &PairSet, r: usize, cfg: &SolverConfig) -> Result<AlphaSolution> {
    if r == 0 || r > pairs.len() {
        return Err(invalid(format!("need 1 <= r <= n = {}, got r = {r}", pairs.len())));
    }
    let idx = sample_indices(pairs.len(), r, cfg.seed);
    solve_sampled_convex_with_samples(pairs, &idx, cfg)
}

/// Builds the atom problem in working coordinates.
pub(crate) fn atom_problem(pairs: &PairSet, sample_idx: &[usize], cfg: &SolverConfig) -> AtomProblem {
    let x = pairs.base();
    let diffs = pairs.differences();
    let xs = x.select_rows(sample_idx);
    let coeff = x * xs.transpose();
    AtomProblem::new(coeff, diffs.select_rows(sample_idx), diffs, cfg.loss)
}

/// Solves the sampled relaxation with a fixed list of atom rows.
pub fn solve_sampled_convex_with_samples(
    pairs: &PairSet,
    sample_idx: &[usize],
    cfg: &SolverConfig,
) -> Result<AlphaSolution> {
    cfg.validate()?;
    let n = pairs.len();
    if sample_idx.is_empty() || sample_idx.iter().any(|&j| j >= n) {
        return Err(invalid("sample indices must be non-empty and < n"));
    }
    let (working, whiten) = if cfg.whiten {
        let w = WhitenTransform::fit(pairs.base(), default_ridge(pairs.base()))?;
        (w.apply_pairs(pairs), Some(w))
    } else {
        (pairs.clone(), None)
    };
    let problem = atom_problem(&working, sample_idx, cfg);
    let r = sample_idx.len();
    let svt = cfg.svt(n, r);

    // Rows used for the reported penalty when it is estimated from a subsample.
    let penalty_rows: Option<Vec<usize>> = cfg.tracenorm_rows.filter(|&l| l < n).map(|l| {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7ace);
        (0..l).map(|_| rng.random_range(0..n)).collect()
    });
    let penalty = |a: &DMatrix<f64>| match &penalty_rows {
        Some(rows) => nuclear_norm_estimate(a, rows) * (n as f64).sqrt(),
        None => nuclear_norm(a),
    };

    let exact_penalty = penalty_rows.is_none();
    let prox = |v: &DMatrix<f64>, tau| {
        let (out, norm) = prox_trace_norm_with_norm(v, tau, &svt);
        (out, norm.filter(|_| exact_penalty))
    };
    let (alpha, trace) = run_atom_problem(&problem, cfg, prox, penalty)?;
    Ok(AlphaSolution {
        alpha,
        sample_idx: sample_idx.to_vec(),
        objective_trace: trace,
        config: Some(cfg.clone()),
        whiten,
        atom_metric: None,
        atom_weights: None,
    })
}

/// Proximal Adagrad on an atom problem from `α = 0`; returns the weights and objective trace.
pub(crate) fn run_atom_problem<P, G>(
    problem: &AtomProblem,
    cfg: &SolverConfig,
    prox: P,
    penalty: G,
) -> Result<(DMatrix<f64>, Vec<f64>)>
where
    P: Fn(&DMatrix<f64>, f64) -> (DMatrix<f64>, Option<f64>),
    G: Fn(&DMatrix<f64>) -> f64,
{
    let n = problem.coeff.nrows();
    let driver = DriverConfig {
        rule: StepRule::Adagrad {
            step: cfg.step,
            delta: cfg.adagrad_delta,
        },
        lambda: cfg.lambda,
        batch: cfg.batch_size(n),
        iters: cfg.iters,
        tol: cfg.tol,
        seed: cfg.seed,
    };
    let out = minimize(problem, DMatrix::zeros(n, problem.coeff.ncols()), &driver, prox, penalty)?;
    Ok((out.params, out.trace))
}
