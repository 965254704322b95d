//! Direct descent on strengths and generators jointly.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::driver::{minimize, DriverConfig, StepRule};
use super::objective::RowObjective;
use super::{Loss, SolverConfig};
use crate::data::{GeneratorSet, PairSet};
use crate::error::{invalid, Error, Result};

/// `Σ_i ℓ(Σ_k t_ik A_k x_i - (x̄_i - x_i))` over packed parameters.
///
/// Parameters are one column: `t` column-major (`n·K` entries) followed by each `A_k`
/// row-major (`d²` entries each).
#[derive(Debug, Clone)]
pub struct NonconvexProblem {
    pub x: DMatrix<f64>,
    pub diffs: DMatrix<f64>,
    pub k: usize,
    pub loss: Loss,
}

impl NonconvexProblem {
    pub fn new(pairs: &PairSet, k: usize, loss: Loss) -> Self {
        NonconvexProblem {
            x: pairs.base().clone(),
            diffs: pairs.differences(),
            k,
            loss,
        }
    }

    fn n(&self) -> usize {
        self.x.nrows()
    }

    fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn pack(&self, t: &DMatrix<f64>, gens: &[DMatrix<f64>]) -> DMatrix<f64> {
        let (n, d, k) = (self.n(), self.d(), self.k);
        let mut p = DMatrix::zeros(n * k + k * d * d, 1);
        for kk in 0..k {
            for i in 0..n {
                p[kk * n + i] = t[(i, kk)];
            }
            let off = n * k + kk * d * d;
            for a in 0..d {
                for b in 0..d {
                    p[off + a * d + b] = gens[kk][(a, b)];
                }
            }
        }
        p
    }

    pub fn unpack(&self, p: &DMatrix<f64>) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let (n, d, k) = (self.n(), self.d(), self.k);
        let t = DMatrix::from_fn(n, k, |i, kk| p[kk * n + i]);
        let gens = (0..k)
            .map(|kk| {
                let off = n * k + kk * d * d;
                DMatrix::from_fn(d, d, |a, b| p[off + a * d + b])
            })
            .collect();
        (t, gens)
    }

    /// Objective for unpacked parameters.
    /// Gradient of the objective with respect to the packed parameters.
    pub fn gradient_full(&self, packed: &DMatrix<f64>) -> DMatrix<f64> {
        self.gradient(packed, None)
    }

    pub fn objective(&self, t: &DMatrix<f64>, gens: &[DMatrix<f64>]) -> f64 {
        self.value(&self.pack(t, gens))
    }

    fn row_terms(
        &self,
        p: &DMatrix<f64>,
        rows: Option<&[usize]>,
    ) -> (DMatrix<f64>, Vec<DMatrix<f64>>, DMatrix<f64>, Vec<DMatrix<f64>>, DMatrix<f64>) {
        let (t, gens) = self.unpack(p);
        let (x, diffs, t_r) = match rows {
            Some(rows) => (
                self.x.select_rows(rows),
                self.diffs.select_rows(rows),
                t.select_rows(rows),
            ),
            None => (self.x.clone(), self.diffs.clone(), t.clone()),
        };
        let mut resid = -diffs;
        let mut images = Vec::with_capacity(self.k);
        for (kk, a) in gens.iter().enumerate() {
            let mut y = &x * a.transpose();
            let tk = t_r.column(kk);
            let img = y.clone();
            for (mut row, &tv) in y.row_iter_mut().zip(tk.iter()) {
                row *= tv;
            }
            resid += y;
            images.push(img);
        }
        (x, images, resid, gens, t_r)
    }
}

impl RowObjective for NonconvexProblem {
    fn n_rows(&self) -> usize {
        self.n()
    }

    fn param_shape(&self) -> (usize, usize) {
        (self.n() * self.k + self.k * self.d() * self.d(), 1)
    }

    fn value(&self, params: &DMatrix<f64>) -> f64 {
        let (_, _, resid, _, _) = self.row_terms(params, None);
        resid
            .row_iter()
            .map(|r| self.loss.row(r.norm_squared()).0)
            .sum()
    }

    fn gradient(&self, params: &DMatrix<f64>, rows: Option<&[usize]>) -> DMatrix<f64> {
        let (n, d, k) = (self.n(), self.d(), self.k);
        let (x, images, mut q, _, t_r) = self.row_terms(params, rows);
        for mut row in q.row_iter_mut() {
            let (_, c) = self.loss.row(row.norm_squared());
            row *= c;
        }
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..n).collect();
                &all
            }
        };
        let mut grad = DMatrix::zeros(n * k + k * d * d, 1);
        for kk in 0..k {
            for (m, &i) in rows.iter().enumerate() {
                grad[kk * n + i] = images[kk].row(m).dot(&q.row(m));
            }
            let mut weighted = q.clone();
            for (mut row, &tv) in weighted.row_iter_mut().zip(t_r.column(kk).iter()) {
                row *= tv;
            }
            let ga = weighted.transpose() * &x;
            let off = n * k + kk * d * d;
            for a in 0..d {
                for b in 0..d {
                    grad[off + a * d + b] = ga[(a, b)];
                }
            }
        }
        grad
    }
}

/// Starting point for [`solve_nonconvex`].
#[derive(Debug, Clone)]
pub struct NonconvexInit {
    pub t: DMatrix<f64>,
    pub generators: GeneratorSet,
}

#[derive(Debug, Clone)]
pub struct NonconvexSolution {
    /// `n x K`.
    pub t: DMatrix<f64>,
    pub generators: GeneratorSet,
    pub objective: f64,
    pub restart_objectives: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

fn random_init(problem: &NonconvexProblem, seed: u64, restart: usize) -> DMatrix<f64> {
    let (n, d, k) = (problem.n(), problem.d(), problem.k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64 + 1);
    let xn = problem.x.norm();
    let ratio = if xn > 0.0 { problem.diffs.norm() / xn } else { 0.0 };
    let t = DMatrix::from_fn(n, k, |_, _| ratio * rng.sample::<f64, _>(StandardNormal));
    let sd = 1.0 / (d as f64).sqrt();
    let gens: Vec<DMatrix<f64>> = (0..k)
        .map(|_| DMatrix::from_fn(d, d, |_, _| sd * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    problem.pack(&t, &gens)
}

/// Adagrad descent on `(t, A)`; keeps the best of `cfg.restarts` random starts unless `init` is given.
pub fn solve_nonconvex(
    pairs: &PairSet,
    k: usize,
    cfg: &SolverConfig,
    init: Option<&NonconvexInit>,
) -> Result<NonconvexSolution> {
    cfg.validate()?;
    if k == 0 {
        return Err(invalid("K must be >= 1"));
    }
    let problem = NonconvexProblem::new(pairs, k, cfg.loss);
    let starts: Vec<DMatrix<f64>> = match init {
        Some(init) => {
            if init.t.shape() != (pairs.len(), k)
                || init.generators.len() != k
                || init.generators.dim() != pairs.dim()
            {
                return Err(invalid("initial strengths/generators do not match pairs and K"));
            }
            vec![problem.pack(&init.t, init.generators.generators())]
        }
        None => {
            if cfg.restarts == 0 {
                return Err(invalid("need at least one restart without an initial point"));
            }
            (0..cfg.restarts)
                .map(|r| random_init(&problem, cfg.seed, r))
                .collect()
        }
    };
    let runs: Vec<Result<(DMatrix<f64>, Vec<f64>)>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(r, x0)| {
            let driver = DriverConfig {
                rule: StepRule::Adagrad {
                    step: cfg.step,
                    delta: cfg.adagrad_delta,
                },
                lambda: 0.0,
                batch: cfg.batch_size(pairs.len()),
                iters: cfg.iters,
                tol: cfg.tol,
                seed: cfg.seed.wrapping_add(r as u64),
            };
            let out = minimize(&problem, x0, &driver, |v, _| (v.clone(), None), |_| 0.0)?;
            Ok((out.params, out.trace))
        })
        .collect();
    let runs: Vec<(DMatrix<f64>, Vec<f64>)> = runs.into_iter().collect::<Result<_>>()?;
    let restart_objectives: Vec<f64> = runs
        .iter()
        .map(|(p, _)| problem.value(p))
        .collect();
    let best = restart_objectives
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("no restarts ran".into()))?;
    let (params, trace) = runs.into_iter().nth(best).expect("best index in range");
    let (t, gens) = problem.unpack(&params);
    Ok(NonconvexSolution {
        t,
        generators: GeneratorSet::new(gens)?,
        objective: restart_objectives[best],
        restart_objectives,
        objective_trace: trace,
    })
}
