//! Proximal gradient loop shared by the solvers.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adagrad::AdagradState;
use super::objective::RowObjective;
use crate::error::{Error, Result};

/// Objective growth beyond this multiple of the starting value aborts the run.
pub(crate) const DIVERGENCE_FACTOR: f64 = 1e3;

/// Backtracking gives up below this step.
const MIN_STEP: f64 = 1e-300;
/// Per-iteration growth of the adaptive step.
const STEP_GROWTH: f64 = 1.1;

#[derive(Debug, Clone, Copy)]
pub(crate) enum StepRule {
    Adagrad { step: f64, delta: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub(crate) struct DriverConfig {
    pub rule: StepRule,
    pub lambda: f64,
    pub batch: usize,
    pub iters: usize,
    pub tol: f64,
    pub seed: u64,
}

pub(crate) struct DriverOutput {
    pub params: DMatrix<f64>,
    pub trace: Vec<f64>,
}

/// Minimises `f(x) + λ g(x)` where `prox(v, τ)` is the prox of `τ g`, returning `g` of
/// its output when that comes for free.
///
/// Full-batch runs use monotone accelerated proximal gradient. With the Adagrad rule the
/// first Adagrad step seeds the scalar step, otherwise the fixed step does; it is
/// backtracked on a sufficient-decrease test and allowed to grow again. Minibatch runs take
/// every preconditioned Adagrad step.
pub(crate) fn minimize<O, P, G>(
    objective: &O,
    x0: DMatrix<f64>,
    cfg: &DriverConfig,
    prox: P,
    penalty: G,
) -> Result<DriverOutput>
where
    O: RowObjective,
    P: Fn(&DMatrix<f64>, f64) -> (DMatrix<f64>, Option<f64>),
    G: Fn(&DMatrix<f64>) -> f64,
{
    let penalty_term = |x: &DMatrix<f64>, known: Option<f64>| {
        if cfg.lambda > 0.0 {
            cfg.lambda * known.unwrap_or_else(|| penalty(x))
        } else {
            0.0
        }
    };
    let full = cfg.batch >= objective.n_rows();
    match cfg.rule {
        StepRule::Adagrad { step, delta } if !full => {
            minibatch_adagrad(objective, x0, cfg, step, delta, &prox, &penalty_term)
        }
        StepRule::Adagrad { step, delta } => {
            let (rows, cols) = objective.param_shape();
            let grad = objective.gradient(&x0, None);
            let mut state = AdagradState::new(rows, cols, step, delta);
            state.step(&grad);
            let seed = state.effective_step(&grad);
            let seed = if seed > 0.0 { seed } else { step };
            accelerated_loop(objective, x0, cfg, seed, &prox, &penalty_term)
        }
        StepRule::Fixed(step) => accelerated_loop(objective, x0, cfg, step, &prox, &penalty_term),
    }
}

fn check_divergence(iteration: usize, value: f64, initial: f64) -> Result<()> {
    if !value.is_finite() || (initial > 0.0 && value > DIVERGENCE_FACTOR * initial) {
        return Err(Error::Divergence {
            iteration,
            objective: value,
            initial,
        });
    }
    Ok(())
}

fn converged(change: f64, value: f64, tol: f64) -> bool {
    change <= tol * value.abs().max(f64::MIN_POSITIVE)
}

fn batch_gradient<O: RowObjective>(
    objective: &O,
    x: &DMatrix<f64>,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let n = objective.n_rows();
    if batch >= n {
        return objective.gradient(x, None);
    }
    let mut rows = sample(rng, n, batch).into_vec();
    rows.sort_unstable();
    objective.gradient(x, Some(&rows)) * (n as f64 / batch as f64)
}

fn minibatch_adagrad<O, P, R>(
    objective: &O,
    x0: DMatrix<f64>,
    cfg: &DriverConfig,
    step: f64,
    delta: f64,
    prox: &P,
    penalty: &R,
) -> Result<DriverOutput>
where
    O: RowObjective,
    P: Fn(&DMatrix<f64>, f64) -> (DMatrix<f64>, Option<f64>),
    R: Fn(&DMatrix<f64>, Option<f64>) -> f64,
{
    let (rows, cols) = objective.param_shape();
    let mut state = AdagradState::new(rows, cols, step, delta);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = x0;
    let initial = objective.value(&x) + penalty(&x, None);
    let mut trace = vec![initial];
    for iteration in 1..=cfg.iters {
        let grad = batch_gradient(objective, &x, cfg.batch, &mut rng);
        let direction = state.step(&grad);
        let tau = state.effective_step(&grad) * cfg.lambda;
        let (next, known) = prox(&(&x + &direction), tau);
        x = next;
        let value = objective.value(&x) + penalty(&x, known);
        check_divergence(iteration, value, initial)?;
        trace.push(value);
    }
    Ok(DriverOutput { params: x, trace })
}

/// Monotone FISTA with a backtracked, slowly growing step.
fn accelerated_loop<O, P, R>(
    objective: &O,
    x0: DMatrix<f64>,
    cfg: &DriverConfig,
    step: f64,
    prox: &P,
    penalty: &R,
) -> Result<DriverOutput>
where
    O: RowObjective,
    P: Fn(&DMatrix<f64>, f64) -> (DMatrix<f64>, Option<f64>),
    R: Fn(&DMatrix<f64>, Option<f64>) -> f64,
{
    let mut step = step;
    let mut x = x0.clone();
    let mut y = x0;
    let mut momentum: f64 = 1.0;
    let mut current = objective.value(&x) + penalty(&x, None);
    let initial = current;
    let mut trace = vec![current];
    for iteration in 1..=cfg.iters {
        let fy = objective.value(&y);
        let grad = objective.gradient(&y, None);
        let (z, fz) = loop {
            let (z, known) = prox(&(&y - &grad * step), step * cfg.lambda);
            let smooth = objective.value(&z);
            let d = &z - &y;
            let model = fy + grad.dot(&d) + d.norm_squared() / (2.0 * step);
            if smooth <= model + 1e-12 * fy.abs() || step < MIN_STEP {
                break (z.clone(), smooth + penalty(&z, known));
            }
            step *= 0.5;
        };
        check_divergence(iteration, fz, initial)?;
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let moved = fz <= current;
        let (x_new, f_new) = if moved { (z.clone(), fz) } else { (x.clone(), current) };
        y = &x_new + (&z - &x_new) * (momentum / next_momentum) + (&x_new - &x) * ((momentum - 1.0) / next_momentum);
        momentum = next_momentum;
        let change = current - f_new;
        x = x_new;
        current = f_new;
        trace.push(current);
        if moved && converged(change, current, cfg.tol) {
            break;
        }
        step *= STEP_GROWTH;
    }
    Ok(DriverOutput { params: x, trace })
}
