use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{nuclear_norm, randomized_svd, Svd};

/// How singular values are obtained inside the trace-norm prox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Svt {
    Exact,
    /// Gaussian range finder of width `rank + oversample` with `power_iters` passes.
    Randomized {
        rank: usize,
        oversample: usize,
        power_iters: usize,
        seed: u64,
    },
}

/// Singular-value soft thresholding: `U max(S - tau, 0) Vᵀ`.
pub fn prox_trace_norm(m: &DMatrix<f64>, tau: f64, mode: &Svt) -> DMatrix<f64> {
    prox_trace_norm_with_norm(m, tau, mode).0
}

/// [`prox_trace_norm`] plus the trace norm of the result when the thresholding ran.
pub fn prox_trace_norm_with_norm(m: &DMatrix<f64>, tau: f64, mode: &Svt) -> (DMatrix<f64>, Option<f64>) {
    if tau <= 0.0 || m.is_empty() {
        return (m.clone(), None);
    }
    let svd = match *mode {
        Svt::Exact => Svd::new(m),
        Svt::Randomized {
            rank,
            oversample,
            power_iters,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            randomized_svd(m, rank + oversample, 0, power_iters, &mut rng)
        }
    };
    let norm = svd.s.iter().map(|s| (s - tau).max(0.0)).sum();
    (svd.recompose_with(|s| (s - tau).max(0.0)), Some(norm))
}

/// `‖Y‖_* / sqrt(L)` for the rows of `x` listed in `rows` (repeats allowed).
pub fn nuclear_norm_estimate(x: &DMatrix<f64>, rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    nuclear_norm(&x.select_rows(rows)) / (rows.len() as f64).sqrt()
}

/// Estimates `‖X‖_* / sqrt(n)` from `L` rows sampled with replacement.
pub fn subsampled_trace_norm(x: &DMatrix<f64>, l: usize, seed: u64) -> f64 {
    let n = x.nrows();
    let l = l.clamp(1, n.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<usize> = (0..l).map(|_| rng.random_range(0..n)).collect();
    nuclear_norm_estimate(x, &rows)
}
