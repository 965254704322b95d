//! Recovery metrics for learned generators.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::GeneratorSet;
use crate::error::{invalid, Error, Result};
use crate::linalg::spectral_norm;

/// Largest exhaustive matching problem accepted by [`matched_error`].
pub const MAX_MATCHED_K: usize = 6;

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    spectral_norm(m)
}

/// Scales every nonzero generator to unit operator norm.
pub fn normalize_generators(gens: &GeneratorSet) -> GeneratorSet {
    let mats = gens
        .generators()
        .iter()
        .map(|g| {
            let n = operator_norm(g);
            if n > 0.0 {
                g / n
            } else {
                g.clone()
            }
        })
        .collect();
    GeneratorSet::new(mats)
        .expect("scaling preserves shape and finiteness")
        .with_normalized_flag(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// `permutation[k]` is the estimate matched to true generator `k`.
    pub permutation: Vec<usize>,
    /// Sign applied to that estimate.
    pub signs: Vec<f64>,
    pub per_transform_error: Vec<f64>,
    pub total: f64,
}

/// Minimum total operator-norm error over injective sign-aware assignments.
pub fn matched_error(est: &GeneratorSet, truth: &GeneratorSet) -> Result<MatchReport> {
    if est.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("dimension {}", truth.dim()),
            found: format!("{}", est.dim()),
        });
    }
    let (ke, kt) = (est.len(), truth.len());
    if ke < kt {
        return Err(invalid(format!("{ke} estimates cannot cover {kt} true generators")));
    }
    if kt > MAX_MATCHED_K {
        return Err(invalid(format!("exhaustive matching supports K <= {MAX_MATCHED_K}")));
    }
    let est = normalize_generators(est);
    let truth = normalize_generators(truth);
    // cost[t][e] = (error, sign)
    let cost: Vec<Vec<(f64, f64)>> = truth
        .generators()
        .iter()
        .map(|a| {
            est.generators()
                .iter()
                .map(|b| {
                    let plus = operator_norm(&(b - a));
                    let minus = operator_norm(&(b + a));
                    if minus < plus {
                        (minus, -1.0)
                    } else {
                        (plus, 1.0)
                    }
                })
                .collect()
        })
        .collect();

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut current = Vec::with_capacity(kt);
    let mut used = vec![false; ke];
    search(&cost, &mut current, &mut used, 0.0, &mut best);
    let (_, permutation) = best.expect("at least one assignment exists");
    let per_transform_error: Vec<f64> = permutation
        .iter()
        .enumerate()
        .map(|(t, &e)| cost[t][e].0)
        .collect();
    let signs = permutation.iter().enumerate().map(|(t, &e)| cost[t][e].1).collect();
    Ok(MatchReport {
        permutation,
        signs,
        total: per_transform_error.iter().sum(),
        per_transform_error,
    })
}

fn search(
    cost: &[Vec<(f64, f64)>],
    current: &mut Vec<usize>,
    used: &mut [bool],
    acc: f64,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if current.len() == cost.len() {
        if best.as_ref().is_none_or(|(b, _)| acc < *b) {
            *best = Some((acc, current.clone()));
        }
        return;
    }
    let t = current.len();
    for e in 0..used.len() {
        if used[e] {
            continue;
        }
        used[e] = true;
        current.push(e);
        search(cost, current, used, acc + cost[t][e].0, best);
        current.pop();
        used[e] = false;
    }
}
