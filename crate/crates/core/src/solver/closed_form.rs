//! Closed-form atom weights for synthetic pairs with known strengths.

use super::reconstruct::atom_generators;
use super::AlphaSolution;
use crate::data::{GeneratorSet, PairSet, Provenance};
use crate::error::{invalid, Error, Result};
use crate::linalg::pinv;
use crate::whiten::{second_moment, WhitenTransform};

/// Weights that reproduce the generators from every pair.
///
/// One transform: `α_i = 1/(r t_i)` with atoms right-multiplied by `Σ⁻¹`. Several:
/// `α_ik = t_ik / (σ̂²_k r)` with `σ̂²_k` the sample second moment of column `k`.
/// The returned `alpha` is the `n x r` matrix `t wᵀ`; `atom_weights` holds `w`.
/// `whiten` fixes the working coordinates (use [`WhitenTransform::identity`] for none).
pub fn closed_form_weights(pairs: &PairSet, whiten: &WhitenTransform) -> Result<AlphaSolution> {
    if pairs.provenance() != Provenance::Synthetic {
        return Err(invalid("closed-form weights need synthetic pairs with known strengths"));
    }
    let t = pairs
        .strengths()
        .ok_or_else(|| invalid("synthetic pairs lack strengths"))?;
    let (r, k) = t.shape();
    let rf = r as f64;
    let weights = if k == 1 {
        if let Some(i) = t.column(0).iter().position(|&v| v == 0.0) {
            return Err(Error::DivisionByZero(format!("strength t_{i} is zero")));
        }
        t.map(|v| 1.0 / (rf * v))
    } else {
        let mut w = t.clone();
        for (j, mut col) in w.column_iter_mut().enumerate() {
            let second = col.norm_squared() / rf;
            if second == 0.0 {
                return Err(Error::DivisionByZero(format!("strength column {j} is all zero")));
            }
            col /= second * rf;
        }
        w
    };
    let working = whiten.apply_pairs(pairs);
    let metric = pinv(&second_moment(working.base()), 1e-12);
    Ok(AlphaSolution {
        alpha: t * weights.transpose(),
        sample_idx: (0..r).collect(),
        objective_trace: Vec::new(),
        config: None,
        whiten: Some(whiten.clone()),
        atom_metric: Some(metric),
        atom_weights: Some(weights),
    })
}

/// Per-transform generators `A_k = Σ_j w_jk (x̄_j - x_j) x_jᵀ M` from closed-form weights,
/// returned in original coordinates.
pub fn generators_from_atom_weights(sol: &AlphaSolution, pairs: &PairSet) -> Result<GeneratorSet> {
    let weights = sol
        .atom_weights
        .as_ref()
        .ok_or_else(|| invalid("solution carries no per-transform atom weights"))?;
    let working = match &sol.whiten {
        Some(w) => w.apply_pairs(pairs),
        None => pairs.clone(),
    };
    let gens = GeneratorSet::new(atom_generators(
        &working,
        &sol.sample_idx,
        weights,
        sol.atom_metric.as_ref(),
    ))?;
    Ok(match &sol.whiten {
        Some(w) => w.unwhiten_generators(&gens),
        None => gens,
    })
}

