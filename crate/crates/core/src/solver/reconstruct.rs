use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::prox::Svt;
use super::AlphaSolution;
use crate::data::{GeneratorSet, PairSet};
use crate::disentangle::canonical_sign;
use crate::error::{invalid, Result};
use crate::linalg::{randomized_svd, Svd};
use crate::whiten::WhitenTransform;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Generators, per-point strengths and the spectrum they came from.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub generators: GeneratorSet,
    /// `n x K`.
    pub strengths: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Set when `σ_K / σ_1 < 1e-10`; the trailing components are zero.
    pub rank_deficient: bool,
}

/// `A_k = Σ_j w_jk (x̄_j - x_j) x_jᵀ M` for atoms at `sample_idx`, in the pairs' coordinates.
pub fn atom_generators(
    pairs: &PairSet,
    sample_idx: &[usize],
    weights: &DMatrix<f64>,
    metric: Option<&DMatrix<f64>>,
) -> Vec<DMatrix<f64>> {
    let xs = pairs.base().select_rows(sample_idx);
    let ds = pairs.differences().select_rows(sample_idx);
    weights
        .column_iter()
        .map(|w| {
            let mut scaled = xs.clone();
            for (mut row, &wj) in scaled.row_iter_mut().zip(w.iter()) {
                row *= wj;
            }
            let a = ds.transpose() * scaled;
            match metric {
                Some(m) => a * m,
                None => a,
            }
        })
        .collect()
}

/// Rank-`K` factorisation of `α` into generators and strengths.
///
/// `pairs` are in original coordinates; `whiten` must be the transform the solver used.
pub fn reconstruct_generators(
    sol: &AlphaSolution,
    pairs: &PairSet,
    k: usize,
    whiten: Option<&WhitenTransform>,
) -> Result<Reconstruction> {
    let (n, r) = sol.alpha.shape();
    if n != pairs.len() || r != sol.sample_idx.len() {
        return Err(invalid("alpha shape does not match pairs and samples"));
    }
    if k == 0 || k > n.min(r) {
        return Err(invalid(format!("K = {k} must lie in 1..={}", n.min(r))));
    }
    let svt = sol
        .config
        .as_ref()
        .map(|c| c.svt(n, r))
        .unwrap_or(Svt::Exact);
    let svd = match svt {
        Svt::Randomized {
            oversample,
            power_iters,
            seed,
            ..
        } => randomized_svd(&sol.alpha, k, oversample, power_iters, &mut ChaCha8Rng::seed_from_u64(seed)),
        Svt::Exact => Svd::new(&sol.alpha),
    };
    let top = svd.s.get(0).copied().unwrap_or(0.0);
    let live = |j: usize| j < svd.s.len() && top > 0.0 && svd.s[j] >= RANK_TOLERANCE * top;
    let rank_deficient = !(0..k).all(live);

    let mut weights = DMatrix::zeros(r, k);
    let mut strengths = DMatrix::zeros(n, k);
    for j in (0..k).filter(|&j| live(j)) {
        weights.set_column(j, &(svd.v_t.row(j).transpose() * svd.s[j]));
        strengths.set_column(j, &svd.u.column(j));
    }

    let working = match whiten {
        Some(w) => w.apply_pairs(pairs),
        None => pairs.clone(),
    };
    let gens = atom_generators(&working, &sol.sample_idx, &weights, sol.atom_metric.as_ref());
    let mut gens = GeneratorSet::new(gens)?;
    if let Some(w) = whiten {
        gens = w.unwhiten_generators(&gens);
    }
    let mut mats = gens.into_generators();
    for (j, a) in mats.iter_mut().enumerate() {
        if canonical_sign(a) < 0.0 {
            *a = -&*a;
            let flipped = -strengths.column(j);
            strengths.set_column(j, &flipped);
        }
    }
    Ok(Reconstruction {
        generators: GeneratorSet::new(mats)?,
        strengths,
        singular_values: svd.s.iter().take(k).copied().collect(),
        rank_deficient,
    })
}
