//! Second-moment whitening and generator conjugation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GeneratorSet, PairSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::sym_sqrt_pair;

/// `Σ^{-1/2}` and `Σ^{1/2}` of the ridge-regularised second moment `XᵀX/n + εI`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenTransform {
    pub forward: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub ridge: f64,
}

/// Ridge used when the caller has no preference: `1e-8 · tr(Σ) / d`.
pub fn default_ridge(points: &DMatrix<f64>) -> f64 {
    let sigma = second_moment(points);
    1e-8 * sigma.trace() / sigma.nrows() as f64
}

/// Uncentered sample second moment `XᵀX/n`.
pub fn second_moment(points: &DMatrix<f64>) -> DMatrix<f64> {
    points.tr_mul(points) / points.nrows() as f64
}

impl WhitenTransform {
    pub fn fit(points: &DMatrix<f64>, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(invalid("whitening ridge must be finite and >= 0"));
        }
        if points.nrows() == 0 {
            return Err(invalid("cannot whiten an empty point set"));
        }
        let d = points.ncols();
        let sigma = second_moment(points) + DMatrix::identity(d, d) * ridge;
        let (half, inv_half, eigs) = sym_sqrt_pair(&sigma);
        let top = eigs.max().max(0.0);
        let floor = 1e-13 * top.max(f64::MIN_POSITIVE);
        let null = eigs.iter().filter(|&&l| l <= floor).count();
        if null > 0 {
            return Err(Error::RankDeficient {
                null_directions: null,
            });
        }
        Ok(WhitenTransform {
            forward: inv_half,
            inverse: half,
            ridge,
        })
    }

    pub fn identity(d: usize) -> Self {
        WhitenTransform {
            forward: DMatrix::identity(d, d),
            inverse: DMatrix::identity(d, d),
            ridge: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.forward.nrows()
    }

    /// Rows `y_i = Σ^{-1/2} x_i`.
    pub fn apply_points(&self, points: &DMatrix<f64>) -> DMatrix<f64> {
        points * &self.forward
    }

    pub fn apply_pairs(&self, pairs: &PairSet) -> PairSet {
        pairs.map_points(&self.forward)
    }

    /// Generators acting on original coordinates → whitened coordinates.
    pub fn whiten_generators(&self, gens: &GeneratorSet) -> GeneratorSet {
        gens.conjugate(&self.forward, &self.inverse)
    }

    /// `A_orig = Σ^{1/2} A_white Σ^{-1/2}`.
    pub fn unwhiten_generators(&self, gens: &GeneratorSet) -> GeneratorSet {
        gens.conjugate(&self.inverse, &self.forward)
    }
}

/// Whitens a dataset: returns `X (Σ + εI)^{-1/2}` and the transform.
pub fn whiten(ds: &Dataset, ridge: f64) -> Result<(Dataset, WhitenTransform)> {
    let w = WhitenTransform::fit(ds.points(), ridge)?;
    let mut out = Dataset::new(w.apply_points(ds.points()))?;
    if let Some(side) = ds.grid() {
        out = out.with_grid(side)?;
    }
    Ok((out, w))
}
