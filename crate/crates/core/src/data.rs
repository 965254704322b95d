//! Point sets, neighbour pairs and generator collections.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite, spectral_norm};

/// Observed points, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: DMatrix<f64>,
    grid: Option<usize>,
}

impl Dataset {
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(invalid("dataset needs at least one point of dimension >= 1"));
        }
        if !all_finite(&points) {
            return Err(invalid("dataset contains non-finite entries"));
        }
        Ok(Dataset { points, grid: None })
    }

    /// Attaches an `s x s` image grid; requires `d = s²`.
    pub fn with_grid(mut self, side: usize) -> Result<Self> {
        if side * side != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("d = {}", side * side),
                found: format!("d = {}", self.dim()),
            });
        }
        self.grid = Some(side);
        Ok(self)
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn into_points(self) -> DMatrix<f64> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn grid(&self) -> Option<usize> {
        self.grid
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    NearestNeighbor,
    Synthetic,
}

/// Aligned base points `x_i` and neighbours `x̄_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    base: DMatrix<f64>,
    neighbor: DMatrix<f64>,
    strengths: Option<DMatrix<f64>>,
    provenance: Provenance,
}

impl PairSet {
    pub fn nearest_neighbor(base: DMatrix<f64>, neighbor: DMatrix<f64>) -> Result<Self> {
        Self::check_shapes(&base, &neighbor)?;
        Ok(PairSet {
            base,
            neighbor,
            strengths: None,
            provenance: Provenance::NearestNeighbor,
        })
    }

    pub fn synthetic(
        base: DMatrix<f64>,
        neighbor: DMatrix<f64>,
        strengths: DMatrix<f64>,
    ) -> Result<Self> {
        Self::check_shapes(&base, &neighbor)?;
        if strengths.nrows() != base.nrows() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} strength rows", base.nrows()),
                found: format!("{}", strengths.nrows()),
            });
        }
        if !all_finite(&strengths) {
            return Err(invalid("strengths contain non-finite entries"));
        }
        Ok(PairSet {
            base,
            neighbor,
            strengths: Some(strengths),
            provenance: Provenance::Synthetic,
        })
    }

    fn check_shapes(base: &DMatrix<f64>, neighbor: &DMatrix<f64>) -> Result<()> {
        if base.shape() != neighbor.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", base.shape()),
                found: format!("{:?}", neighbor.shape()),
            });
        }
        if base.nrows() == 0 || base.ncols() == 0 {
            return Err(invalid("pair set is empty"));
        }
        if !all_finite(base) || !all_finite(neighbor) {
            return Err(invalid("pair set contains non-finite entries"));
        }
        Ok(())
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn neighbor(&self) -> &DMatrix<f64> {
        &self.neighbor
    }

    pub fn strengths(&self) -> Option<&DMatrix<f64>> {
        self.strengths.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.base.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.base.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.base.ncols()
    }

    /// Rows `x̄_i - x_i`.
    pub fn differences(&self) -> DMatrix<f64> {
        &self.neighbor - &self.base
    }

    /// Applies `y = M x` to every base and neighbour point.
    pub fn map_points(&self, m: &DMatrix<f64>) -> PairSet {
        PairSet {
            base: &self.base * m.transpose(),
            neighbor: &self.neighbor * m.transpose(),
            strengths: self.strengths.clone(),
            provenance: self.provenance,
        }
    }

    /// Keeps the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> PairSet {
        PairSet {
            base: self.base.select_rows(rows),
            neighbor: self.neighbor.select_rows(rows),
            strengths: self.strengths.as_ref().map(|t| t.select_rows(rows)),
            provenance: self.provenance,
        }
    }
}

/// `K` generator matrices of size `d x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    generators: Vec<DMatrix<f64>>,
    normalized: bool,
}

impl GeneratorSet {
    pub fn new(generators: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| invalid("generator set needs at least one matrix"))?;
        let d = first.nrows();
        for (k, g) in generators.iter().enumerate() {
            if g.shape() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{d}x{d}"),
                    found: format!("generator {k} is {:?}", g.shape()),
                });
            }
            if !all_finite(g) {
                return Err(invalid(format!("generator {k} has non-finite entries")));
            }
        }
        Ok(GeneratorSet {
            generators,
            normalized: false,
        })
    }

    pub(crate) fn with_normalized_flag(mut self, flag: bool) -> Self {
        self.normalized = flag;
        self
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn into_generators(self) -> Vec<DMatrix<f64>> {
        self.generators
    }

    pub fn get(&self, k: usize) -> &DMatrix<f64> {
        &self.generators[k]
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Checks the unit-operator-norm invariant when the flag is set.
    pub fn check_normalization(&self) -> bool {
        !self.normalized
            || self.generators.iter().all(|g| {
                let n = spectral_norm(g);
                n == 0.0 || (n - 1.0).abs() <= 1e-9
            })
    }

    /// `Σ_k t_k A_k`.
    pub fn combine(&self, t: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (g, &c) in self.generators.iter().zip(t) {
            out += g * c;
        }
        out
    }

    /// Conjugates every generator: `M A M⁻¹` given both factors.
    pub fn conjugate(&self, left: &DMatrix<f64>, right: &DMatrix<f64>) -> GeneratorSet {
        GeneratorSet {
            generators: self.generators.iter().map(|g| left * g * right).collect(),
            normalized: false,
        }
    }
}
