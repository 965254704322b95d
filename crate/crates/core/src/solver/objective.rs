use nalgebra::DMatrix;

use super::Loss;

/// A smooth data-fit term that decomposes over rows.
pub(crate) trait RowObjective {
    fn n_rows(&self) -> usize;
    fn param_shape(&self) -> (usize, usize);
    fn value(&self, params: &DMatrix<f64>) -> f64;
    /// Gradient of the sum over `rows` (all rows when `None`).
    fn gradient(&self, params: &DMatrix<f64>, rows: Option<&[usize]>) -> DMatrix<f64>;
}

/// Data fit `Σ_i ℓ(Σ_j α_ij c_ij a_j - y_i)` over atoms `a_j` with fixed coefficients `c_ij`.
///
/// For the sampled relaxation `c_ij = x_iᵀ x_j` and `a_j = x̄_j - x_j`; the kernel variant
/// swaps in smoothed kernel weights for `c_ij`.
#[derive(Debug, Clone)]
pub struct AtomProblem {
    /// `n x r`.
    pub coeff: DMatrix<f64>,
    /// `r x d`.
    pub atoms: DMatrix<f64>,
    /// `n x d`.
    pub targets: DMatrix<f64>,
    pub loss: Loss,
}

impl AtomProblem {
    pub fn new(coeff: DMatrix<f64>, atoms: DMatrix<f64>, targets: DMatrix<f64>, loss: Loss) -> Self {
        assert_eq!(coeff.ncols(), atoms.nrows(), "coefficient/atom mismatch");
        assert_eq!(coeff.nrows(), targets.nrows(), "coefficient/target mismatch");
        assert_eq!(atoms.ncols(), targets.ncols(), "atom/target dimension mismatch");
        AtomProblem {
            coeff,
            atoms,
            targets,
            loss,
        }
    }

    /// Row `i` is `Σ_j α_ij c_ij a_j`.
    pub fn predict(&self, alpha: &DMatrix<f64>) -> DMatrix<f64> {
        alpha.component_mul(&self.coeff) * &self.atoms
    }

    pub fn residuals(&self, alpha: &DMatrix<f64>) -> DMatrix<f64> {
        self.predict(alpha) - &self.targets
    }

    /// Data-fit value (without the trace-norm penalty).
    pub fn data_fit(&self, alpha: &DMatrix<f64>) -> f64 {
        let r = self.residuals(alpha);
        r.row_iter().map(|row| self.loss.row(row.norm_squared()).0).sum()
    }

    /// Gradient of [`AtomProblem::data_fit`] over all rows.
    pub fn gradient_full(&self, alpha: &DMatrix<f64>) -> DMatrix<f64> {
        self.gradient(alpha, None)
    }
}

impl RowObjective for AtomProblem {
    fn n_rows(&self) -> usize {
        self.coeff.nrows()
    }

    fn param_shape(&self) -> (usize, usize) {
        self.coeff.shape()
    }

    fn value(&self, params: &DMatrix<f64>) -> f64 {
        self.data_fit(params)
    }

    fn gradient(&self, params: &DMatrix<f64>, rows: Option<&[usize]>) -> DMatrix<f64> {
        match rows {
            None => {
                let mut q = self.residuals(params);
                for mut row in q.row_iter_mut() {
                    let (_, c) = self.loss.row(row.norm_squared());
                    row *= c;
                }
                (q * self.atoms.transpose()).component_mul(&self.coeff)
            }
            Some(rows) => {
                let coeff = self.coeff.select_rows(rows);
                let alpha = params.select_rows(rows);
                let mut q = alpha.component_mul(&coeff) * &self.atoms - self.targets.select_rows(rows);
                for mut row in q.row_iter_mut() {
                    let (_, c) = self.loss.row(row.norm_squared());
                    row *= c;
                }
                let sub = (q * self.atoms.transpose()).component_mul(&coeff);
                let mut grad = DMatrix::zeros(params.nrows(), params.ncols());
                for (k, &i) in rows.iter().enumerate() {
                    let mut dst = grad.row_mut(i);
                    dst += sub.row(k);
                }
                grad
            }
        }
    }
}
