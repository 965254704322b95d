//! Dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

/// Thin SVD with singular values sorted in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl Svd {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let (r, c) = m.shape();
        if r == 0 || c == 0 {
            return Svd {
                u: DMatrix::zeros(r, 0),
                s: DVector::zeros(0),
                v_t: DMatrix::zeros(0, c),
            };
        }
        let svd = m.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let s = svd.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        let k = s.len();
        let u = DMatrix::from_fn(r, k, |i, j| u[(i, order[j])]);
        let v_t = DMatrix::from_fn(k, c, |i, j| v_t[(order[i], j)]);
        let s = DVector::from_fn(k, |i, _| s[order[i]]);
        Svd { u, s, v_t }
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let top = self.s.get(0).copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&v| v > rel_tol * top).count()
    }

    /// Reassembles `U diag(f(s)) Vᵀ`.
    pub fn recompose_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= f(self.s[j]);
        }
        us * &self.v_t
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows().min(m.ncols()) <= 64 {
        return m.clone().singular_values().max();
    }
    power_spectral_norm(m, 1e-10)
}

/// Power iteration on MᵀM, relative tolerance `tol` on the estimate.
pub fn power_spectral_norm(m: &DMatrix<f64>, tol: f64) -> f64 {
    let n = m.ncols();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_7).fract());
    let mut est = 0.0;
    for _ in 0..10_000 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
        let w = m.tr_mul(&(m * &v));
        let next = w.norm().sqrt();
        if (next - est).abs() <= tol * next {
            return next;
        }
        est = next;
        v = w;
    }
    est
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().sum()
}

/// Moore-Penrose pseudoinverse with singular values below `rel_cutoff · σ_max` discarded.
pub fn pinv(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let svd = Svd::new(m);
    let top = svd.s.get(0).copied().unwrap_or(0.0);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for k in 0..svd.s.len() {
        let s = svd.s[k];
        if s <= rel_cutoff * top || s == 0.0 {
            continue;
        }
        let v = svd.v_t.row(k).transpose();
        let u = svd.u.column(k);
        out += (v / s) * u.transpose();
    }
    out
}

/// Square roots of a symmetric PSD matrix: (M^{1/2}, M^{-1/2}) and the eigenvalues.
pub fn sym_sqrt_pair(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let q = &eig.eigenvectors;
    let vals = eig.eigenvalues.clone();
    let d = m.nrows();
    let mut half = DMatrix::zeros(d, d);
    let mut inv_half = DMatrix::zeros(d, d);
    for k in 0..d {
        let lam = vals[k].max(0.0);
        let col = q.column(k);
        let outer = col * col.transpose();
        half += &outer * lam.sqrt();
        if lam > 0.0 {
            inv_half += outer / lam.sqrt();
        }
    }
    (half, inv_half, vals)
}

/// Row-major vectorisation of a square matrix.
pub fn vec_row_major(m: &DMatrix<f64>) -> DVector<f64> {
    let (r, c) = m.shape();
    DVector::from_fn(r * c, |i, _| m[(i / c, i % c)])
}

/// Inverse of [`vec_row_major`].
pub fn mat_row_major(v: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Gaussian range-finder SVD truncated to `rank` components.
pub fn randomized_svd<R: Rng + ?Sized>(
    m: &DMatrix<f64>,
    rank: usize,
    oversample: usize,
    power_iters: usize,
    rng: &mut R,
) -> Svd {
    let (rows, cols) = m.shape();
    let l = (rank + oversample).min(rows.min(cols));
    if l == rows.min(cols) {
        return Svd::new(m);
    }
    let omega = DMatrix::from_fn(cols, l, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = orthonormal_basis(&(m * omega));
    for _ in 0..power_iters {
        let z = orthonormal_basis(&m.tr_mul(&q));
        q = orthonormal_basis(&(m * z));
    }
    let b = q.tr_mul(m);
    let small = Svd::new(&b);
    let u = &q * small.u;
    let k = rank.min(small.s.len());
    Svd {
        u: u.columns(0, k).into_owned(),
        s: small.s.rows(0, k).into_owned(),
        v_t: small.v_t.rows(0, k).into_owned(),
    }
}

fn orthonormal_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
