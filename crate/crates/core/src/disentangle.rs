//! SVD disentangling of learned transforms and per-point strength estimation.

use nalgebra::{DMatrix, DVector};

use crate::data::{GeneratorSet, PairSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::{mat_row_major, pinv, vec_row_major, Svd};

/// Components whose singular value falls below this fraction of the largest are dropped.
pub const DISENTANGLE_RANK_TOL: f64 = 1e-10;

/// Output of [`disentangle`].
#[derive(Debug, Clone)]
pub struct DisentangledSet {
    /// `Â_k = S_kk mat(V_k)`.
    pub generators: GeneratorSet,
    /// `t̂ = U`, orthonormal columns.
    pub strengths: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Column means subtracted from the input strengths.
    pub removed_means: Vec<f64>,
    /// Number of input components lost to numerical rank deficiency.
    pub dropped: usize,
}

/// +1 or -1 such that the flipped matrix has a non-negative entry sum.
///
/// Matrices whose entries sum to (numerically) zero fall back to the first
/// non-negligible entry being positive.
pub fn canonical_sign(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 1.0;
    }
    let sum = m.sum();
    if sum.abs() > 1e-9 * scale {
        return sum.signum();
    }
    // Row-major scan so the choice does not depend on storage order.
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v.abs() > 1e-9 * scale {
                return v.signum();
            }
        }
    }
    1.0
}

/// Re-expresses `Σ_k t_ik A_k` through the SVD of `Z_i = Σ_k t_ik vec(A_k)`.
pub fn disentangle(t: &DMatrix<f64>, gens: &GeneratorSet) -> Result<DisentangledSet> {
    let (n, k) = t.shape();
    if k != gens.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} strength columns", gens.len()),
            found: format!("{k}"),
        });
    }
    let d = gens.dim();
    if k > n.min(d * d) {
        return Err(invalid(format!("K = {k} exceeds min(n, d²)")));
    }
    let removed_means: Vec<f64> = t.column_iter().map(|c| c.mean()).collect();
    let mut centered = t.clone();
    for (mut col, &m) in centered.column_iter_mut().zip(&removed_means) {
        col.add_scalar_mut(-m);
    }

    // Z = t M with M the K x d² stack of vec(A_k); factor through a thin QR of t.
    let stack = DMatrix::from_fn(k, d * d, |kk, j| {
        let a = gens.get(kk);
        a[(j / d, j % d)]
    });
    let qr = centered.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let svd = Svd::new(&(r * stack));
    let top = svd.s.get(0).copied().unwrap_or(0.0);
    let keep = svd
        .s
        .iter()
        .take(k)
        .filter(|&&s| top > 0.0 && s > DISENTANGLE_RANK_TOL * top)
        .count();
    if keep == 0 {
        return Err(invalid("strengths or generators are all zero; nothing to disentangle"));
    }
    let u = q * &svd.u;
    let mut strengths = DMatrix::zeros(n, keep);
    let mut generators = Vec::with_capacity(keep);
    for j in 0..keep {
        let v: Vec<f64> = svd.v_t.row(j).iter().map(|x| x * svd.s[j]).collect();
        let mut a = mat_row_major(&v, d);
        let mut col: DVector<f64> = u.column(j).into_owned();
        if canonical_sign(&a) < 0.0 {
            a = -a;
            col = -col;
        }
        strengths.set_column(j, &col);
        generators.push(a);
    }
    Ok(DisentangledSet {
        generators: GeneratorSet::new(generators)?,
        strengths,
        singular_values: svd.s.iter().take(keep).copied().collect(),
        removed_means,
        dropped: k - keep,
    })
}

/// Per-point least-squares strengths `t_i = [A_1 x_i | … | A_K x_i]⁺ (x̄_i - x_i)`.
///
/// Returns the strengths and the number of (point, generator) columns that were
/// numerically zero and therefore fixed at 0.
pub fn estimate_strengths(pairs: &PairSet, gens: &GeneratorSet) -> Result<(DMatrix<f64>, usize)> {
    if gens.dim() != pairs.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("dimension {}", pairs.dim()),
            found: format!("{}", gens.dim()),
        });
    }
    let k = gens.len();
    let diffs = pairs.differences();
    let mut out = DMatrix::zeros(pairs.len(), k);
    let mut zero_columns = 0;
    for i in 0..pairs.len() {
        let x = pairs.base().row(i).transpose();
        let cols: Vec<(usize, DVector<f64>)> = gens
            .generators()
            .iter()
            .map(|a| a * &x)
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-12)
            .collect();
        zero_columns += k - cols.len();
        if cols.is_empty() {
            continue;
        }
        let basis = DMatrix::from_columns(&cols.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>());
        let coef = pinv(&basis, 1e-12) * diffs.row(i).transpose();
        for (slot, (kk, _)) in cols.iter().enumerate() {
            out[(i, *kk)] = coef[slot];
        }
    }
    Ok((out, zero_columns))
}

/// `vec(A)` rows for each generator; handy for Frobenius inner products.
pub fn generator_vectors(gens: &GeneratorSet) -> Vec<DVector<f64>> {
    gens.generators().iter().map(vec_row_major).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn centered(mut t: DMatrix<f64>) -> DMatrix<f64> {
        for mut c in t.column_iter_mut() {
            let m = c.mean();
            c.add_scalar_mut(-m);
        }
        t
    }

    #[test]
    fn single_transform_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = centered(gaussian(12, 1, &mut rng));
        let a = gaussian(3, 3, &mut rng);
        let out = disentangle(&t, &GeneratorSet::new(vec![a.clone()]).unwrap()).unwrap();
        let tn = t.norm();
        let sign = canonical_sign(&a);
        assert!((out.generators.get(0) - &a * (tn * sign)).amax() < 1e-10);
        assert!((&out.strengths - &t * (sign / tn)).amax() < 1e-12);
        for i in 0..12 {
            let lhs = out.generators.get(0) * out.strengths[(i, 0)];
            assert!((lhs - &a * t[(i, 0)]).amax() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_strengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = centered(gaussian(30, 3, &mut rng));
        let gens = GeneratorSet::new((0..3).map(|_| gaussian(4, 4, &mut rng)).collect()).unwrap();
        let out = disentangle(&t, &gens).unwrap();
        let gram = out.strengths.transpose() * &out.strengths;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-10);
        assert!(out.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn mixing_does_not_change_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = centered(gaussian(25, 2, &mut rng));
        let gens: Vec<DMatrix<f64>> = (0..2).map(|_| gaussian(3, 3, &mut rng)).collect();
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -0.5, 1.5]);
        let w_inv = w.clone().try_inverse().unwrap();
        // t' = t W⁻ᵀ... keep Σ_k t_ik A_k fixed: t' = t Wᵀ, A'_k = Σ_j (W⁻¹)_jk A_j.
        let t2 = &t * w.transpose();
        let mixed: Vec<DMatrix<f64>> = (0..2)
            .map(|k| &gens[0] * w_inv[(0, k)] + &gens[1] * w_inv[(1, k)])
            .collect();
        let a = disentangle(&t, &GeneratorSet::new(gens).unwrap()).unwrap();
        let b = disentangle(&t2, &GeneratorSet::new(mixed).unwrap()).unwrap();
        for k in 0..2 {
            assert!((a.generators.get(k) - b.generators.get(k)).amax() < 1e-9);
            assert!((a.strengths.column(k) - b.strengths.column(k)).amax() < 1e-9);
        }
    }

    #[test]
    fn rank_deficient_input_drops_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = centered(gaussian(10, 2, &mut rng));
        let a = gaussian(3, 3, &mut rng);
        let out = disentangle(&t, &GeneratorSet::new(vec![a.clone(), a * 2.0]).unwrap()).unwrap();
        assert_eq!(out.generators.len(), 1);
        assert_eq!(out.dropped, 1);
    }

    #[test]
    fn means_are_removed_and_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = gaussian(10, 1, &mut rng).add_scalar(3.0);
        let gens = GeneratorSet::new(vec![gaussian(2, 2, &mut rng)]).unwrap();
        let out = disentangle(&t, &gens).unwrap();
        assert!((out.removed_means[0] - t.mean()).abs() < 1e-12);
        assert!(out.strengths.column(0).sum().abs() < 1e-10);
    }

    #[test]
    fn exact_strengths_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = gaussian(15, 4, &mut rng);
        let gens = GeneratorSet::new((0..2).map(|_| gaussian(4, 4, &mut rng)).collect()).unwrap();
        let t = gaussian(15, 2, &mut rng);
        let mut nb = x.clone();
        for i in 0..15 {
            let xi = x.row(i).transpose();
            let step = gens.combine(&[t[(i, 0)], t[(i, 1)]]) * &xi;
            nb.set_row(i, &(xi + step).transpose());
        }
        let pairs = PairSet::nearest_neighbor(x.clone(), nb).unwrap();
        let (est, zeros) = estimate_strengths(&pairs, &gens).unwrap();
        assert_eq!(zeros, 0);
        assert!((est - &t).amax() < 1e-10);

        let same = PairSet::nearest_neighbor(x.clone(), x).unwrap();
        let (est, _) = estimate_strengths(&same, &gens).unwrap();
        assert!(est.amax() < 1e-14);
    }

    #[test]
    fn orthogonal_noise_leaves_strengths_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = gaussian(6, 5, &mut rng);
        let gens = GeneratorSet::new((0..2).map(|_| gaussian(5, 5, &mut rng)).collect()).unwrap();
        let t = gaussian(6, 2, &mut rng);
        let mut clean = x.clone();
        let mut noisy = x.clone();
        for i in 0..6 {
            let xi = x.row(i).transpose();
            let basis = DMatrix::from_columns(&[gens.get(0) * &xi, gens.get(1) * &xi]);
            let step = &basis * DVector::from_vec(vec![t[(i, 0)], t[(i, 1)]]);
            // Project random noise onto the orthogonal complement of the span.
            let e = DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
            let proj = &basis * pinv(&basis, 1e-14) * &e;
            clean.set_row(i, &(&xi + &step).transpose());
            noisy.set_row(i, &(&xi + &step + (e - proj)).transpose());
        }
        let (a, _) = estimate_strengths(&PairSet::nearest_neighbor(x.clone(), clean).unwrap(), &gens).unwrap();
        let (b, _) = estimate_strengths(&PairSet::nearest_neighbor(x, noisy).unwrap(), &gens).unwrap();
        assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn zero_generator_column_is_zeroed() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let nb = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let gens = GeneratorSet::new(vec![
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
            DMatrix::zeros(2, 2),
        ])
        .unwrap();
        let (t, zeros) = estimate_strengths(&PairSet::nearest_neighbor(x, nb).unwrap(), &gens).unwrap();
        assert_eq!(zeros, 3);
        assert!((t[(0, 0)] - 0.5).abs() < 1e-14);
        assert_eq!(t[(0, 1)], 0.0);
    }
}
