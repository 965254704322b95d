//! Kernelised transformation learning: tangent vector fields from dual-form kernel weights.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PairSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::{nuclear_norm, Svd};
use crate::neighbors::k_distinct_neighbors;
use crate::solver::{prox_trace_norm_with_norm, run_atom_problem, AtomProblem, SolverConfig};

/// Largest accepted condition number of `κ + λ₂ I`.
pub const MAX_KERNEL_CONDITION: f64 = 1e12;

/// `exp(-‖x - y‖ / σ)`.
pub fn laplacian_kernel(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    (-dist / sigma).exp()
}

/// `κ(a_i, b_j)` for rows of `a` and `b`.
pub fn kernel_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let ar: Vec<Vec<f64>> = a.row_iter().map(|r| r.iter().copied().collect()).collect();
    let br: Vec<Vec<f64>> = b.row_iter().map(|r| r.iter().copied().collect()).collect();
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| laplacian_kernel(&ar[i], &br[j], sigma))
}

/// Median of all pairwise distances between distinct rows.
pub fn median_pairwise_distance(points: &DMatrix<f64>) -> f64 {
    let n = points.nrows();
    let mut dists = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push((points.row(i) - points.row(j)).norm());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    dists[dists.len() / 2]
}

/// `(κ(x, x) + λ₂ I)⁻¹`, refusing ill-conditioned systems.
fn regularized_inverse(points: &DMatrix<f64>, sigma: f64, lambda2: f64) -> Result<DMatrix<f64>> {
    let r = points.nrows();
    let system = kernel_matrix(points, points, sigma) + DMatrix::identity(r, r) * lambda2;
    let eig = system.clone().symmetric_eigen();
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_KERNEL_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose())
}

/// Smoothed bases `h_j(x'_q) = e_jᵀ (κ(x, x) + λ₂ I)⁻¹ κ(x, x'_q)`, as a `points x queries` matrix.
pub fn smoothed_basis(
    points: &DMatrix<f64>,
    queries: &DMatrix<f64>,
    sigma: f64,
    lambda2: f64,
) -> Result<DMatrix<f64>> {
    Ok(regularized_inverse(points, sigma, lambda2)? * kernel_matrix(points, queries, sigma))
}

fn default_k() -> usize {
    1
}

fn default_lambda1() -> f64 {
    1e-4
}

/// Settings for [`fit_kernel`]; unset `sigma` / `lambda2` use the median-distance and `1e-3 r` defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    #[serde(default = "default_lambda1")]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda2: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            k: 1,
            lambda1: default_lambda1(),
            lambda2: None,
            sigma: None,
            solver: SolverConfig::default(),
        }
    }
}

/// A fitted set of `K` vector fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelModel {
    /// Deduplicated base points, `r x d`.
    pub train_points: DMatrix<f64>,
    /// Base point (row of `train_points`) of each atom.
    pub atom_point: Vec<usize>,
    /// `x̄_jl - x_jl` per atom.
    pub diffs: DMatrix<f64>,
    /// Full weight matrix over atoms, one row per training pair.
    pub alpha: DMatrix<f64>,
    /// Rank-`K` atom weights (`atoms x K`) defining the fields.
    pub field_weights: DMatrix<f64>,
    /// Per-pair strengths (`pairs x K`).
    pub strengths: DMatrix<f64>,
    pub sigma: f64,
    pub lambda2: f64,
    pub lambda1: f64,
    pub objective_trace: Vec<f64>,
    #[serde(skip)]
    inverse: Option<DMatrix<f64>>,
}

/// Unique rows in order of first appearance and the row -> unique map.
fn deduplicate(points: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique = Vec::new();
    let mut map = Vec::with_capacity(points.nrows());
    for i in 0..points.nrows() {
        let key: Vec<u64> = points.row(i).iter().map(|v| (v + 0.0).to_bits()).collect();
        let next = seen.len();
        let id = *seen.entry(key).or_insert_with(|| {
            unique.push(i);
            next
        });
        map.push(id);
    }
    (points.select_rows(&unique), map)
}

/// Fits trace-norm regularised kernel weights to neighbour differences.
pub fn fit_kernel(pairs: &PairSet, cfg: &KernelConfig) -> Result<KernelModel> {
    cfg.solver.validate()?;
    if cfg.k == 0 {
        return Err(invalid("K must be >= 1"));
    }
    if !(cfg.lambda1 >= 0.0) {
        return Err(invalid("lambda1 must be >= 0"));
    }
    let (train_points, atom_point) = deduplicate(pairs.base());
    let r = train_points.nrows();
    let sigma = cfg.sigma.unwrap_or_else(|| median_pairwise_distance(&train_points));
    let lambda2 = cfg.lambda2.unwrap_or(1e-3 * r as f64);
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma must be > 0"));
    }
    if !(lambda2 > 0.0) {
        return Err(invalid("lambda2 must be > 0"));
    }
    let inverse = regularized_inverse(&train_points, sigma, lambda2)?;
    let h = &inverse * kernel_matrix(&train_points, &train_points, sigma);

    let n = pairs.len();
    let diffs = pairs.differences();
    let coeff = DMatrix::from_fn(n, n, |i, a| h[(atom_point[a], atom_point[i])]);
    let problem = AtomProblem::new(coeff, diffs.clone(), diffs.clone(), cfg.solver.loss);
    let mut solver = cfg.solver.clone();
    solver.lambda = cfg.lambda1;
    let svt = solver.svt(n, n);
    let out = run_atom_problem(&problem, &solver, |v, tau| prox_trace_norm_with_norm(v, tau, &svt), nuclear_norm)?;

    let k = cfg.k.min(n);
    let svd = Svd::new(&out.0);
    let mut field_weights = DMatrix::zeros(n, cfg.k);
    let mut strengths = DMatrix::zeros(n, cfg.k);
    for j in 0..k {
        if svd.s[j] <= 0.0 {
            continue;
        }
        let mut w = svd.v_t.row(j).transpose() * svd.s[j];
        let mut t = svd.u.column(j).into_owned();
        if t.sum() < 0.0 {
            w = -w;
            t = -t;
        }
        field_weights.set_column(j, &w);
        strengths.set_column(j, &t);
    }
    Ok(KernelModel {
        train_points,
        atom_point,
        diffs,
        alpha: out.0,
        field_weights,
        strengths,
        sigma,
        lambda2,
        lambda1: cfg.lambda1,
        objective_trace: out.1,
        inverse: Some(inverse),
    })
}

impl KernelModel {
    /// Assembles a model from stored parts and caches the kernel inverse.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        train_points: DMatrix<f64>,
        atom_point: Vec<usize>,
        diffs: DMatrix<f64>,
        alpha: DMatrix<f64>,
        field_weights: DMatrix<f64>,
        strengths: DMatrix<f64>,
        sigma: f64,
        lambda2: f64,
        lambda1: f64,
    ) -> Result<Self> {
        let atoms = diffs.nrows();
        if atom_point.len() != atoms
            || field_weights.nrows() != atoms
            || diffs.ncols() != train_points.ncols()
            || atom_point.iter().any(|&j| j >= train_points.nrows())
        {
            return Err(invalid("kernel model parts are inconsistent"));
        }
        if !(sigma > 0.0) || !(lambda2 > 0.0) {
            return Err(invalid("kernel model needs sigma > 0 and lambda2 > 0"));
        }
        let mut model = KernelModel {
            train_points,
            atom_point,
            diffs,
            alpha,
            field_weights,
            strengths,
            sigma,
            lambda2,
            lambda1,
            objective_trace: Vec::new(),
            inverse: None,
        };
        model.prepare()?;
        Ok(model)
    }

    /// Rebuilds the cached kernel inverse after deserialisation.
    pub fn prepare(&mut self) -> Result<()> {
        if self.inverse.is_none() {
            self.inverse = Some(regularized_inverse(&self.train_points, self.sigma, self.lambda2)?);
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.field_weights.ncols()
    }

    pub fn dim(&self) -> usize {
        self.train_points.ncols()
    }

    /// Field `k` evaluated at each query row (`m x d` per field).
    pub fn predict_fields(&self, queries: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        if queries.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("dimension {}", self.dim()),
                found: format!("{}", queries.ncols()),
            });
        }
        let owned;
        let inverse = match &self.inverse {
            Some(inv) => inv,
            None => {
                owned = regularized_inverse(&self.train_points, self.sigma, self.lambda2)?;
                &owned
            }
        };
        let basis = inverse * kernel_matrix(&self.train_points, queries, self.sigma);
        let r = self.train_points.nrows();
        Ok((0..self.k())
            .map(|k| {
                // Collapse atoms onto their base points before smoothing.
                let mut per_point = DMatrix::zeros(r, self.dim());
                for (a, &j) in self.atom_point.iter().enumerate() {
                    let row = per_point.row(j) + self.diffs.row(a) * self.field_weights[(a, k)];
                    per_point.set_row(j, &row);
                }
                basis.transpose() * per_point
            })
            .collect())
    }

    /// `f_1(x'), …, f_K(x')`.
    pub fn predict_field(&self, x: &[f64]) -> Result<Vec<DVector<f64>>> {
        let q = DMatrix::from_row_slice(1, x.len(), x);
        Ok(self
            .predict_fields(&q)?
            .into_iter()
            .map(|f| f.row(0).transpose())
            .collect())
    }
}

/// Held-out agreement between a learned field and the circle's tangent field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleReport {
    pub r: usize,
    /// Mean cosine similarity after a single global sign flip.
    pub cosine: f64,
    /// Mean distance between sign-fixed unit fields.
    pub error: f64,
}

/// `r` points at uniformly random angles on the unit circle.
pub fn circle_points(r: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(r, 2);
    for i in 0..r {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        m[(i, 0)] = theta.cos();
        m[(i, 1)] = theta.sin();
    }
    m
}

/// Compares the first field with the counter-clockwise unit tangent at `queries` on the circle.
pub fn circle_field_agreement(model: &KernelModel, queries: &DMatrix<f64>) -> Result<(f64, f64)> {
    let f = model
        .predict_fields(queries)?
        .into_iter()
        .next()
        .ok_or_else(|| invalid("model has no fields"))?;
    let m = queries.nrows();
    let mut unit = Vec::with_capacity(m);
    for i in 0..m {
        let (x, y) = (queries[(i, 0)], queries[(i, 1)]);
        let norm = (x * x + y * y).sqrt();
        let tangent = [-y / norm, x / norm];
        let v = [f[(i, 0)], f[(i, 1)]];
        let vn = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let u = if vn > 0.0 { [v[0] / vn, v[1] / vn] } else { [0.0, 0.0] };
        unit.push((u, tangent));
    }
    let dots: Vec<f64> = unit.iter().map(|(u, t)| u[0] * t[0] + u[1] * t[1]).collect();
    let sign = if dots.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let cosine = dots.iter().map(|d| sign * d).sum::<f64>() / m as f64;
    let error = unit
        .iter()
        .map(|(u, t)| ((sign * u[0] - t[0]).powi(2) + (sign * u[1] - t[1]).powi(2)).sqrt())
        .sum::<f64>()
        / m as f64;
    Ok((cosine, error))
}

/// Fits one field on `r` random circle points and scores it on `held_out` fresh points.
pub fn circle_benchmark(r: usize, held_out: usize, seed: u64, cfg: &KernelConfig) -> Result<CircleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = Dataset::new(circle_points(r, &mut rng))?;
    rng.set_stream(1);
    let test = circle_points(held_out, &mut rng);
    let pairs = k_distinct_neighbors(&train, cfg.k)?;
    let model = fit_kernel(&pairs, cfg)?;
    let (cosine, error) = circle_field_agreement(&model, &test)?;
    Ok(CircleReport { r, cosine, error })
}
