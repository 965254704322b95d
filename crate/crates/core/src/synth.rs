//! Ground-truth generators and synthetic pair generation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GeneratorSet, PairSet};
use crate::error::{invalid, Error, Result};
use crate::expm::matrix_exp;

/// Step used for the rotation finite difference.
pub const ROTATION_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    H,
    V,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Rotation2d,
    ImageRotation,
    TranslateH,
    TranslateV,
    Custom(Vec<Vec<f64>>),
}

/// One transform kind or a list of them (one per simultaneous transform).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KindSpec {
    One(TransformKind),
    Many(Vec<TransformKind>),
}

impl KindSpec {
    pub fn kinds(&self) -> Vec<TransformKind> {
        match self {
            KindSpec::One(k) => vec![k.clone()],
            KindSpec::Many(ks) => ks.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exponential,
    #[default]
    FirstOrder,
}

fn default_low() -> f64 {
    0.05
}

fn default_high() -> f64 {
    0.2
}

/// Recipe for a synthetic ground-truth pair set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: KindSpec,
    #[serde(default)]
    pub side: Option<usize>,
    #[serde(default = "default_low")]
    pub strength_low: f64,
    #[serde(default = "default_high")]
    pub strength_high: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exactness: Exactness,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.strength_low > 0.0 && self.strength_low <= self.strength_high) {
            return Err(invalid("need 0 < strength_low <= strength_high"));
        }
        if !self.strength_high.is_finite() {
            return Err(invalid("strength_high must be finite"));
        }
        if self.n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        let kinds = self.kind.kinds();
        if kinds.len() != self.k {
            return Err(invalid(format!(
                "K = {} but {} transform kind(s) given",
                self.k,
                kinds.len()
            )));
        }
        Ok(())
    }

    /// Point dimension implied by the kinds and side.
    pub fn dim(&self) -> Result<usize> {
        let mut dim = None;
        for kind in self.kind.kinds() {
            let d = match &kind {
                TransformKind::Rotation2d => 2,
                TransformKind::Custom(rows) => rows.len(),
                _ => {
                    let s = self
                        .side
                        .ok_or_else(|| invalid("image transforms need `side`"))?;
                    s * s
                }
            };
            match dim {
                None => dim = Some(d),
                Some(prev) if prev != d => {
                    return Err(invalid("transform kinds imply different dimensions"))
                }
                _ => {}
            }
        }
        dim.ok_or_else(|| invalid("no transform kinds given"))
    }

    pub fn is_image(&self) -> bool {
        self.kind.kinds().iter().any(|k| {
            matches!(
                k,
                TransformKind::ImageRotation | TransformKind::TranslateH | TransformKind::TranslateV
            )
        })
    }

    pub fn generators(&self) -> Result<GeneratorSet> {
        let gens = self
            .kind
            .kinds()
            .iter()
            .map(|k| build_generator(k, self.side))
            .collect::<Result<Vec<_>>>()?;
        GeneratorSet::new(gens)
    }
}

fn build_generator(kind: &TransformKind, side: Option<usize>) -> Result<DMatrix<f64>> {
    let need_side = || side.ok_or_else(|| invalid("image transforms need `side`"));
    match kind {
        TransformKind::Rotation2d => Ok(rotation_generator_2d()),
        TransformKind::ImageRotation => image_rotation_generator(need_side()?),
        TransformKind::TranslateH => image_translation_generator(need_side()?, Axis::H),
        TransformKind::TranslateV => image_translation_generator(need_side()?, Axis::V),
        TransformKind::Custom(rows) => {
            let d = rows.len();
            if d == 0 || rows.iter().any(|r| r.len() != d) {
                return Err(invalid("custom generator must be a non-empty square matrix"));
            }
            let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
            if m.iter().any(|v| !v.is_finite()) {
                return Err(invalid("custom generator has non-finite entries"));
            }
            Ok(m)
        }
    }
}

/// Infinitesimal rotation of the plane, `[[0, -1], [1, 0]]`.
pub fn rotation_generator_2d() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

/// `S - I` where `S` shifts a row-major `s x s` image by one pixel (zero fill).
///
/// `Axis::H` moves content one column to the right, `Axis::V` one row down.
pub fn image_translation_generator(side: usize, axis: Axis) -> Result<DMatrix<f64>> {
    if side < 2 {
        return Err(invalid("translation generator needs side >= 2"));
    }
    let d = side * side;
    let mut a = -DMatrix::identity(d, d);
    for i in 0..side {
        for j in 0..side {
            let src = match axis {
                Axis::H if j > 0 => Some(i * side + j - 1),
                Axis::V if i > 0 => Some((i - 1) * side + j),
                _ => None,
            };
            if let Some(src) = src {
                a[(i * side + j, src)] += 1.0;
            }
        }
    }
    Ok(a)
}

/// Bilinear-interpolation matrix rotating an `s x s` grid by `theta` about its center.
pub fn image_rotation_matrix(side: usize, theta: f64) -> DMatrix<f64> {
    let d = side * side;
    let c = (side as f64 - 1.0) / 2.0;
    let (sin, cos) = theta.sin_cos();
    let mut r = DMatrix::zeros(d, d);
    for i in 0..side {
        for j in 0..side {
            let x = j as f64 - c;
            let y = i as f64 - c;
            // Inverse map: sample the source at R(-θ)(x, y).
            let fx = cos * x + sin * y + c;
            let fy = -sin * x + cos * y + c;
            let j0 = fx.floor();
            let i0 = fy.floor();
            let wx = fx - j0;
            let wy = fy - i0;
            let taps = [
                (i0, j0, (1.0 - wy) * (1.0 - wx)),
                (i0, j0 + 1.0, (1.0 - wy) * wx),
                (i0 + 1.0, j0, wy * (1.0 - wx)),
                (i0 + 1.0, j0 + 1.0, wy * wx),
            ];
            for (si, sj, w) in taps {
                if w == 0.0 || si < 0.0 || sj < 0.0 {
                    continue;
                }
                let (si, sj) = (si as usize, sj as usize);
                if si < side && sj < side {
                    r[(i * side + j, si * side + sj)] += w;
                }
            }
        }
    }
    r
}

/// Central finite difference of the bilinear rotation family at the identity.
pub fn image_rotation_generator(side: usize) -> Result<DMatrix<f64>> {
    if side < 3 {
        return Err(invalid("rotation generator needs side >= 3"));
    }
    let eps = ROTATION_FD_STEP;
    let plus = image_rotation_matrix(side, eps);
    let minus = image_rotation_matrix(side, -eps);
    Ok((plus - minus) / (2.0 * eps))
}

/// Applies known strengths to base points.
///
/// `first_order`: `x̄ = x + Σ_k t_k A_k x`. `exponential`: `x̄ = exp(t_1A_1)···exp(t_KA_K) x`.
pub fn synthesize(
    base: &DMatrix<f64>,
    gens: &GeneratorSet,
    strengths: &DMatrix<f64>,
    exactness: Exactness,
) -> Result<PairSet> {
    let (n, d) = base.shape();
    if gens.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("point dimension {}", gens.dim()),
            found: format!("{d}"),
        });
    }
    if strengths.shape() != (n, gens.len()) {
        return Err(Error::DimensionMismatch {
            expected: format!("strengths {n}x{}", gens.len()),
            found: format!("{:?}", strengths.shape()),
        });
    }
    let mut neighbor = DMatrix::zeros(n, d);
    for i in 0..n {
        let x: DVector<f64> = base.row(i).transpose();
        let t: Vec<f64> = strengths.row(i).iter().copied().collect();
        let y = match exactness {
            Exactness::FirstOrder => &x + gens.combine(&t) * &x,
            Exactness::Exponential => {
                let mut m = DMatrix::identity(d, d);
                for (g, &tk) in gens.generators().iter().zip(&t) {
                    m *= matrix_exp(g, tk)?;
                }
                m * &x
            }
        };
        neighbor.set_row(i, &y.transpose());
    }
    PairSet::synthetic(base.clone(), neighbor, strengths.clone())
}

/// Symmetric strengths: `|t|` uniform on `[low, high]` with an independent random sign.
pub fn draw_strengths(n: usize, k: usize, low: f64, high: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |_, _| {
        let mag = if high > low {
            rng.random_range(low..=high)
        } else {
            low
        };
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    })
}

/// Draws strengths from the spec and applies its generators to the first `n` base rows.
pub fn generate_pairs(spec: &SyntheticSpec, base: &Dataset) -> Result<(PairSet, GeneratorSet)> {
    spec.validate()?;
    let d = spec.dim()?;
    if base.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("base dimension {d}"),
            found: format!("{}", base.dim()),
        });
    }
    if base.len() < spec.n {
        return Err(invalid(format!(
            "spec asks for {} pairs but base has {} points",
            spec.n,
            base.len()
        )));
    }
    let gens = spec.generators()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t = draw_strengths(spec.n, spec.k, spec.strength_low, spec.strength_high, &mut rng);
    let rows = base.points().rows(0, spec.n).into_owned();
    let pairs = synthesize(&rows, &gens, &t, spec.exactness)?;
    Ok((pairs, gens))
}

/// Isotropic Gaussian points, `E[xxᵀ] = I`.
pub fn isotropic_points(n: usize, d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Smooth random images: a few Gaussian blobs on a small pixel-noise floor.
pub fn blob_images(n: usize, side: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let d = side * side;
    let scale = side as f64 / 8.0;
    let mut out = DMatrix::zeros(n, d);
    for row in 0..n {
        let blobs: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.5..1.5),
                    rng.random_range(0.0..side as f64 - 1.0),
                    rng.random_range(0.0..side as f64 - 1.0),
                    rng.random_range(0.8..2.0) * scale,
                )
            })
            .collect();
        for i in 0..side {
            for j in 0..side {
                let mut v = 0.0;
                for &(amp, ci, cj, w) in &blobs {
                    let r2 = (i as f64 - ci).powi(2) + (j as f64 - cj).powi(2);
                    v += amp * (-r2 / (2.0 * w * w)).exp();
                }
                v += 0.1 * rng.sample::<f64, _>(StandardNormal);
                out[(row, i * side + j)] = v;
            }
        }
    }
    out
}

/// Base points matching the spec: blob images for image kinds, isotropic Gaussians otherwise.
pub fn synthetic_base(spec: &SyntheticSpec) -> Result<Dataset> {
    let d = spec.dim()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    if spec.is_image() {
        let side = spec.side.ok_or_else(|| invalid("image transforms need `side`"))?;
        Dataset::new(blob_images(spec.n, side, &mut rng))?.with_grid(side)
    } else {
        Dataset::new(isotropic_points(spec.n, d, &mut rng))
    }
}
