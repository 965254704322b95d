//! Matrix exponential by scaling and squaring with a truncated Taylor series.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::linalg::all_finite;

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(t A)`.
pub fn matrix_exp(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(invalid("matrix exponential needs a square matrix"));
    }
    if !all_finite(a) || !t.is_finite() {
        return Err(invalid("matrix exponential input is not finite"));
    }
    let d = a.nrows();
    let scaled = a * t;
    let norm = one_norm(&scaled);
    // Scale so the series argument has 1-norm at most 1/2.
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = scaled / 2f64.powi(squarings);

    let mut result = DMatrix::identity(d, d);
    let mut term = DMatrix::identity(d, d);
    for m in 1..64 {
        term = &term * &x / m as f64;
        result += &term;
        if one_norm(&term) < 1e-16 * one_norm(&result) || one_norm(&term) == 0.0 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}
