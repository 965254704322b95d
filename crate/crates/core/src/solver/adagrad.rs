use nalgebra::DMatrix;

/// Per-coordinate Adagrad accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub sum_sq: DMatrix<f64>,
    pub step: f64,
    pub delta: f64,
}

impl AdagradState {
    pub fn new(rows: usize, cols: usize, step: f64, delta: f64) -> Self {
        AdagradState {
            sum_sq: DMatrix::zeros(rows, cols),
            step,
            delta,
        }
    }

    /// Accumulates `g²` and returns the update `-η g / sqrt(G + δ)`.
    pub fn step(&mut self, grad: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(grad.shape(), self.sum_sq.shape(), "gradient shape mismatch");
        self.sum_sq.zip_apply(grad, |acc, g| *acc += g * g);
        let mut update = grad.clone();
        update.zip_apply(&self.sum_sq, |g, acc| {
            *g = if *g == 0.0 {
                0.0
            } else {
                -self.step * *g / (acc + self.delta).sqrt()
            };
        });
        update
    }

    /// Scalar step along `grad` matching the preconditioned one: `Σ s_ij g_ij² / Σ g_ij²`
    /// with `s_ij = η / sqrt(G_ij + δ)`.
    pub fn effective_step(&self, grad: &DMatrix<f64>) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&acc, &g) in self.sum_sq.iter().zip(grad.iter()) {
            if acc > 0.0 {
                let g2 = g * g;
                num += self.step / (acc + self.delta).sqrt() * g2;
                den += g2;
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}
