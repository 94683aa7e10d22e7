use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GradientOracle;
use crate::error::{config, Result};

/// Chained Rosenbrock over consecutive coordinate pairs:
/// `sum_i 100 (x_{2i+1} - x_{2i}^2)^2 + (1 - x_{2i})^2`, minimum 0 at all-ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Rosenbrock {
    dim: usize,
}

pub fn rosenbrock(dim: usize) -> Result<Rosenbrock> {
    if dim < 2 || dim % 2 != 0 {
        return config(format!("rosenbrock needs an even dim >= 2, got {dim}"));
    }
    Ok(Rosenbrock { dim })
}

impl GradientOracle for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.dim);
        for p in x.chunks_exact(2) {
            let r = p[1] - p[0] * p[0];
            g.push(-400.0 * p[0] * r - 2.0 * (1.0 - p[0]));
            g.push(200.0 * r);
        }
        g
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    /// The classic `(-1.2, 1)` start in every pair, jittered by up to 0.1 per coordinate.
    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim)
            .map(|k| {
                let base = if k % 2 == 0 { -1.2 } else { 1.0 };
                base + rng.random_range(-0.1..=0.1)
            })
            .collect()
    }
}
