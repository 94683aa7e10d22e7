use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GradientOracle;
use crate::error::{config, Result};

/// `f(x) = 1/2 sum_k c_k x_k^2` with `c_k` log-spaced in `[1, condition]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    curvature: Vec<f64>,
}

pub fn quadratic(dim: usize, condition: f64) -> Result<Quadratic> {
    if dim == 0 {
        return config("quadratic needs dim >= 1");
    }
    if !(condition >= 1.0 && condition.is_finite()) {
        return config(format!("condition number must be >= 1, got {condition}"));
    }
    let curvature = (0..dim)
        .map(|k| {
            if dim == 1 {
                1.0
            } else {
                condition.powf(k as f64 / (dim - 1) as f64)
            }
        })
        .collect();
    Ok(Quadratic { curvature })
}

impl Quadratic {
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }
}

impl GradientOracle for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.curvature.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.curvature.iter().zip(x).map(|(c, x)| c * x * x).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.curvature.iter().zip(x).map(|(c, x)| c * x).collect()
    }

    fn lipschitz(&self) -> Option<f64> {
        self.curvature.last().copied()
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let q = quadratic(1, 1.0).unwrap();
        assert_eq!(q.value(&[2.0]), 2.0);
        assert_eq!(q.gradient(&[2.0]), vec![2.0]);
        let q = quadratic(2, 10.0).unwrap();
        assert!((q.value(&[1.0, 1.0]) - 5.5).abs() < 1e-15);
        assert_eq!(q.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(q.lipschitz(), Some(10.0));
    }

    #[test]
    fn log_spacing() {
        let q = quadratic(3, 100.0).unwrap();
        let c = q.curvature();
        assert_eq!(c[0], 1.0);
        assert!((c[1] - 10.0).abs() < 1e-12);
        assert!((c[2] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(quadratic(0, 2.0).is_err());
        assert!(quadratic(3, 0.5).is_err());
    }
}
