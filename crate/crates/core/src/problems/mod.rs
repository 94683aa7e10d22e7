//! Deterministic objectives with exact gradients, plus a bounded-noise wrapper
//! and a central-difference gradient checker.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod dataset;
mod gradcheck;
mod logistic;
mod mlp;
mod noisy;
mod quadratic;
mod rosenbrock;

pub use dataset::Dataset;
pub use gradcheck::{check_gradient, GradientCheck};
pub use logistic::{logistic_regression, LogisticRegression};
pub use mlp::{tiny_mlp, two_arcs, TinyMlp};
pub use noisy::{minibatch_indices, NoisyOracle};
pub use quadratic::{quadratic, Quadratic};
pub use rosenbrock::{rosenbrock, Rosenbrock};

/// A differentiable objective `f: R^d -> R`.
pub trait GradientOracle: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Known Lipschitz constant of the gradient, if any.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Known bound on the gradient norm over the region of interest, if any.
    fn grad_bound(&self) -> Option<f64> {
        None
    }

    /// `f(x*)`, if known.
    fn lower_bound(&self) -> Option<f64> {
        None
    }

    /// Seeded starting point.
    fn initial_point(&self, seed: u64) -> Vec<f64>;

    /// Number of samples for finite-sum objectives.
    fn n_samples(&self) -> Option<usize> {
        None
    }

    /// Mean gradient over the given sample indices (finite-sum objectives only).
    fn minibatch_gradient(&self, _x: &[f64], _indices: &[usize]) -> Option<Vec<f64>> {
        None
    }

    /// Training accuracy in `[0, 1]` for classification problems.
    fn accuracy(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Parameter blocks (layers) for per-group conjugate coefficients.
    fn param_groups(&self) -> Vec<Range<usize>> {
        vec![0..self.dim()]
    }
}

/// `n` points drawn uniformly from `[-scale, scale]^dim`.
pub fn probe_points(dim: usize, n: usize, seed: u64, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-scale..=scale)).collect())
        .collect()
}

/// `log(1 + exp(z))` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}
