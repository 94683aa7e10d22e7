use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{softplus, Dataset, GradientOracle};
use crate::error::{config, Result};
use crate::linalg::dot;

/// Mean binary cross-entropy of a linear classifier (no bias term) on a
/// synthetic dataset labelled by a random hyperplane plus margin noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    data: Dataset,
}

const LABEL_NOISE: f64 = 0.1;

pub fn logistic_regression(n_samples: usize, dim: usize, seed: u64) -> Result<LogisticRegression> {
    if n_samples == 0 || dim == 0 {
        return config("logistic regression needs n_samples >= 1 and dim >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_true: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut features = Vec::with_capacity(n_samples * dim);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let row: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let noise: f64 = rng.sample(StandardNormal);
        labels.push(usize::from(dot(&row, &w_true) + LABEL_NOISE * noise > 0.0));
        features.extend(row);
    }
    Ok(LogisticRegression { data: Dataset { features, labels, dim } })
}

impl LogisticRegression {
    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    fn sign(&self, i: usize) -> f64 {
        if self.data.labels[i] == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Loss and gradient of a single sample.
    pub fn sample_loss_grad(&self, w: &[f64], i: usize) -> (f64, Vec<f64>) {
        let row = self.data.row(i);
        let margin = self.sign(i) * dot(w, row);
        // d/dw log(1 + exp(-margin)) = -y * sigmoid(-margin) * x
        let s = -self.sign(i) * sigmoid(-margin);
        (softplus(-margin), row.iter().map(|x| s * x).collect())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl GradientOracle for LogisticRegression {
    fn name(&self) -> &str {
        "logistic_regression"
    }

    fn dim(&self) -> usize {
        self.data.dim
    }

    fn value(&self, w: &[f64]) -> f64 {
        let n = self.data.len();
        (0..n).map(|i| softplus(-self.sign(i) * dot(w, self.data.row(i)))).sum::<f64>() / n as f64
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let all: Vec<usize> = (0..self.data.len()).collect();
        self.minibatch_gradient(w, &all).expect("finite-sum objective")
    }

    fn lipschitz(&self) -> Option<f64> {
        let n = self.data.len();
        let mean_sq = (0..n).map(|i| dot(self.data.row(i), self.data.row(i))).sum::<f64>() / n as f64;
        Some(0.25 * mean_sq)
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim()).map(|_| rng.random_range(-0.1..=0.1)).collect()
    }

    fn n_samples(&self) -> Option<usize> {
        Some(self.data.len())
    }

    fn minibatch_gradient(&self, w: &[f64], indices: &[usize]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; self.dim()];
        for &i in indices {
            let row = self.data.row(i);
            let s = -self.sign(i) * sigmoid(-self.sign(i) * dot(w, row));
            for (gk, xk) in g.iter_mut().zip(row) {
                *gk += s * xk;
            }
        }
        let n = indices.len().max(1) as f64;
        g.iter_mut().for_each(|v| *v /= n);
        Some(g)
    }

    fn accuracy(&self, w: &[f64]) -> Option<f64> {
        let n = self.data.len();
        let hits = (0..n)
            .filter(|&i| usize::from(dot(w, self.data.row(i)) > 0.0) == self.data.labels[i])
            .count();
        Some(hits as f64 / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_ln2() {
        let p = logistic_regression(50, 4, 3).unwrap();
        assert!((p.value(&[0.0; 4]) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn full_batch_is_mean_of_samples() {
        let p = logistic_regression(40, 3, 9).unwrap();
        let w = [0.3, -1.2, 0.7];
        let full = p.gradient(&w);
        let mut mean = vec![0.0; 3];
        for i in 0..40 {
            let (_, g) = p.sample_loss_grad(&w, i);
            for k in 0..3 {
                mean[k] += g[k] / 40.0;
            }
        }
        for k in 0..3 {
            assert!((full[k] - mean[k]).abs() <= 1e-12);
        }
        let loss_mean: f64 = (0..40).map(|i| p.sample_loss_grad(&w, i).0).sum::<f64>() / 40.0;
        assert!((p.value(&w) - loss_mean).abs() <= 1e-12);
    }

    #[test]
    fn generation_is_pure_in_seed() {
        assert_eq!(logistic_regression(30, 2, 5).unwrap(), logistic_regression(30, 2, 5).unwrap());
        assert_ne!(logistic_regression(30, 2, 5).unwrap(), logistic_regression(30, 2, 6).unwrap());
    }

    #[test]
    fn both_classes_present() {
        let p = logistic_regression(200, 5, 1).unwrap();
        let ones = p.dataset().labels.iter().filter(|&&l| l == 1).count();
        assert!(ones > 50 && ones < 150);
    }
}
