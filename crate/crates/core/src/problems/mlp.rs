use std::f64::consts::PI;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};

use super::{Dataset, GradientOracle};
use crate::error::{config, Result};

pub const MLP_SAMPLES: usize = 200;
pub const MAX_HIDDEN: usize = 64;
const ARC_NOISE: f64 = 0.1;

/// Two interleaved half circles with Gaussian jitter, `n` points split evenly
/// between labels 0 (upper arc) and 1 (lower arc).
pub fn two_arcs(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = n / 2;
    let lower = n - upper;
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    let spaced = |i: usize, count: usize| {
        if count <= 1 {
            0.0
        } else {
            PI * i as f64 / (count - 1) as f64
        }
    };
    for i in 0..upper {
        let th = spaced(i, upper);
        features.push(th.cos());
        features.push(th.sin());
        labels.push(0);
    }
    for i in 0..lower {
        let th = spaced(i, lower);
        features.push(1.0 - th.cos());
        features.push(0.5 - th.sin());
        labels.push(1);
    }
    for v in features.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += noise * z;
    }
    Dataset { features, labels, dim: 2 }
}

/// 2-16-2 style classifier: tanh hidden layer, softmax output, mean
/// cross-entropy over the two-arc dataset.
///
/// Parameter layout: `W1 (hidden x 2) | b1 (hidden) | W2 (2 x hidden) | b2 (2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyMlp {
    hidden: usize,
    data: Dataset,
}

pub fn tiny_mlp(hidden: usize, seed: u64) -> Result<TinyMlp> {
    if hidden == 0 || hidden > MAX_HIDDEN {
        return config(format!("tiny_mlp hidden width must be in 1..={MAX_HIDDEN}, got {hidden}"));
    }
    Ok(TinyMlp { hidden, data: two_arcs(MLP_SAMPLES, ARC_NOISE, seed) })
}

struct Forward {
    hidden: [f64; MAX_HIDDEN],
    probs: [f64; 2],
}

impl TinyMlp {
    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn layout(&self) -> [Range<usize>; 4] {
        let h = self.hidden;
        [0..2 * h, 2 * h..3 * h, 3 * h..5 * h, 5 * h..5 * h + 2]
    }

    fn forward(&self, p: &[f64], input: &[f64]) -> Forward {
        let [w1, b1, w2, b2] = self.layout();
        let (w1, b1, w2, b2) = (&p[w1], &p[b1], &p[w2], &p[b2]);
        let mut hidden = [0.0; MAX_HIDDEN];
        for j in 0..self.hidden {
            hidden[j] = (w1[2 * j] * input[0] + w1[2 * j + 1] * input[1] + b1[j]).tanh();
        }
        let mut logits = [b2[0], b2[1]];
        for (c, z) in logits.iter_mut().enumerate() {
            *z += (0..self.hidden).map(|j| w2[c * self.hidden + j] * hidden[j]).sum::<f64>();
        }
        let top = logits[0].max(logits[1]);
        let e = [(logits[0] - top).exp(), (logits[1] - top).exp()];
        let s = e[0] + e[1];
        Forward { hidden, probs: [e[0] / s, e[1] / s] }
    }

    /// Mean loss and backpropagated gradient over a set of sample indices.
    pub fn batch_loss_grad(&self, p: &[f64], indices: &[usize]) -> (f64, Vec<f64>) {
        let h = self.hidden;
        let [r_w1, r_b1, r_w2, r_b2] = self.layout();
        let w2 = &p[r_w2.clone()];
        let mut grad = vec![0.0; self.dim()];
        let mut loss = 0.0;
        for &i in indices {
            let input = self.data.row(i);
            let label = self.data.labels[i];
            let fw = self.forward(p, input);
            loss -= fw.probs[label].max(f64::MIN_POSITIVE).ln();
            // dL/dz = softmax - onehot
            let mut dz = fw.probs;
            dz[label] -= 1.0;
            for c in 0..2 {
                grad[r_b2.start + c] += dz[c];
                for j in 0..h {
                    grad[r_w2.start + c * h + j] += dz[c] * fw.hidden[j];
                }
            }
            for j in 0..h {
                let dh = dz[0] * w2[j] + dz[1] * w2[h + j];
                let da = dh * (1.0 - fw.hidden[j] * fw.hidden[j]);
                grad[r_b1.start + j] += da;
                grad[r_w1.start + 2 * j] += da * input[0];
                grad[r_w1.start + 2 * j + 1] += da * input[1];
            }
        }
        let n = indices.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    fn all(&self) -> Vec<usize> {
        (0..self.data.len()).collect()
    }
}

impl GradientOracle for TinyMlp {
    fn name(&self) -> &str {
        "tiny_mlp"
    }

    fn dim(&self) -> usize {
        5 * self.hidden + 2
    }

    fn value(&self, p: &[f64]) -> f64 {
        self.batch_loss_grad(p, &self.all()).0
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.batch_loss_grad(p, &self.all()).1
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    /// Uniform first layer, small Gaussian output layer, zero output bias.
    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [w1, b1, w2, b2] = self.layout();
        let out = Normal::new(0.0, 0.1).expect("valid normal");
        let mut p = vec![0.0; self.dim()];
        for v in &mut p[w1] {
            *v = rng.random_range(-1.0..=1.0);
        }
        for v in &mut p[b1] {
            *v = rng.random_range(-0.5..=0.5);
        }
        for v in &mut p[w2] {
            *v = rng.sample(out);
        }
        for v in &mut p[b2] {
            *v = 0.0;
        }
        p
    }

    fn n_samples(&self) -> Option<usize> {
        Some(self.data.len())
    }

    fn minibatch_gradient(&self, p: &[f64], indices: &[usize]) -> Option<Vec<f64>> {
        Some(self.batch_loss_grad(p, indices).1)
    }

    fn accuracy(&self, p: &[f64]) -> Option<f64> {
        let hits = (0..self.data.len())
            .filter(|&i| {
                let fw = self.forward(p, self.data.row(i));
                let pred = usize::from(fw.probs[1] > fw.probs[0]);
                pred == self.data.labels[i]
            })
            .count();
        Some(hits as f64 / self.data.len() as f64)
    }

    fn param_groups(&self) -> Vec<Range<usize>> {
        self.layout().to_vec()
    }
}
