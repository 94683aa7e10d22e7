use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::GradientOracle;
use crate::error::{config, Error, Result};
use crate::linalg::{check_finite, norm};

/// Stochastic gradients `grad f(x) + zeta_t`, radially clipped to `clip_h`.
///
/// `zeta_t` is spherical Gaussian with standard deviation `noise_scale` per
/// coordinate, drawn from a ChaCha stream keyed by `(seed, run_id)` and
/// selected by `t`, so every step gets an independent, reproducible draw.
#[derive(Clone)]
pub struct NoisyOracle {
    base: Arc<dyn GradientOracle>,
    noise_scale: f64,
    clip_h: f64,
    seed: u64,
    run_id: u64,
}

impl std::fmt::Debug for NoisyOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoisyOracle")
            .field("base", &self.base.name())
            .field("noise_scale", &self.noise_scale)
            .field("clip_h", &self.clip_h)
            .field("seed", &self.seed)
            .field("run_id", &self.run_id)
            .finish()
    }
}

impl NoisyOracle {
    pub fn new(base: Arc<dyn GradientOracle>, noise_scale: f64, clip_h: f64, seed: u64) -> Result<Self> {
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return config(format!("noise_scale must be nonnegative, got {noise_scale}"));
        }
        if !(clip_h > 0.0) {
            return config(format!("clip_H must be positive, got {clip_h}"));
        }
        Ok(NoisyOracle { base, noise_scale, clip_h, seed, run_id: 0 })
    }

    /// Same oracle on an independent substream.
    pub fn for_run(&self, run_id: u64) -> Self {
        NoisyOracle { run_id, ..self.clone() }
    }

    pub fn base(&self) -> &dyn GradientOracle {
        self.base.as_ref()
    }

    pub fn clip_h(&self) -> f64 {
        self.clip_h
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn noisy_gradient(&self, x: &[f64], t: u64) -> Result<Vec<f64>> {
        check_finite(x, "query point")?;
        self.perturb(self.base.gradient(x), t)
    }

    /// Add the step-`t` noise draw to an already computed gradient and clip.
    /// Fails when the gradient itself exceeds the clipping radius, since the
    /// bound on stochastic gradients could then not hold.
    pub fn perturb(&self, grad: Vec<f64>, t: u64) -> Result<Vec<f64>> {
        let gnorm = norm(&grad);
        if !gnorm.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        if gnorm > self.clip_h {
            return Err(Error::Contract(format!(
                "gradient norm {gnorm} exceeds clip_H = {}",
                self.clip_h
            )));
        }
        if self.noise_scale == 0.0 {
            return Ok(grad);
        }
        let mut rng = self.stream(t);
        let mut g: Vec<f64> = grad
            .into_iter()
            .map(|gk| {
                let z: f64 = rng.sample(StandardNormal);
                gk + self.noise_scale * z
            })
            .collect();
        let n = norm(&g);
        if n > self.clip_h {
            let s = self.clip_h / n;
            g.iter_mut().for_each(|v| *v *= s);
        }
        Ok(g)
    }

    fn stream(&self, t: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, self.run_id));
        rng.set_stream(t);
        rng
    }
}

/// splitmix64 finalizer over the pair.
fn mix(seed: u64, run: u64) -> u64 {
    let mut z = seed ^ run.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic minibatch indices for step `t` (sampling without replacement).
pub fn minibatch_indices(n: usize, batch: usize, seed: u64, t: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0xBA7C));
    rng.set_stream(t);
    rand::seq::index::sample(&mut rng, n, batch.min(n)).into_vec()
}
