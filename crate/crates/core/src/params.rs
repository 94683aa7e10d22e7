//! Hyper-parameters shared by CG-like-Adam and the baseline optimizers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Formula used for the conjugate coefficient `gamma_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConjugateMethod {
    /// Hestenes-Stiefel.
    Hs,
    /// Fletcher-Reeves.
    Fr,
    /// Polak-Ribiere-Polyak.
    Prp,
    /// Dai-Yuan.
    Dy,
    /// Hager-Zhang.
    Hz,
    /// `gamma_t = 0`: the optimizer reduces to bias-corrected AMSGrad.
    None,
}

impl ConjugateMethod {
    pub const ALL: [ConjugateMethod; 6] = [
        ConjugateMethod::Hs,
        ConjugateMethod::Fr,
        ConjugateMethod::Prp,
        ConjugateMethod::Dy,
        ConjugateMethod::Hz,
        ConjugateMethod::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConjugateMethod::Hs => "hs",
            ConjugateMethod::Fr => "fr",
            ConjugateMethod::Prp => "prp",
            ConjugateMethod::Dy => "dy",
            ConjugateMethod::Hz => "hz",
            ConjugateMethod::None => "none",
        }
    }
}

impl fmt::Display for ConjugateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConjugateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" => Ok(ConjugateMethod::Hs),
            "fr" => Ok(ConjugateMethod::Fr),
            "prp" => Ok(ConjugateMethod::Prp),
            "dy" => Ok(ConjugateMethod::Dy),
            "hz" => Ok(ConjugateMethod::Hz),
            "none" => Ok(ConjugateMethod::None),
            other => config(format!("unknown conjugate method `{other}`")),
        }
    }
}

/// First-moment averaging schedule `t -> beta_1t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "beta11", rename_all = "snake_case")]
pub enum Beta1Schedule {
    /// `beta_1t = beta11` for every `t`.
    Constant(f64),
    /// `beta_1t = beta11 / t`.
    InverseTime(f64),
}

impl Beta1Schedule {
    /// Value at step `t` (1-based).
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Beta1Schedule::Constant(b) => b,
            Beta1Schedule::InverseTime(b) => b / t as f64,
        }
    }

    /// `beta_11`, the base of every first-moment bias correction.
    pub fn initial(&self) -> f64 {
        match *self {
            Beta1Schedule::Constant(b) | Beta1Schedule::InverseTime(b) => b,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Beta1Schedule::Constant(_))
    }
}

impl Default for Beta1Schedule {
    fn default() -> Self {
        Beta1Schedule::Constant(0.9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    /// Base learning rate; `alpha_t = alpha0 / t^lr_exponent`.
    pub alpha0: f64,
    pub lr_exponent: f64,
    pub beta1: Beta1Schedule,
    pub beta2: f64,
    /// Exponent of the `1/t^a` damping applied to the conjugate coefficient.
    pub a: f64,
    pub epsilon: f64,
    pub method: ConjugateMethod,
    /// Hager-Zhang weight.
    pub lambda: f64,
    /// Denominators smaller than this in magnitude restart the direction (`gamma_t = 0`).
    pub denom_guard: f64,
    /// When false the direction uses the undamped `d_t = g_t - gamma_t d_{t-1}`.
    pub rectify: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha0: 1e-3,
            lr_exponent: 0.0,
            beta1: Beta1Schedule::default(),
            beta2: 0.999,
            a: 1.0 + 1e-5,
            epsilon: 1e-8,
            method: ConjugateMethod::Fr,
            lambda: 2.0,
            denom_guard: 1e-12,
            rectify: true,
        }
    }
}

impl HyperParams {
    pub fn with_method(mut self, method: ConjugateMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_alpha(mut self, alpha0: f64) -> Self {
        self.alpha0 = alpha0;
        self
    }

    pub fn alpha_at(&self, t: u64) -> f64 {
        if self.lr_exponent == 0.0 {
            self.alpha0
        } else {
            self.alpha0 / (t as f64).powf(self.lr_exponent)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return config(format!("alpha0 must be positive, got {}", self.alpha0));
        }
        if !(0.0..1.0).contains(&self.lr_exponent) {
            return config(format!("lr_exponent must lie in [0,1), got {}", self.lr_exponent));
        }
        let b11 = self.beta1.initial();
        if !(0.0..1.0).contains(&b11) {
            return config(format!("beta1 must lie in [0,1), got {b11}"));
        }
        if !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return config(format!("beta2 must lie in (0,1), got {}", self.beta2));
        }
        if !(self.a >= 0.5) {
            return config(format!("a must be at least 1/2, got {}", self.a));
        }
        if !(self.epsilon >= 0.0) {
            return config(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if self.method == ConjugateMethod::Hz && !(self.lambda > 0.25) {
            return config(format!("lambda must exceed 1/4 for HZ, got {}", self.lambda));
        }
        if !(self.denom_guard > 0.0) {
            return config(format!("denom_guard must be positive, got {}", self.denom_guard));
        }
        Ok(())
    }
}
