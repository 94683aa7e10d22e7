use std::fmt;

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_step, BaselineKind};
use crate::error::Result;
use crate::optimizer::{step, OptimizerState, StepOutput};
use crate::params::HyperParams;

/// Any optimizer that can drive an `OptimizerState`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Algorithm {
    CgLikeAdam,
    Baseline(BaselineKind),
}

impl Algorithm {
    pub fn step(&self, state: &mut OptimizerState, g: &[f64], hp: &HyperParams) -> Result<StepOutput> {
        match *self {
            Algorithm::CgLikeAdam => step(state, g, hp),
            Algorithm::Baseline(kind) => baseline_step(kind, state, g, hp),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::CgLikeAdam => "cg_like_adam",
            Algorithm::Baseline(kind) => kind.name(),
        }
    }

    /// Whether the conjugate method in the hyper-parameters affects this algorithm.
    pub fn uses_method(&self) -> bool {
        matches!(self, Algorithm::CgLikeAdam | Algorithm::Baseline(BaselineKind::Coba { .. }))
    }

    pub fn convention(&self) -> &'static str {
        match self {
            Algorithm::CgLikeAdam => {
                "d_t = g_t - gamma_t/t^a d_{t-1}; m_hat = m_t/(1-beta11^t), \
                 v_hat = v_t/(1-beta2^t) from d_t^2; running max of v_hat"
            }
            Algorithm::Baseline(kind) => kind.convention(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Algorithm::CgLikeAdam => Ok(()),
            Algorithm::Baseline(kind) => kind.validate(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
