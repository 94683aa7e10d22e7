//! Reference optimizers sharing `OptimizerState` and `StepOutput` with
//! CG-like-Adam.
//!
//! Every kind here is written out on its own rather than routed through
//! `optimizer::step`, so that `AmsgradBc` can serve as an independent check of
//! CG-like-Adam with `ConjugateMethod::None`.
//!
//! For kinds without a running maximum the state's `v_hat_max` register holds
//! the second-moment vector used in the denominator of the latest update.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::linalg::check_finite;
use crate::optimizer::{conjugate_coefficient, scaled_update, OptimizerState, StepOutput};
use crate::params::HyperParams;

/// Default CoBA damping constant.
pub const COBA_DEFAULT_M: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BaselineKind {
    /// Generic Adam with an EMA second moment, no bias correction, no max.
    GenericAdam,
    /// Adam with both moments bias corrected.
    Adam,
    /// AMSGrad: uncorrected moments, running max of the second moment.
    Amsgrad,
    /// AMSGrad with both moments bias corrected before the max.
    AmsgradBc,
    /// Conjugate direction `d_t = g_t - M gamma_t d_{t-1}` in the first
    /// moment, raw gradient in the second. Approximates CoBA.
    Coba { m: f64 },
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::GenericAdam => "generic_adam",
            BaselineKind::Adam => "adam",
            BaselineKind::Amsgrad => "amsgrad",
            BaselineKind::AmsgradBc => "amsgrad_bc",
            BaselineKind::Coba { .. } => "coba",
        }
    }

    /// Moment conventions, written into run metadata.
    pub fn convention(&self) -> &'static str {
        match self {
            BaselineKind::GenericAdam => {
                "m_t = EMA(g), V_t = EMA(g^2); neither moment bias corrected; no running max"
            }
            BaselineKind::Adam => "m_hat = m_t/(1-beta11^t), v_hat = v_t/(1-beta2^t); no running max",
            BaselineKind::Amsgrad => "uncorrected m_t and v_t; running max of v_t",
            BaselineKind::AmsgradBc => {
                "m_hat = m_t/(1-beta11^t), v_hat = v_t/(1-beta2^t); running max of v_hat"
            }
            BaselineKind::Coba { .. } => {
                "approximation of CoBA: d_t = g_t - M*gamma_t*d_{t-1} in the first moment, \
                 v from g^2; both corrected; running max of v_hat"
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let BaselineKind::Coba { m } = *self {
            if !(m > 0.0 && m.is_finite()) {
                return config(format!("CoBA constant M must be positive, got {m}"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Averaging function `phi_t` for the second moment of Generic Adam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondMoment {
    /// `v_t = beta2 v_{t-1} + (1 - beta2) g_t^2`
    Ema,
    /// `v_t = (1/t) sum_i g_i^2`
    Mean,
}

/// Generic Adam with a selectable `phi_t` and bias convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericAdam {
    pub phi: SecondMoment,
    pub bias_corrected: bool,
}

impl Default for GenericAdam {
    fn default() -> Self {
        GenericAdam { phi: SecondMoment::Ema, bias_corrected: false }
    }
}

impl GenericAdam {
    pub fn step(&self, state: &mut OptimizerState, g: &[f64], hp: &HyperParams) -> Result<StepOutput> {
        state.check_gradient(g)?;
        let t = state.t;
        let alpha = hp.alpha_at(t);
        let b1 = hp.beta1.at(t);
        let (bc1, bc2) = if self.bias_corrected {
            let bc2 = match self.phi {
                SecondMoment::Ema => 1.0 - hp.beta2.powi(t as i32),
                SecondMoment::Mean => 1.0,
            };
            (1.0 - hp.beta1.initial().powi(t as i32), bc2)
        } else {
            (1.0, 1.0)
        };
        let n = g.len();
        let mut next = Moments::with_capacity(n);
        for k in 0..n {
            let m = b1 * state.m[k] + (1.0 - b1) * g[k];
            let v = match self.phi {
                SecondMoment::Ema => hp.beta2 * state.v[k] + (1.0 - hp.beta2) * g[k] * g[k],
                SecondMoment::Mean => state.v[k] + (g[k] * g[k] - state.v[k]) / t as f64,
            };
            let mh = m / bc1;
            let vh = v / bc2;
            next.push(m, v, mh, vh, vh, scaled_update(alpha, mh, vh, hp.epsilon));
        }
        next.commit(state, g, g.to_vec(), 0.0, alpha)
    }
}

/// One step of a baseline optimizer; same contract as `optimizer::step`.
pub fn baseline_step(
    kind: BaselineKind,
    state: &mut OptimizerState,
    g: &[f64],
    hp: &HyperParams,
) -> Result<StepOutput> {
    match kind {
        BaselineKind::GenericAdam => GenericAdam::default().step(state, g, hp),
        BaselineKind::Adam => adam(state, g, hp),
        BaselineKind::Amsgrad => amsgrad(state, g, hp),
        BaselineKind::AmsgradBc => amsgrad_bc(state, g, hp),
        BaselineKind::Coba { m } => coba(state, g, hp, m),
    }
}

fn adam(state: &mut OptimizerState, g: &[f64], hp: &HyperParams) -> Result<StepOutput> {
    state.check_gradient(g)?;
    let t = state.t;
    let alpha = hp.alpha_at(t);
    let b1 = hp.beta1.at(t);
    let bc1 = 1.0 - hp.beta1.initial().powi(t as i32);
    let bc2 = 1.0 - hp.beta2.powi(t as i32);
    let mut next = Moments::with_capacity(g.len());
    for (k, &gk) in g.iter().enumerate() {
        let m = b1 * state.m[k] + (1.0 - b1) * gk;
        let v = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * gk * gk;
        let mh = m / bc1;
        let vh = v / bc2;
        next.push(m, v, mh, vh, vh, scaled_update(alpha, mh, vh, hp.epsilon));
    }
    next.commit(state, g, g.to_vec(), 0.0, alpha)
}

fn amsgrad(state: &mut OptimizerState, g: &[f64], hp: &HyperParams) -> Result<StepOutput> {
    state.check_gradient(g)?;
    let t = state.t;
    let alpha = hp.alpha_at(t);
    let b1 = hp.beta1.at(t);
    let mut next = Moments::with_capacity(g.len());
    for (k, &gk) in g.iter().enumerate() {
        let m = b1 * state.m[k] + (1.0 - b1) * gk;
        let v = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * gk * gk;
        let vmax = state.v_hat_max[k].max(v);
        next.push(m, v, m, v, vmax, scaled_update(alpha, m, vmax, hp.epsilon));
    }
    next.commit(state, g, g.to_vec(), 0.0, alpha)
}

fn amsgrad_bc(state: &mut OptimizerState, g: &[f64], hp: &HyperParams) -> Result<StepOutput> {
    state.check_gradient(g)?;
    let t = state.t;
    let alpha = hp.alpha_at(t);
    let b1 = hp.beta1.at(t);
    let bc1 = 1.0 - hp.beta1.initial().powi(t as i32);
    let bc2 = 1.0 - hp.beta2.powi(t as i32);
    let mut next = Moments::with_capacity(g.len());
    for (k, &gk) in g.iter().enumerate() {
        let m = b1 * state.m[k] + (1.0 - b1) * gk;
        let v = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * gk * gk;
        let mh = m / bc1;
        let vh = v / bc2;
        let vmax = state.v_hat_max[k].max(vh);
        next.push(m, v, mh, vh, vmax, scaled_update(alpha, mh, vmax, hp.epsilon));
    }
    next.commit(state, g, g.to_vec(), 0.0, alpha)
}

fn coba(state: &mut OptimizerState, g: &[f64], hp: &HyperParams, big_m: f64) -> Result<StepOutput> {
    state.check_gradient(g)?;
    let t = state.t;
    let gamma = if t == 1 {
        0.0
    } else {
        conjugate_coefficient(hp.method, g, &state.g_prev, &state.d_prev, hp.lambda, hp.denom_guard)?
    };
    let d: Vec<f64> = g.iter().zip(&state.d_prev).map(|(&gk, &dk)| gk - big_m * gamma * dk).collect();
    check_finite(&d, "direction")?;

    let alpha = hp.alpha_at(t);
    let b1 = hp.beta1.at(t);
    let bc1 = 1.0 - hp.beta1.initial().powi(t as i32);
    let bc2 = 1.0 - hp.beta2.powi(t as i32);
    let mut next = Moments::with_capacity(g.len());
    for (k, &gk) in g.iter().enumerate() {
        let m = b1 * state.m[k] + (1.0 - b1) * d[k];
        let v = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * gk * gk;
        let mh = m / bc1;
        let vh = v / bc2;
        let vmax = state.v_hat_max[k].max(vh);
        next.push(m, v, mh, vh, vmax, scaled_update(alpha, mh, vmax, hp.epsilon));
    }
    next.commit(state, g, d, gamma, alpha)
}

struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    m_hat: Vec<f64>,
    v_hat: Vec<f64>,
    denom: Vec<f64>,
    update: Vec<f64>,
}

impl Moments {
    fn with_capacity(n: usize) -> Self {
        Moments {
            m: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            m_hat: Vec::with_capacity(n),
            v_hat: Vec::with_capacity(n),
            denom: Vec::with_capacity(n),
            update: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, m: f64, v: f64, m_hat: f64, v_hat: f64, denom: f64, update: f64) {
        self.m.push(m);
        self.v.push(v);
        self.m_hat.push(m_hat);
        self.v_hat.push(v_hat);
        self.denom.push(denom);
        self.update.push(update);
    }

    fn commit(
        self,
        state: &mut OptimizerState,
        g: &[f64],
        d: Vec<f64>,
        gamma: f64,
        alpha: f64,
    ) -> Result<StepOutput> {
        check_finite(&self.update, "parameter update")?;
        let x: Vec<f64> = state.x.iter().zip(&self.update).map(|(x, u)| x + u).collect();
        check_finite(&x, "parameters")?;
        let t = state.t;
        state.x = x;
        state.m = self.m;
        state.v = self.v;
        state.v_hat_max.clone_from(&self.denom);
        state.g_prev = g.to_vec();
        state.d_prev.clone_from(&d);
        state.t += 1;
        Ok(StepOutput {
            t,
            alpha,
            gamma,
            d,
            m_hat: self.m_hat,
            v_hat: self.v_hat,
            v_hat_max: self.denom,
            update: self.update,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use crate::params::ConjugateMethod;

    fn stream(t: usize) -> Vec<f64> {
        let s = t as f64;
        vec![(0.7 * s).sin() * 2.0, (1.3 * s).cos() - 0.2, 0.5 / (1.0 + s)]
    }

    #[test]
    fn adam_first_step_is_signed() {
        let hp = HyperParams { alpha0: 0.1, epsilon: 0.0, ..Default::default() };
        let mut s = OptimizerState::new(vec![0.0, 0.0]).unwrap();
        let out = baseline_step(BaselineKind::Adam, &mut s, &[3.0, -4.0], &hp).unwrap();
        assert!((out.update[0] + 0.1).abs() < 1e-15);
        assert!((out.update[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn amsgrad_bc_matches_none_method() {
        let hp = HyperParams { method: ConjugateMethod::None, alpha0: 0.01, ..Default::default() };
        let mut a = OptimizerState::new(vec![0.5, -0.5, 1.0]).unwrap();
        let mut b = a.clone();
        for t in 1..=200 {
            let g = stream(t);
            let oa = a.step(&g, &hp).unwrap();
            let ob = baseline_step(BaselineKind::AmsgradBc, &mut b, &g, &hp).unwrap();
            for k in 0..3 {
                assert!((oa.update[k] - ob.update[k]).abs() <= 1e-15);
                assert!((a.x()[k] - b.x()[k]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn generic_adam_with_corrections_matches_adam() {
        let hp = HyperParams { alpha0: 0.01, ..Default::default() };
        let gen = GenericAdam { phi: SecondMoment::Ema, bias_corrected: true };
        let mut a = OptimizerState::new(vec![0.1, 0.2, 0.3]).unwrap();
        let mut b = a.clone();
        for t in 1..=1000 {
            let g = stream(t);
            gen.step(&mut a, &g, &hp).unwrap();
            baseline_step(BaselineKind::Adam, &mut b, &g, &hp).unwrap();
        }
        for k in 0..3 {
            let rel = (a.x()[k] - b.x()[k]).abs() / b.x()[k].abs().max(1e-300);
            assert!(rel <= 1e-12, "coordinate {k}: {rel}");
        }
    }

    #[test]
    fn generic_adam_is_uncorrected() {
        let hp = HyperParams { alpha0: 1.0, epsilon: 0.0, ..Default::default() };
        let mut s = OptimizerState::new(vec![0.0]).unwrap();
        let out = baseline_step(BaselineKind::GenericAdam, &mut s, &[2.0], &hp).unwrap();
        // m = 0.2, v = 0.004 -> -0.2/sqrt(0.004)
        assert!((out.update[0] + 0.2 / 0.004f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mean_second_moment() {
        let hp = HyperParams { alpha0: 1.0, epsilon: 0.0, ..Default::default() };
        let gen = GenericAdam { phi: SecondMoment::Mean, bias_corrected: false };
        let mut s = OptimizerState::new(vec![0.0]).unwrap();
        gen.step(&mut s, &[1.0], &hp).unwrap();
        gen.step(&mut s, &[3.0], &hp).unwrap();
        assert!((s.v()[0] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn amsgrad_effective_stepsize_nonincreasing() {
        let hp = HyperParams { alpha0: 0.01, ..Default::default() };
        for kind in [BaselineKind::Amsgrad, BaselineKind::AmsgradBc] {
            let mut s = OptimizerState::new(vec![0.0; 3]).unwrap();
            let mut prev = vec![f64::INFINITY; 3];
            for t in 1..=500 {
                let out = baseline_step(kind, &mut s, &stream(t), &hp).unwrap();
                for k in 0..3 {
                    let eff = hp.alpha0 / (out.v_hat_max[k] + hp.epsilon).sqrt();
                    assert!(eff <= prev[k], "{kind} t={t} k={k}");
                    prev[k] = eff;
                }
            }
        }
    }

    #[test]
    fn coba_direction_stays_near_gradient() {
        let hp = HyperParams { method: ConjugateMethod::Fr, ..Default::default() };
        let mut s = OptimizerState::new(vec![0.0; 3]).unwrap();
        let mut h_bar: f64 = 0.0;
        for t in 1..=300 {
            let g = stream(t);
            let d_prev_norm = norm(s.d_prev());
            let out = baseline_step(BaselineKind::Coba { m: COBA_DEFAULT_M }, &mut s, &g, &hp).unwrap();
            h_bar = h_bar.max(d_prev_norm);
            let gap: f64 = out.d.iter().zip(&g).map(|(d, g)| (d - g).powi(2)).sum::<f64>().sqrt();
            // d - g cancels down to the correction; allow for rounding at the scale of g
            let ulp = 4.0 * f64::EPSILON * norm(&g);
            assert!(gap <= COBA_DEFAULT_M * out.gamma.abs() * d_prev_norm * (1.0 + 1e-12) + ulp);
            if out.gamma.abs() <= 1.0 {
                assert!(gap <= COBA_DEFAULT_M * h_bar * (1.0 + 1e-12) + ulp);
            }
        }
    }

    #[test]
    fn coba_rejects_nonpositive_m() {
        assert!(BaselineKind::Coba { m: 0.0 }.validate().is_err());
        assert!(BaselineKind::Coba { m: 1e-4 }.validate().is_ok());
    }
}
