//! CG-like-Adam: adaptive moment estimation driven by a damped conjugate direction.
//!
//! Each step computes a conjugate coefficient `gamma_t` from the current and
//! previous gradients, forms the direction
//!
//! ```text
//! d_t = g_t - (gamma_t / t^a) * d_{t-1}
//! ```
//!
//! and feeds `d_t` (not `g_t`) into both moment estimates. The first moment is
//! bias corrected with `beta_11^t`, the second with `beta_2^t`, and the
//! corrected second moment enters a running elementwise maximum before the
//! parameter update `x_{t+1} = x_t - alpha_t * m_hat / sqrt(v_hat_max + eps)`.

use std::ops::Range;

use crate::error::{config, Error, Result};
use crate::linalg::{check_dim, check_finite, dot, norm_sq};
use crate::params::{ConjugateMethod, HyperParams};

/// Conjugate coefficient for step `t >= 2`.
///
/// Any denominator with magnitude below `guard` yields 0, which restarts the
/// direction at the raw gradient. `ConjugateMethod::None` always yields 0.
pub fn conjugate_coefficient(
    method: ConjugateMethod,
    g: &[f64],
    g_prev: &[f64],
    d_prev: &[f64],
    lambda: f64,
    guard: f64,
) -> Result<f64> {
    check_dim(g.len(), g_prev.len())?;
    check_dim(g.len(), d_prev.len())?;
    check_finite(g, "gradient")?;
    check_finite(g_prev, "previous gradient")?;
    check_finite(d_prev, "previous direction")?;

    if method == ConjugateMethod::None {
        return Ok(0.0);
    }

    // y_t = g_t - g_{t-1}, only ever needed through inner products.
    let mut g_y = 0.0;
    let mut d_y = 0.0;
    let mut y_y = 0.0;
    for ((&gk, &pk), &dk) in g.iter().zip(g_prev).zip(d_prev) {
        let yk = gk - pk;
        g_y += gk * yk;
        d_y += dk * yk;
        y_y += yk * yk;
    }
    let guarded = |num: f64, den: f64| if den.abs() < guard { 0.0 } else { num / den };

    let gamma = match method {
        ConjugateMethod::Hs => guarded(g_y, d_y),
        ConjugateMethod::Fr => guarded(norm_sq(g), norm_sq(g_prev)),
        ConjugateMethod::Prp => guarded(g_y, norm_sq(g_prev)),
        ConjugateMethod::Dy => guarded(norm_sq(g), d_y),
        ConjugateMethod::Hz => {
            if d_y.abs() < guard {
                0.0
            } else {
                g_y / d_y - lambda * y_y / (d_y * d_y) * dot(g, d_prev)
            }
        }
        ConjugateMethod::None => unreachable!(),
    };
    if !gamma.is_finite() {
        return Err(Error::NonFinite("conjugate coefficient"));
    }
    Ok(gamma)
}

/// `d = g - (gamma / t^a) * d_prev`.
pub fn cg_like_direction(g: &[f64], d_prev: &[f64], gamma: f64, t: u64, a: f64) -> Result<Vec<f64>> {
    check_dim(g.len(), d_prev.len())?;
    let scale = gamma / (t as f64).powf(a);
    let d = direction(g, d_prev, scale);
    check_finite(&d, "direction")?;
    Ok(d)
}

fn direction(g: &[f64], d_prev: &[f64], scale: f64) -> Vec<f64> {
    if scale == 0.0 {
        return g.to_vec();
    }
    g.iter().zip(d_prev).map(|(&gk, &dk)| gk - scale * dk).collect()
}

/// Mutable per-run state. All vectors share the parameter dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub(crate) x: Vec<f64>,
    pub(crate) m: Vec<f64>,
    pub(crate) v: Vec<f64>,
    pub(crate) v_hat_max: Vec<f64>,
    pub(crate) d_prev: Vec<f64>,
    pub(crate) g_prev: Vec<f64>,
    /// Step about to be performed, starting at 1.
    pub(crate) t: u64,
    /// Coordinate ranges that get their own conjugate coefficient. A single
    /// range covering everything is the default.
    pub(crate) groups: Vec<Range<usize>>,
}

impl OptimizerState {
    pub fn new(x0: Vec<f64>) -> Result<Self> {
        let d = x0.len();
        Self::with_groups(x0, vec![0..d])
    }

    /// State whose conjugate coefficient is computed independently per
    /// parameter group. Groups must tile `0..dim` in order.
    pub fn with_groups(x0: Vec<f64>, groups: Vec<Range<usize>>) -> Result<Self> {
        if x0.is_empty() {
            return config("parameter vector is empty");
        }
        if !tiles(&groups, x0.len()) {
            return config("parameter groups must tile the parameter vector");
        }
        let mut state = OptimizerState {
            x: Vec::new(),
            m: Vec::new(),
            v: Vec::new(),
            v_hat_max: Vec::new(),
            d_prev: Vec::new(),
            g_prev: Vec::new(),
            t: 1,
            groups,
        };
        state.reset(x0)?;
        Ok(state)
    }

    /// Return to the initial state with `x_1 = x0`: zero moments, zero
    /// direction, `t = 1`. Parameter groups are kept when they still tile the
    /// new dimension and collapse to a single group otherwise.
    pub fn reset(&mut self, x0: Vec<f64>) -> Result<()> {
        let d = x0.len();
        if d == 0 {
            return config("parameter vector is empty");
        }
        check_finite(&x0, "initial point")?;
        if !tiles(&self.groups, d) {
            self.groups = vec![0..d];
        }
        self.x = x0;
        self.m = vec![0.0; d];
        self.v = vec![0.0; d];
        self.v_hat_max = vec![0.0; d];
        self.d_prev = vec![0.0; d];
        self.g_prev = vec![0.0; d];
        self.t = 1;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn v_hat_max(&self) -> &[f64] {
        &self.v_hat_max
    }

    pub fn d_prev(&self) -> &[f64] {
        &self.d_prev
    }

    pub fn g_prev(&self) -> &[f64] {
        &self.g_prev
    }

    /// Index of the next step.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn step(&mut self, g: &[f64], hp: &HyperParams) -> Result<StepOutput> {
        step(self, g, hp)
    }

    pub(crate) fn check_gradient(&self, g: &[f64]) -> Result<()> {
        if self.x.is_empty() {
            return config("parameter vector is empty");
        }
        check_dim(self.x.len(), g.len())?;
        check_finite(g, "gradient")
    }
}

fn tiles(groups: &[Range<usize>], dim: usize) -> bool {
    groups.first().map(|r| r.start) == Some(0)
        && groups.last().map(|r| r.end) == Some(dim)
        && groups.windows(2).all(|w| w[0].end == w[1].start)
        && groups.iter().all(|r| r.start < r.end)
}

/// Audit record of a single step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Index of the step that produced this record.
    pub t: u64,
    pub alpha: f64,
    /// Conjugate coefficient actually used (after the guard). With several
    /// parameter groups this is the group coefficient of largest magnitude.
    pub gamma: f64,
    pub d: Vec<f64>,
    pub m_hat: Vec<f64>,
    /// Bias-corrected second moment before the running maximum.
    pub v_hat: Vec<f64>,
    /// Running maximum after this step.
    pub v_hat_max: Vec<f64>,
    /// `x_{t+1} - x_t`.
    pub update: Vec<f64>,
}

/// Per-coordinate update `-alpha * m / sqrt(v + eps)`. A coordinate that has
/// never seen a nonzero direction (`m = v = 0` with `eps = 0`) does not move.
#[inline]
pub(crate) fn scaled_update(alpha: f64, m: f64, v: f64, eps: f64) -> f64 {
    let den = (v + eps).sqrt();
    if den == 0.0 && m == 0.0 {
        0.0
    } else {
        -alpha * m / den
    }
}

/// One CG-like-Adam step; advances `state` in place.
pub fn step(state: &mut OptimizerState, g: &[f64], hp: &HyperParams) -> Result<StepOutput> {
    state.check_gradient(g)?;
    let t = state.t;

    let mut gamma_report = 0.0f64;
    let mut d = Vec::with_capacity(g.len());
    for range in state.groups.clone() {
        let gs = &g[range.clone()];
        let ds = &state.d_prev[range.clone()];
        let gamma = if t == 1 {
            0.0
        } else {
            conjugate_coefficient(hp.method, gs, &state.g_prev[range.clone()], ds, hp.lambda, hp.denom_guard)?
        };
        if gamma.abs() > gamma_report.abs() {
            gamma_report = gamma;
        }
        let scale = if hp.rectify { gamma / (t as f64).powf(hp.a) } else { gamma };
        d.extend(direction(gs, ds, scale));
    }
    check_finite(&d, "direction")?;

    let out = moment_update(state, g, d, gamma_report, hp)?;
    Ok(out)
}

/// Shared tail of the step: moments from `d`, bias corrections, running max
/// and the parameter update. Commits the new state only when everything is
/// finite.
fn moment_update(
    state: &mut OptimizerState,
    g: &[f64],
    d: Vec<f64>,
    gamma: f64,
    hp: &HyperParams,
) -> Result<StepOutput> {
    let t = state.t;
    let alpha = hp.alpha_at(t);
    let beta1 = hp.beta1.at(t);
    let beta2 = hp.beta2;
    let bc1 = 1.0 - hp.beta1.initial().powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);

    let n = d.len();
    let mut m = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut m_hat = Vec::with_capacity(n);
    let mut v_hat = Vec::with_capacity(n);
    let mut v_hat_max = Vec::with_capacity(n);
    let mut update = Vec::with_capacity(n);
    for k in 0..n {
        let mk = beta1 * state.m[k] + (1.0 - beta1) * d[k];
        let vk = beta2 * state.v[k] + (1.0 - beta2) * d[k] * d[k];
        let mh = mk / bc1;
        let vh = vk / bc2;
        let vmax = state.v_hat_max[k].max(vh);
        m.push(mk);
        v.push(vk);
        m_hat.push(mh);
        v_hat.push(vh);
        v_hat_max.push(vmax);
        update.push(scaled_update(alpha, mh, vmax, hp.epsilon));
    }
    check_finite(&update, "parameter update")?;
    let x: Vec<f64> = state.x.iter().zip(&update).map(|(x, u)| x + u).collect();
    check_finite(&x, "parameters")?;

    state.x = x;
    state.m = m;
    state.v = v;
    state.v_hat_max.clone_from(&v_hat_max);
    state.g_prev.clear();
    state.g_prev.extend_from_slice(g);
    state.d_prev.clone_from(&d);
    state.t += 1;

    Ok(StepOutput { t, alpha, gamma, d, m_hat, v_hat, v_hat_max, update })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Beta1Schedule;

    fn coef(method: ConjugateMethod, g: &[f64], gp: &[f64], dp: &[f64]) -> f64 {
        conjugate_coefficient(method, g, gp, dp, 2.0, 1e-12).unwrap()
    }

    #[test]
    fn fletcher_reeves_ratio() {
        assert!((coef(ConjugateMethod::Fr, &[2.0, 2.0], &[1.0, 2.0], &[0.0, 0.0]) - 1.6).abs() < 1e-15);
    }

    #[test]
    fn prp_zero_when_gradient_repeats() {
        assert_eq!(coef(ConjugateMethod::Prp, &[3.0, -4.0], &[3.0, -4.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn hestenes_stiefel_hand_value() {
        assert_eq!(coef(ConjugateMethod::Hs, &[0.0, 1.0], &[1.0, 0.0], &[1.0, 0.0]), -1.0);
    }

    #[test]
    fn dai_yuan_guard_restarts() {
        // y = (-1, 1), d_prev orthogonal to y.
        assert_eq!(coef(ConjugateMethod::Dy, &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]), 0.0);
        assert_eq!(coef(ConjugateMethod::Hs, &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]), 0.0);
        assert_eq!(coef(ConjugateMethod::Hz, &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]), 0.0);
        // zero previous gradient norm
        assert_eq!(coef(ConjugateMethod::Fr, &[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn hager_zhang_hand_value() {
        // y = (-1, 1); <g,y> = 1, <d,y> = -2 (d = (2, 0)), |y|^2 = 2, <g,d> = 0 -> -0.5
        assert_eq!(coef(ConjugateMethod::Hz, &[0.0, 1.0], &[1.0, 0.0], &[2.0, 0.0]), -0.5);
        // d = (2, 1): <d,y> = -1, <g,d> = 1 -> 1/(-1) - 2*2/1*1 = -5
        assert_eq!(coef(ConjugateMethod::Hz, &[0.0, 1.0], &[1.0, 0.0], &[2.0, 1.0]), -5.0);
    }

    #[test]
    fn none_is_zero() {
        assert_eq!(coef(ConjugateMethod::None, &[5.0], &[1.0], &[1.0]), 0.0);
    }

    #[test]
    fn coefficient_errors() {
        let e = conjugate_coefficient(ConjugateMethod::Fr, &[1.0], &[1.0, 2.0], &[1.0], 2.0, 1e-12);
        assert!(matches!(e, Err(Error::DimensionMismatch { .. })));
        let e = conjugate_coefficient(ConjugateMethod::Fr, &[f64::NAN], &[1.0], &[1.0], 2.0, 1e-12);
        assert!(matches!(e, Err(Error::NonFinite(_))));
    }

    #[test]
    fn direction_examples() {
        assert_eq!(cg_like_direction(&[1.0, 1.0], &[7.0, -3.0], 0.0, 5, 1.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(cg_like_direction(&[1.0, 0.0], &[2.0, 0.0], 1.0, 1, 1.0).unwrap(), vec![-1.0, 0.0]);
        assert!(cg_like_direction(&[1.0], &[f64::MAX], -f64::MAX, 1, 1.0).is_err());
    }

    #[test]
    fn direction_decays_to_gradient() {
        let g = [0.3, -0.2];
        let dp = [4.0, 1.0];
        let mut last = f64::INFINITY;
        for t in [10u64, 100, 1000, 10000] {
            let d = cg_like_direction(&g, &dp, 1.5, t, 0.5).unwrap();
            let gap = ((d[0] - g[0]).powi(2) + (d[1] - g[1]).powi(2)).sqrt();
            let bound = 1.5 * (17.0f64).sqrt() / (t as f64).sqrt();
            assert!(gap <= bound * (1.0 + 1e-12));
            assert!(gap < last);
            last = gap;
        }
    }

    #[test]
    fn first_step_is_signed_step() {
        let hp = HyperParams { alpha0: 0.1, epsilon: 0.0, ..Default::default() };
        let mut s = OptimizerState::new(vec![0.0, 0.0]).unwrap();
        let out = s.step(&[3.0, -4.0], &hp).unwrap();
        assert_eq!(out.gamma, 0.0);
        assert_eq!(out.d, vec![3.0, -4.0]);
        assert!((out.update[0] + 0.1).abs() < 1e-15);
        assert!((out.update[1] - 0.1).abs() < 1e-15);
        assert_eq!(s.t(), 2);
    }

    #[test]
    fn zero_dimension_and_bad_gradient() {
        assert!(matches!(OptimizerState::new(vec![]), Err(Error::Config(_))));
        let mut s = OptimizerState::new(vec![1.0, 2.0]).unwrap();
        let hp = HyperParams::default();
        assert!(matches!(s.step(&[1.0, f64::INFINITY], &hp), Err(Error::NonFinite(_))));
        assert!(matches!(s.step(&[1.0], &hp), Err(Error::DimensionMismatch { .. })));
        // failed steps leave the state untouched
        assert_eq!(s.t(), 1);
        assert_eq!(s.x(), &[1.0, 2.0]);
    }

    #[test]
    fn reset_matches_fresh_state() {
        let hp = HyperParams::default();
        let mut s = OptimizerState::new(vec![1.0, 1.0, 1.0]).unwrap();
        for _ in 0..5 {
            s.step(&[0.1, -0.2, 0.3], &hp).unwrap();
        }
        s.reset(vec![2.0, 0.0, -1.0]).unwrap();
        let mut fresh = OptimizerState::new(vec![2.0, 0.0, -1.0]).unwrap();
        assert_eq!(s, fresh);
        s.reset(vec![2.0, 0.0, -1.0]).unwrap();
        assert_eq!(s, fresh);
        let a = s.step(&[1.0, 2.0, 3.0], &hp).unwrap();
        let b = fresh.step(&[1.0, 2.0, 3.0], &hp).unwrap();
        assert_eq!(a, b);
        assert!(matches!(s.step(&[1.0, 2.0], &hp), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn reset_changes_dimension() {
        let mut s = OptimizerState::new(vec![1.0, 1.0]).unwrap();
        s.reset(vec![0.0; 5]).unwrap();
        assert_eq!(s.dim(), 5);
        assert_eq!(s.groups(), &[0..5]);
    }

    #[test]
    fn bad_groups_rejected() {
        assert!(OptimizerState::with_groups(vec![0.0; 4], vec![0..2, 3..4]).is_err());
        let s = OptimizerState::with_groups(vec![0.0; 4], vec![0..1, 1..4]).unwrap();
        assert_eq!(s.groups().len(), 2);
    }

    #[test]
    fn grouped_gamma_per_block() {
        let hp = HyperParams { method: ConjugateMethod::Fr, ..Default::default() };
        let mut s = OptimizerState::with_groups(vec![0.0; 2], vec![0..1, 1..2]).unwrap();
        s.step(&[1.0, 1.0], &hp).unwrap();
        let out = s.step(&[2.0, 0.5], &hp).unwrap();
        // group gammas are 4 and 0.25; report the larger
        assert_eq!(out.gamma, 4.0);
        let t2a = 2f64.powf(hp.a);
        assert!((out.d[0] - (2.0 - 4.0 / t2a * 1.0)).abs() < 1e-15);
        assert!((out.d[1] - (0.5 - 0.25 / t2a * 1.0)).abs() < 1e-15);
    }

    #[test]
    fn vanilla_direction_skips_damping() {
        let hp = HyperParams { rectify: false, ..Default::default() };
        let mut s = OptimizerState::new(vec![0.0]).unwrap();
        s.step(&[1.0], &hp).unwrap();
        let out = s.step(&[2.0], &hp).unwrap();
        assert_eq!(out.gamma, 4.0);
        assert_eq!(out.d, vec![2.0 - 4.0]);
    }

    #[test]
    fn inverse_time_beta_uses_beta11_correction() {
        let hp = HyperParams {
            beta1: Beta1Schedule::InverseTime(0.9),
            method: ConjugateMethod::None,
            epsilon: 0.0,
            ..Default::default()
        };
        let mut s = OptimizerState::new(vec![0.0]).unwrap();
        s.step(&[1.0], &hp).unwrap();
        let out = s.step(&[2.0], &hp).unwrap();
        // m1 = 0.1, m2 = 0.45*0.1 + 0.55*2 = 1.145; corrected by 1 - 0.81
        assert!((out.m_hat[0] - 1.145 / 0.19).abs() < 1e-13);
    }

    #[test]
    fn zero_coordinate_without_epsilon_stays_put() {
        let hp = HyperParams { epsilon: 0.0, ..Default::default() };
        let mut s = OptimizerState::new(vec![1.0, 1.0]).unwrap();
        let out = s.step(&[0.0, 1.0], &hp).unwrap();
        assert_eq!(out.update[0], 0.0);
        assert_eq!(s.x()[0], 1.0);
    }
}
