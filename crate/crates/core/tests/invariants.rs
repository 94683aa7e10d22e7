use cgadam::diagnostics::{check_direction_bound, double_sum_sides, theory_scalars, CheckStatus, DirectionSample};
use cgadam::{baseline_step, step, BaselineKind, Beta1Schedule, ConjugateMethod, HyperParams, OptimizerState};
use proptest::prelude::*;

fn method() -> impl Strategy<Value = ConjugateMethod> {
    prop::sample::select(ConjugateMethod::ALL.to_vec())
}

fn stream(len: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn second_moment_register_never_decreases(m in method(), gs in stream(60, 3)) {
        let hp = HyperParams { method: m, alpha0: 0.01, ..Default::default() };
        let mut s = OptimizerState::new(vec![0.1, -0.2, 0.3]).unwrap();
        let mut prev = vec![0.0; 3];
        for g in &gs {
            let out = step(&mut s, g, &hp).unwrap();
            for k in 0..3 {
                prop_assert!(out.v_hat_max[k] >= prev[k]);
                prop_assert!(out.v_hat_max[k] >= out.v_hat[k]);
            }
            prev = out.v_hat_max.clone();
        }
    }

    #[test]
    fn update_is_scaled_first_moment(m in method(), gs in stream(30, 2)) {
        let hp = HyperParams { method: m, alpha0: 0.02, ..Default::default() };
        let mut s = OptimizerState::new(vec![1.0, -1.0]).unwrap();
        for g in &gs {
            let before = s.x().to_vec();
            let out = step(&mut s, g, &hp).unwrap();
            for k in 0..2 {
                let want = -out.alpha * out.m_hat[k] / (out.v_hat_max[k] + hp.epsilon).sqrt();
                prop_assert_eq!(out.update[k], want);
                prop_assert_eq!(s.x()[k], before[k] + out.update[k]);
            }
        }
    }

    #[test]
    fn identical_inputs_give_bitwise_identical_trajectories(m in method(), gs in stream(80, 4)) {
        let hp = HyperParams { method: m, alpha0: 0.01, lr_exponent: 0.5, ..Default::default() };
        let run = || {
            let mut s = OptimizerState::new(vec![0.5; 4]).unwrap();
            let mut xs = Vec::new();
            for g in &gs {
                step(&mut s, g, &hp).unwrap();
                xs.extend(s.x().iter().map(|v| v.to_bits()));
            }
            xs
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn no_conjugate_term_is_bias_corrected_amsgrad(gs in stream(200, 3)) {
        let hp = HyperParams { method: ConjugateMethod::None, alpha0: 0.01, ..Default::default() };
        let mut a = OptimizerState::new(vec![0.3, 0.2, 0.1]).unwrap();
        let mut b = a.clone();
        for g in &gs {
            step(&mut a, g, &hp).unwrap();
            baseline_step(BaselineKind::AmsgradBc, &mut b, g, &hp).unwrap();
            for k in 0..3 {
                prop_assert!((a.x()[k] - b.x()[k]).abs() <= 1e-15 * a.x()[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn direction_bound_holds_on_bounded_streams(
        m in prop::sample::select(vec![ConjugateMethod::Hs, ConjugateMethod::Fr, ConjugateMethod::Prp, ConjugateMethod::Dy, ConjugateMethod::Hz]),
        a in prop::sample::select(vec![0.5, 1.0 + 1e-5]),
        gs in stream(300, 3),
    ) {
        let hp = HyperParams { method: m, a, alpha0: 0.01, ..Default::default() };
        let h = gs.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        let mut s = OptimizerState::new(vec![0.0; 3]).unwrap();
        let mut trace = Vec::new();
        for g in &gs {
            let out = step(&mut s, g, &hp).unwrap();
            trace.push(DirectionSample { d_norm: out.d.iter().map(|v| v * v).sum::<f64>().sqrt(), gamma: out.gamma });
        }
        let report = check_direction_bound(&trace, a, h);
        prop_assert_eq!(report.check.status, CheckStatus::Pass, "{:?}", report.check);
    }

    #[test]
    fn prefix_form_equals_literal_double_sum(
        a in prop::collection::vec(0.0f64..10.0, 1..60),
        beta in prop::sample::select(vec![0.0, 0.3, 0.5, 0.9]),
    ) {
        let (lhs, rhs) = double_sum_sides(&a, beta);
        let (lhs_ref, rhs_ref) = literal_double_sum_sides(&a, beta);
        prop_assert!((lhs - lhs_ref).abs() <= 1e-9 * lhs_ref.max(1.0));
        prop_assert!((rhs - rhs_ref).abs() <= 1e-9 * rhs_ref.max(1.0));
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }
}

/// `a[0]` is `a_1`. Returns `(sum_{t=1}^{T-1} b_t^2, (1-beta)^-4 sum_{t=2}^{T-1} a_t^2)`.
fn literal_double_sum_sides(a: &[f64], beta: f64) -> (f64, f64) {
    let big_t = a.len();
    let at = |i: usize| a[i - 1];
    let mut lhs = 0.0;
    for t in 1..big_t {
        let mut b = 0.0;
        for i in 1..=t {
            let mut inner = 0.0;
            for l in (i + 1)..=t {
                inner += at(l);
            }
            b += beta.powi((t - i) as i32) * inner;
        }
        lhs += b * b;
    }
    let rhs: f64 = (2..big_t).map(|t| at(t) * at(t)).sum::<f64>() / (1.0 - beta).powi(4);
    (lhs, rhs)
}

#[test]
fn first_moment_weights_sum_to_one() {
    for beta in [0.0, 0.5, 0.9, 0.99, 0.999] {
        for t in 1..=1000i32 {
            let norm = 1.0 - f64::powi(beta, t);
            let total: f64 = (1..=t).map(|i| beta.powi(t - i) * (1.0 - beta) / norm).sum();
            if beta == 0.0 {
                assert_eq!(total, 1.0);
            } else {
                assert!((total - 1.0).abs() <= 1e-12, "beta={beta} t={t}: {total}");
            }
        }
    }
}

#[test]
fn bias_corrected_moments_are_weighted_averages_of_directions() {
    // With a constant schedule m_hat_t = sum_i w_i d_i, v_hat_t = sum_i u_i d_i^2.
    let hp = HyperParams { method: ConjugateMethod::Hs, alpha0: 0.01, ..Default::default() };
    let mut s = OptimizerState::new(vec![0.4, -0.7]).unwrap();
    let mut ds: Vec<Vec<f64>> = Vec::new();
    for t in 1..=400i32 {
        let x = s.x().to_vec();
        let g = vec![3.0 * x[0] + (t as f64).sin(), x[1] - 0.5 * (t as f64 * 0.3).cos()];
        let out = step(&mut s, &g, &hp).unwrap();
        ds.push(out.d.clone());
        for k in 0..2 {
            let (mut m, mut v) = (0.0, 0.0);
            for (i, d) in ds.iter().enumerate() {
                let i = i as i32 + 1;
                m += 0.9f64.powi(t - i) * 0.1 / (1.0 - 0.9f64.powi(t)) * d[k];
                v += hp.beta2.powi(t - i) * (1.0 - hp.beta2) / (1.0 - hp.beta2.powi(t)) * d[k] * d[k];
            }
            assert!((out.m_hat[k] - m).abs() <= 1e-12 * m.abs().max(1.0), "t={t}");
            assert!((out.v_hat[k] - v).abs() <= 1e-12 * v.abs().max(1.0), "t={t}");
        }
    }
}

fn log_one_minus_pow(b: f64, n: u64) -> f64 {
    // ln(1 - b^n) via ln_1p(-exp(n ln b)), stable for large n
    if n == 0 || b == 0.0 {
        return if n == 0 { f64::NEG_INFINITY } else { 0.0 };
    }
    (-(n as f64 * b.ln()).exp()).ln_1p()
}

#[test]
fn closed_form_scalars_agree_with_log_domain_evaluation() {
    for schedule in [Beta1Schedule::Constant(0.9), Beta1Schedule::InverseTime(0.9), Beta1Schedule::Constant(0.3)] {
        let hp = HyperParams { beta1: schedule, ..Default::default() };
        let b11 = schedule.initial();
        for t in [1u64, 2, 3, 10, 57, 100, 1000, 5000, 10_000, 1_000_000] {
            let s = theory_scalars(&hp, t, 0.01, 0.0, &[1.0], true).unwrap();
            let b1t = schedule.at(t);
            // xi = (1 - b^t) - b1t (1 - b^{t-1}) = exp(L_t) - b1t exp(L_{t-1})
            let l_t = log_one_minus_pow(b11, t);
            let l_prev = log_one_minus_pow(b11, t - 1);
            let xi = l_t.exp() - b1t * l_prev.exp();
            let eta = b1t * l_prev.exp() / xi;
            let mu = 0.01 * (1.0 - b1t) / xi;
            let h = if t == 1 { 0.0 } else { (l_prev + log_one_minus_pow(b11, t + 1) - 2.0 * l_t).exp() };
            assert!((s.xi_t - xi).abs() <= 1e-12, "{schedule:?} t={t}");
            assert!((s.eta_t.unwrap() - eta).abs() <= 1e-12 * eta.max(1.0), "{schedule:?} t={t}");
            assert!((s.mu_t - mu).abs() <= 1e-12 * mu.max(1.0), "{schedule:?} t={t}");
            assert!((s.h_t - h).abs() <= 1e-12, "{schedule:?} t={t}: {} vs {h}", s.h_t);
        }
    }
}
