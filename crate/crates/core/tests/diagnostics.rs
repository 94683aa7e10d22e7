use std::sync::Arc;

use cgadam::diagnostics::{
    accumulate_ledger, check_direction_bound, log_spaced_checkpoints, rate_check, theory_scalars, BoundLedger,
    CheckStatus, DirectionSample,
};
use cgadam::linalg::{norm, norm_sq};
use cgadam::problems::{quadratic, GradientOracle, NoisyOracle};
use cgadam::{ConjugateMethod, HyperParams, OptimizerState};

/// Drive the optimizer over a fixed gradient stream, collecting direction samples.
fn directions(hp: &HyperParams, stream: impl Fn(u64) -> Vec<f64>, steps: u64) -> Vec<DirectionSample> {
    let mut state = OptimizerState::new(vec![0.0; stream(1).len()]).unwrap();
    (1..=steps)
        .map(|t| {
            let out = state.step(&stream(t), hp).unwrap();
            DirectionSample { d_norm: norm(&out.d), gamma: out.gamma }
        })
        .collect()
}

#[test]
fn fr_on_clipped_noisy_quadratic_keeps_direction_bounded() {
    let base: Arc<dyn GradientOracle> = Arc::new(quadratic(10, 100.0).unwrap());
    let hp = HyperParams::default().with_method(ConjugateMethod::Fr);
    for seed in 0..4 {
        let noisy = NoisyOracle::new(base.clone(), 1.0, 10.0, seed).unwrap();
        let x0: Vec<f64> = base.initial_point(seed).iter().map(|v| 0.05 * v).collect();
        let mut state = OptimizerState::new(x0).unwrap();
        let mut trace = Vec::new();
        for t in 1..=10_000 {
            let g = noisy.perturb(base.gradient(state.x()), t).unwrap();
            let out = state.step(&g, &hp).unwrap();
            trace.push(DirectionSample { d_norm: norm(&out.d), gamma: out.gamma });
        }
        let rep = check_direction_bound(&trace, hp.a, 10.0);
        assert!(rep.check.passed(), "seed {seed}: {:?}", rep.check);
    }
}

#[test]
fn alternating_adversarial_streams_with_slow_damping() {
    let mut hp = HyperParams { a: 0.5, ..HyperParams::default() };
    // FR coefficient alternates between 4 and 1/4
    hp.method = ConjugateMethod::Fr;
    let fr_stream = |t: u64| if t % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 0.5] };
    let trace = directions(&hp, fr_stream, 10_000);
    let rep = check_direction_bound(&trace, 0.5, 1.0);
    assert!(rep.check.passed(), "{:?}", rep.check);
    assert!(rep.t0 > 2 && rep.t0 <= 64, "t0 = {}", rep.t0);

    // PRP with sign flips gives gamma = 2 at every step
    hp.method = ConjugateMethod::Prp;
    let prp_stream = |t: u64| if t % 2 == 0 { vec![1.0, 0.5] } else { vec![-1.0, -0.5] };
    let trace = directions(&hp, prp_stream, 10_000);
    assert!(trace[1..].iter().all(|s| (s.gamma - 2.0).abs() < 1e-12));
    let rep = check_direction_bound(&trace, 0.5, norm(&[1.0, 0.5]));
    assert!(rep.check.passed(), "{:?}", rep.check);
    assert_eq!(rep.t0, 16);
}

#[test]
fn method_none_direction_is_the_gradient() {
    let hp = HyperParams::default().with_method(ConjugateMethod::None);
    let stream = |t: u64| vec![(t as f64).sin(), (t as f64 * 0.3).cos()];
    let trace = directions(&hp, stream, 500);
    for (i, s) in trace.iter().enumerate() {
        assert_eq!(s.gamma, 0.0);
        assert_eq!(s.d_norm, norm(&stream(i as u64 + 1)));
    }
    let rep = check_direction_bound(&trace, hp.a, 1.0);
    assert!(rep.check.passed());
    assert_eq!(rep.h_bar, 2.0);
}

struct LedgerRun {
    ledger: BoundLedger,
    trace: Vec<DirectionSample>,
    samples: Vec<(u64, f64)>,
    max_grad_norm: f64,
}

/// Exact-gradient run on the quadratic, sampling the min-so-far at `checkpoints`.
fn ledger_run(hp: &HyperParams, steps: u64, checkpoints: &[u64]) -> LedgerRun {
    let problem = quadratic(10, 100.0).unwrap();
    let mut state = OptimizerState::new(problem.initial_point(1)).unwrap();
    let mut ledger = BoundLedger::new();
    let mut trace = Vec::new();
    let mut samples = Vec::new();
    let mut max_grad_norm = 0.0f64;
    for t in 1..=steps {
        let g = problem.gradient(state.x());
        max_grad_norm = max_grad_norm.max(norm(&g));
        let out = state.step(&g, hp).unwrap();
        let s = theory_scalars(hp, t, out.alpha, out.gamma, &out.v_hat_max, false).unwrap();
        ledger = accumulate_ledger(ledger, &s, &out, &g);
        trace.push(DirectionSample { d_norm: norm(&out.d), gamma: out.gamma });
        if checkpoints.contains(&t) {
            samples.push((t, ledger.min_grad_sq_so_far));
        }
    }
    LedgerRun { ledger, trace, samples, max_grad_norm }
}

#[test]
fn zero_coefficient_leaves_gamma_decay_at_zero() {
    let hp = HyperParams::default().with_method(ConjugateMethod::None).with_alpha(1e-2);
    let LedgerRun { ledger, .. } = ledger_run(&hp, 300, &[]);
    assert_eq!(ledger.sum_gamma_decay, 0.0);
    assert!(ledger.sum_tau > 0.0);
}

#[test]
fn tau_sum_scales_with_horizon() {
    let hp = HyperParams::default().with_method(ConjugateMethod::Fr).with_alpha(1e-2);
    let steps = 2000;
    let run = ledger_run(&hp, steps, &[]);
    let h_bar = check_direction_bound(&run.trace, hp.a, run.max_grad_norm).h_bar;
    let ledger = run.ledger;
    let floor = steps as f64 * hp.alpha0 * (1.0 - hp.beta2).sqrt() / h_bar;
    assert!(ledger.sum_tau >= floor, "{} < {floor}", ledger.sum_tau);
}

#[test]
fn min_grad_sq_is_monotone_and_rate_is_bounded() {
    let hp = HyperParams { alpha0: 1e-2, lr_exponent: 0.5, ..HyperParams::default() };
    let checkpoints = log_spaced_checkpoints(10_000, 10);
    let samples = ledger_run(&hp, 10_000, &checkpoints).samples;
    let at = |t: u64| samples.iter().find(|s| s.0 == t).unwrap().1;
    assert!(at(10_000) <= at(100));
    assert!(samples.windows(2).all(|w| w[1].1 <= w[0].1));
    let rep = rate_check(&samples, 0.5);
    assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
}

#[test]
fn constant_gradient_stream_is_inconclusive() {
    let hp = HyperParams::default();
    let g = vec![0.3, -0.4];
    let mut state = OptimizerState::new(vec![0.0, 0.0]).unwrap();
    let mut ledger = BoundLedger::new();
    let checkpoints = log_spaced_checkpoints(5000, 10);
    let mut samples = Vec::new();
    for t in 1..=5000 {
        let out = state.step(&g, &hp).unwrap();
        let s = theory_scalars(&hp, t, out.alpha, out.gamma, &out.v_hat_max, false).unwrap();
        ledger.accumulate(&s, &out, &g);
        if checkpoints.contains(&t) {
            samples.push((t, ledger.min_grad_sq_so_far));
        }
    }
    assert!(samples.iter().all(|s| s.1 == norm_sq(&g)));
    let rep = rate_check(&samples, 0.0);
    assert_eq!(rep.status, CheckStatus::Inconclusive);
    assert_eq!(rep.slope, None);
}
