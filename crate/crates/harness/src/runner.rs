//! A single seeded run: optimizer loop, trace rows and optional diagnostics.

use std::time::Instant;

use cgadam::diagnostics::{
    accumulate_ledger, check_direction_bound, check_lemma_bounds, log_spaced_checkpoints, rate_check, theory_scalars,
    BoundLedger, CheckReport, CheckStatus, DirectionSample, TheoryScalars,
};
use cgadam::linalg::norm;
use cgadam::problems::{minibatch_indices, NoisyOracle};
use cgadam::{Algorithm, BaselineKind, Error, OptimizerState};

use crate::config::Resolved;
use crate::error::{HarnessError, Result};
use crate::trace::{AccuracyRecord, TraceRecord};

/// Loss above which a run counts as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged { t: u64 },
    /// The stochastic gradient could not satisfy the bounded-gradient contract.
    ContractViolation { t: u64, message: String },
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "ok",
            RunStatus::Diverged { .. } => "diverged",
            RunStatus::ContractViolation { .. } => "contract_violation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub status: RunStatus,
    pub rows: Vec<TraceRecord>,
    pub accuracy: Vec<AccuracyRecord>,
    pub ledger: Option<BoundLedger>,
    pub checks: Vec<CheckReport>,
}

#[derive(Debug, Clone, Copy, Default)]
struct StepColumns {
    gamma: f64,
    d_norm: f64,
    tau: f64,
}

/// Diagnostics state carried through a run when the ledger is on.
struct Tracking {
    ledger: BoundLedger,
    series: Vec<TheoryScalars>,
    directions: Vec<DirectionSample>,
    first_weight: Vec<f64>,
    max_grad_norm: f64,
    max_gamma: f64,
    sum_alpha: f64,
    rate_points: Vec<(u64, f64)>,
    checkpoints: Vec<u64>,
}

pub fn run_one(r: &Resolved, seed: u64) -> Result<RunOutcome> {
    let c = &r.config;
    let problem = r.problem.as_ref();
    let x0 = problem.initial_point(seed);
    let mut state = if c.per_group_gamma {
        OptimizerState::with_groups(x0, problem.param_groups())?
    } else {
        OptimizerState::new(x0)?
    };
    let noisy = match c.clip_h {
        Some(h) => Some(NoisyOracle::new(r.problem.clone(), c.noise_scale, h, seed)?),
        None => None,
    };
    let classify = problem.accuracy(state.x()).is_some();
    let mut tracking = c.ledger.then(|| Tracking {
        ledger: BoundLedger::new(),
        series: Vec::with_capacity(c.iters as usize),
        directions: Vec::with_capacity(c.iters as usize),
        first_weight: vec![f64::INFINITY; problem.dim()],
        max_grad_norm: 0.0,
        max_gamma: 0.0,
        sum_alpha: 0.0,
        rate_points: Vec::new(),
        checkpoints: log_spaced_checkpoints(c.iters, 10),
    });

    let started = Instant::now();
    let wall = || if c.timing { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let mut rows = Vec::new();
    let mut accuracy = Vec::new();
    let mut last = StepColumns::default();
    let mut status = RunStatus::Completed;
    let row_at = |t: u64, x: &[f64], exact: &[f64], last: &StepColumns, ledger: Option<&BoundLedger>, wall_ms: f64| {
        let (sgd, sse, smd) = ledger.map_or((0.0, 0.0, 0.0), |l| (l.sum_gamma_decay, l.sum_step_energy, l.sum_mu_drift));
        TraceRecord {
            t,
            loss: problem.value(x),
            grad_norm: norm(exact),
            gamma: last.gamma,
            d_norm: last.d_norm,
            tau: last.tau,
            sum_gamma_decay: sgd,
            sum_step_energy: sse,
            sum_mu_drift: smd,
            wall_ms,
        }
    };

    for t in 1..=c.iters + 1 {
        let record = (t - 1) % c.record_every == 0;
        let needs_exact = record || tracking.is_some() || c.batch_size.is_none();
        let exact = needs_exact.then(|| problem.gradient(state.x()));
        if record {
            let exact = exact.as_deref().unwrap_or_default();
            let row = row_at(t, state.x(), exact, &last, tracking.as_ref().map(|k| &k.ledger), wall());
            let diverged = !row.is_finite() || row.loss > DIVERGENCE_LOSS;
            rows.push(row);
            if classify {
                if let Some(acc) = problem.accuracy(state.x()) {
                    accuracy.push(AccuracyRecord { t, accuracy: acc });
                }
            }
            if diverged {
                status = RunStatus::Diverged { t };
                break;
            }
        }
        if t > c.iters {
            break;
        }

        let base = match c.batch_size {
            Some(b) => {
                let n = problem.n_samples().unwrap_or(0);
                let idx = minibatch_indices(n, b, seed, t);
                problem
                    .minibatch_gradient(state.x(), &idx)
                    .ok_or_else(|| HarnessError::config(format!("{} does not support minibatches", problem.name())))?
            }
            None => exact.clone().unwrap_or_default(),
        };
        let g = match &noisy {
            Some(n) => match n.perturb(base, t) {
                Ok(g) => g,
                Err(Error::Contract(message)) => {
                    status = RunStatus::ContractViolation { t, message };
                    break;
                }
                Err(Error::NonFinite(_)) => {
                    status = diverge(&mut rows, t, &row_at, state.x(), &last, wall());
                    break;
                }
                Err(e) => return Err(e.into()),
            },
            None => base,
        };

        let out = match r.algorithm.step(&mut state, &g, &r.hp) {
            Ok(out) => out,
            Err(Error::NonFinite(_)) => {
                status = diverge(&mut rows, t, &row_at, state.x(), &last, wall());
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let scalars = theory_scalars(&r.hp, t, out.alpha, out.gamma, &out.v_hat_max, tracking.is_some())?;
        last = StepColumns { gamma: out.gamma, d_norm: norm(&out.d), tau: scalars.tau_t };
        if let Some(k) = tracking.as_mut() {
            let exact = exact.as_deref().unwrap_or_default();
            k.ledger = accumulate_ledger(std::mem::take(&mut k.ledger), &scalars, &out, exact);
            for (first, w) in k.first_weight.iter_mut().zip(k.ledger.weighted_inv_sqrt()) {
                if !first.is_finite() && w.is_finite() {
                    *first = *w;
                }
            }
            k.max_grad_norm = k.max_grad_norm.max(norm(&g));
            k.max_gamma = k.max_gamma.max(out.gamma.abs());
            k.sum_alpha += out.alpha;
            k.directions.push(DirectionSample { d_norm: last.d_norm, gamma: out.gamma });
            if k.checkpoints.binary_search(&t).is_ok() {
                k.rate_points.push((t, k.ledger.min_grad_sq_so_far));
            }
            k.series.push(scalars);
        }
        if !state.x().iter().all(|v| v.is_finite()) {
            status = diverge(&mut rows, t + 1, &row_at, state.x(), &last, wall());
            break;
        }
    }

    let (ledger, checks) = match tracking {
        Some(k) if status == RunStatus::Completed => {
            let checks = run_checks(r, &k);
            (Some(k.ledger), checks)
        }
        Some(k) => (Some(k.ledger), Vec::new()),
        None => (None, Vec::new()),
    };
    Ok(RunOutcome { seed, status, rows, accuracy, ledger, checks })
}

fn diverge<F>(rows: &mut Vec<TraceRecord>, t: u64, row_at: &F, x: &[f64], last: &StepColumns, wall_ms: f64) -> RunStatus
where
    F: Fn(u64, &[f64], &[f64], &StepColumns, Option<&BoundLedger>, f64) -> TraceRecord,
{
    let mut row = row_at(t, x, &[], last, None, wall_ms);
    row.grad_norm = f64::NAN;
    if rows.last().map(|p| p.t) == Some(t) {
        rows.pop();
    }
    rows.push(row);
    RunStatus::Diverged { t }
}

fn has_max_register(alg: Algorithm) -> bool {
    !matches!(alg, Algorithm::Baseline(BaselineKind::Adam | BaselineKind::GenericAdam))
}

fn report(name: &str, status: CheckStatus, worst_t: Option<u64>, margin: f64, detail: String) -> CheckReport {
    CheckReport { name: name.to_string(), status, worst_t, margin, detail }
}

fn run_checks(r: &Resolved, k: &Tracking) -> Vec<CheckReport> {
    let hp = &r.hp;
    let c = &r.config;
    let mut checks = check_lemma_bounds(&k.series, hp).checks;
    let h = c.clip_h.unwrap_or(k.max_grad_norm);
    let direction = check_direction_bound(&k.directions, hp.a, h);
    let h_bar = direction.h_bar;
    checks.push(direction.check);

    let steps = k.series.len() as f64;
    // sum_t alpha_t |gamma_t| / t^a <= alpha * max|gamma| * (1 + ln T), valid for a >= 1
    if hp.a >= 1.0 {
        let bound = hp.alpha0 * k.max_gamma * (1.0 + steps.ln());
        let slack = bound - k.ledger.sum_gamma_decay;
        let ok = slack >= -1e-12 * bound.max(1e-300);
        checks.push(report(
            "gamma_decay_log_bound",
            if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            None,
            slack,
            format!("sum {:e} vs bound {:e}", k.ledger.sum_gamma_decay, bound),
        ));
    } else {
        checks.push(report("gamma_decay_log_bound", CheckStatus::PreconditionUnmet, None, f64::NAN, "a < 1".into()));
    }

    let constant_beta1 = hp.beta1.is_constant();
    if constant_beta1 && has_max_register(r.algorithm) {
        let telescoped: f64 = k
            .first_weight
            .iter()
            .zip(k.ledger.weighted_inv_sqrt())
            .filter(|(f, l)| f.is_finite() && l.is_finite())
            .map(|(f, l)| f - l)
            .sum();
        let gap = (k.ledger.sum_mu_drift - telescoped).abs();
        let ok = gap <= 1e-8 * telescoped.abs().max(1.0);
        checks.push(report(
            "mu_drift_telescopes",
            if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            None,
            gap,
            format!("accumulated {:e}, telescoped {:e}", k.ledger.sum_mu_drift, telescoped),
        ));
    } else {
        checks.push(report(
            "mu_drift_telescopes",
            CheckStatus::PreconditionUnmet,
            None,
            f64::NAN,
            "needs constant beta1 and a running-max second moment".into(),
        ));
    }

    let tau_floor = (1.0 - hp.beta2).sqrt() * k.sum_alpha / h_bar;
    let slack = k.ledger.sum_tau - tau_floor;
    checks.push(report(
        "tau_sum_scaling",
        if slack >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail },
        None,
        slack,
        format!("sum_tau {:e} vs floor {:e} (H_bar {h_bar:e})", k.ledger.sum_tau, tau_floor),
    ));

    if constant_beta1 {
        let rate = rate_check(&k.rate_points, hp.lr_exponent);
        checks.push(report("rate_surrogate", rate.status, None, rate.slope.unwrap_or(f64::NAN), rate.detail));
    } else {
        checks.push(report("rate_surrogate", CheckStatus::PreconditionUnmet, None, f64::NAN, "beta1 not constant".into()));
    }
    checks
}
