//! Trajectory diagnostics for the quantities that drive the convergence
//! guarantee of CG-like-Adam: the scalar sequences `xi_t, eta_t, mu_t, h(t)`,
//! the effective stepsize `tau_t`, the bound on `||d_t||`, the accumulated
//! right-hand-side sums, and an empirical rate surrogate.

use std::fmt;
use std::io::{self, Write};

mod direction;
mod ledger;
mod rate;
mod scalars;

pub use direction::{check_direction_bound, DirectionBoundReport, DirectionSample};
pub use ledger::{accumulate_ledger, BoundLedger, LedgerSummary};
pub use rate::{log_spaced_checkpoints, rate_check, RateReport};
pub use scalars::{
    check_lemma_bounds, double_sum_sides, lookahead_point, theory_scalars, Branch, ScalarBoundsReport, TheoryScalars,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    PreconditionUnmet,
    Inconclusive,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::PreconditionUnmet => "precondition unmet",
            CheckStatus::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One named check. `margin` is the smallest slack observed (negative when
/// violated) and `worst_t` the step where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    pub worst_t: Option<u64>,
    pub margin: f64,
    pub detail: String,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub(crate) fn skipped(name: &str, status: CheckStatus, detail: impl Into<String>) -> Self {
        CheckReport { name: name.into(), status, worst_t: None, margin: f64::NAN, detail: detail.into() }
    }
}

/// Tracks the minimum slack of an inequality over many steps.
pub(crate) struct SlackTracker {
    name: &'static str,
    tol: f64,
    margin: f64,
    worst_t: Option<u64>,
    first_violation: Option<u64>,
}

impl SlackTracker {
    pub(crate) fn new(name: &'static str, tol: f64) -> Self {
        SlackTracker { name, tol, margin: f64::INFINITY, worst_t: None, first_violation: None }
    }

    /// Record `slack` (>= 0 means satisfied) at step `t`.
    pub(crate) fn observe(&mut self, t: u64, slack: f64) {
        if slack < self.margin || slack.is_nan() {
            self.margin = slack;
            self.worst_t = Some(t);
        }
        if (slack < -self.tol || slack.is_nan()) && self.first_violation.is_none() {
            self.first_violation = Some(t);
        }
    }

    pub(crate) fn finish(self) -> CheckReport {
        let (status, detail) = match self.first_violation {
            Some(t) => (CheckStatus::Fail, format!("first violation at t={t}")),
            None if self.worst_t.is_none() => (CheckStatus::Inconclusive, "no samples".to_string()),
            None => (CheckStatus::Pass, String::new()),
        };
        CheckReport { name: self.name.into(), status, worst_t: self.worst_t, margin: self.margin, detail }
    }
}

/// CSV with one row per check: `name,status,worst_t,margin`.
pub fn write_reports_csv<W: Write>(reports: &[CheckReport], mut out: W) -> io::Result<()> {
    writeln!(out, "name,status,worst_t,margin")?;
    for r in reports {
        let worst = r.worst_t.map(|t| t.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{:e}", r.name, r.status, worst, r.margin)?;
    }
    Ok(())
}

/// Plain-text summary, one line per check.
pub fn summarize(reports: &[CheckReport]) -> String {
    let mut s = String::new();
    for r in reports {
        s.push_str(&format!("[{:>18}] {}", r.status.as_str(), r.name));
        if let Some(t) = r.worst_t {
            s.push_str(&format!(" (worst t={t}, margin={:.3e})", r.margin));
        }
        if !r.detail.is_empty() {
            s.push_str(&format!(": {}", r.detail));
        }
        s.push('\n');
    }
    let failed = reports.iter().filter(|r| r.status == CheckStatus::Fail).count();
    s.push_str(&format!("{} checks, {} failed\n", reports.len(), failed));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_reports_first_violation() {
        let mut tr = SlackTracker::new("x", 1e-12);
        tr.observe(1, 0.5);
        tr.observe(2, -0.1);
        tr.observe(3, -0.3);
        let r = tr.finish();
        assert_eq!(r.status, CheckStatus::Fail);
        assert_eq!(r.worst_t, Some(3));
        assert_eq!(r.detail, "first violation at t=2");
    }

    #[test]
    fn csv_rows() {
        let r = vec![CheckReport {
            name: "a".into(),
            status: CheckStatus::Pass,
            worst_t: Some(4),
            margin: 0.5,
            detail: String::new(),
        }];
        let mut buf = Vec::new();
        write_reports_csv(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "name,status,worst_t,margin\na,pass,4,5e-1\n");
        assert!(summarize(&r).contains("1 checks, 0 failed"));
    }
}
