use super::{CheckReport, CheckStatus, SlackTracker};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionSample {
    pub d_norm: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionBoundReport {
    /// First step from which `|gamma_t| / t^a <= 1/2` holds for the rest of
    /// the trace; `len + 1` when it never settles.
    pub t0: u64,
    /// `max(2H, max_{t < t0} ||d_t||)`
    pub h_bar: f64,
    pub check: CheckReport,
}

/// Verify `||d_t|| <= H_bar` along a trace whose gradients satisfied `||g_t|| <= H`.
/// Sample `i` belongs to step `t = i + 1`.
pub fn check_direction_bound(trace: &[DirectionSample], a: f64, h: f64) -> DirectionBoundReport {
    let n = trace.len() as u64;
    let mut t0 = n + 1;
    for (i, s) in trace.iter().enumerate().rev() {
        let t = i as u64 + 1;
        if s.gamma.abs() / (t as f64).powf(a) <= 0.5 {
            t0 = t;
        } else {
            break;
        }
    }
    let pre = trace[..(t0 - 1) as usize].iter().map(|s| s.d_norm).fold(0.0, f64::max);
    let h_bar = (2.0 * h).max(pre);
    if trace.is_empty() {
        let check = CheckReport::skipped("direction_bound", CheckStatus::Inconclusive, "empty trace");
        return DirectionBoundReport { t0, h_bar, check };
    }
    // relative slack absorbs rounding when ||g_t|| sits exactly on the clip radius
    let mut tr = SlackTracker::new("direction_bound", 1e-12);
    for (i, s) in trace.iter().enumerate() {
        tr.observe(i as u64 + 1, (h_bar - s.d_norm) / h_bar);
    }
    DirectionBoundReport { t0, h_bar, check: tr.finish() }
}
