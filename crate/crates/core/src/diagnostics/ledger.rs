use super::TheoryScalars;
use crate::linalg::norm_sq;
use crate::optimizer::StepOutput;

/// Running sums of the right-hand-side terms of the convergence bound, plus
/// the left-hand side `sum_t <grad f, alpha_t V_t^{-1/2} grad f>`.
///
/// Coordinates whose second-moment register is still zero have no finite
/// effective stepsize and are left out of every sum.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundLedger {
    pub steps: u64,
    /// `sum_t sum_k |mu_t v_{t,k}^{-1/2} - mu_{t-1} v_{t-1,k}^{-1/2}|`
    pub sum_mu_drift: f64,
    /// `sum_t ||alpha_t V_t^{-1/2} d_t||^2`
    pub sum_step_energy: f64,
    /// `sum_t alpha_t |gamma_t| / t^a`
    pub sum_gamma_decay: f64,
    pub sum_tau: f64,
    /// `min_{s<=t} ||grad f(x_s)||^2` from exact gradients.
    pub min_grad_sq_so_far: f64,
    pub lhs_sum: f64,
    /// `mu_t v_{t,k}^{-1/2}` of the latest step.
    weighted: Vec<f64>,
}

impl Default for BoundLedger {
    fn default() -> Self {
        BoundLedger {
            steps: 0,
            sum_mu_drift: 0.0,
            sum_step_energy: 0.0,
            sum_gamma_decay: 0.0,
            sum_tau: 0.0,
            min_grad_sq_so_far: f64::INFINITY,
            lhs_sum: 0.0,
            weighted: Vec::new(),
        }
    }
}

impl BoundLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// `mu_t v_{t,k}^{-1/2}` from the most recent step (infinite where `v = 0`).
    pub fn weighted_inv_sqrt(&self) -> &[f64] {
        &self.weighted
    }

    pub fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("sum_mu_drift", self.sum_mu_drift),
            ("sum_step_energy", self.sum_step_energy),
            ("sum_gamma_decay", self.sum_gamma_decay),
            ("sum_tau", self.sum_tau),
            ("min_grad_sq_so_far", self.min_grad_sq_so_far),
            ("lhs_sum", self.lhs_sum),
        ]
    }

    pub fn accumulate(&mut self, scalars: &TheoryScalars, out: &StepOutput, exact_grad: &[f64]) {
        let alpha = out.alpha;
        let weighted: Vec<f64> = out
            .v_hat_max
            .iter()
            .map(|&v| if v > 0.0 { scalars.mu_t / v.sqrt() } else { f64::INFINITY })
            .collect();
        if !self.weighted.is_empty() {
            self.sum_mu_drift += self
                .weighted
                .iter()
                .zip(&weighted)
                .filter(|(p, c)| p.is_finite() && c.is_finite())
                .map(|(p, c)| (c - p).abs())
                .sum::<f64>();
        }
        self.weighted = weighted;

        let mut energy = 0.0;
        let mut lhs = 0.0;
        for ((&v, &d), &gf) in out.v_hat_max.iter().zip(&out.d).zip(exact_grad) {
            if v > 0.0 {
                energy += alpha * alpha * d * d / v;
                lhs += alpha * gf * gf / v.sqrt();
            }
        }
        self.sum_step_energy += energy;
        self.lhs_sum += lhs;
        self.sum_gamma_decay += scalars.gamma_decay_t;
        self.sum_tau += scalars.tau_t;
        self.min_grad_sq_so_far = self.min_grad_sq_so_far.min(norm_sq(exact_grad));
        self.steps += 1;
    }
}

/// Functional form of `BoundLedger::accumulate`.
pub fn accumulate_ledger(
    mut ledger: BoundLedger,
    scalars: &TheoryScalars,
    out: &StepOutput,
    exact_grad: &[f64],
) -> BoundLedger {
    ledger.accumulate(scalars, out, exact_grad);
    ledger
}

/// Mean and standard error of each ledger field across independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerSummary {
    pub runs: usize,
    pub fields: Vec<(&'static str, f64, f64)>,
}

impl LedgerSummary {
    pub fn from_runs(ledgers: &[BoundLedger]) -> Self {
        let runs = ledgers.len();
        let mut fields = Vec::new();
        if let Some(first) = ledgers.first() {
            for (j, (name, _)) in first.fields().iter().enumerate() {
                let vals: Vec<f64> = ledgers.iter().map(|l| l.fields()[j].1).collect();
                let (mean, stderr) = mean_stderr(&vals);
                fields.push((*name, mean, stderr));
            }
        }
        LedgerSummary { runs, fields }
    }

    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.fields.iter().find(|f| f.0 == name).map(|f| (f.1, f.2))
    }
}

fn mean_stderr(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
