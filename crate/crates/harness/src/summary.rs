//! Per-run and per-variant statistics, computed only from recorded trace rows.

use serde::{Deserialize, Serialize};

use crate::runner::DIVERGENCE_LOSS;
use crate::trace::{AccuracyRecord, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub variant: String,
    pub seed: u64,
    /// `ok`, `diverged`, or `incomplete` (trace ends early without diverging).
    pub status: String,
    pub final_t: u64,
    pub final_loss: f64,
    pub best_loss: f64,
    pub min_grad_norm: f64,
    /// Steps until the loss first dropped to the threshold, censored at `iters + 1`.
    pub steps_to_threshold: Option<u64>,
    /// Steps until training accuracy first reached 1, censored at `iters + 1`.
    pub steps_to_full_accuracy: Option<u64>,
}

impl RunStats {
    pub fn from_trace(
        variant: &str,
        seed: u64,
        rows: &[TraceRecord],
        accuracy: &[AccuracyRecord],
        iters: u64,
        record_every: u64,
        loss_threshold: Option<f64>,
    ) -> Self {
        let expected_last = 1 + (iters / record_every) * record_every;
        let diverged = rows.iter().any(|r| !r.is_finite() || r.loss > DIVERGENCE_LOSS);
        let final_t = rows.last().map_or(0, |r| r.t);
        let status = if diverged {
            "diverged"
        } else if final_t < expected_last {
            "incomplete"
        } else {
            "ok"
        };
        let finite: Vec<&TraceRecord> = rows.iter().filter(|r| r.is_finite()).collect();
        let censored = iters + 1;
        RunStats {
            variant: variant.to_string(),
            seed,
            status: status.to_string(),
            final_t,
            final_loss: rows.last().map_or(f64::NAN, |r| r.loss),
            best_loss: finite.iter().map(|r| r.loss).fold(f64::INFINITY, f64::min),
            min_grad_norm: finite.iter().map(|r| r.grad_norm).fold(f64::INFINITY, f64::min),
            steps_to_threshold: loss_threshold.map(|th| {
                finite.iter().find(|r| r.loss <= th).map_or(censored, |r| r.t - 1)
            }),
            steps_to_full_accuracy: (!accuracy.is_empty())
                .then(|| accuracy.iter().find(|a| a.accuracy >= 1.0).map_or(censored, |a| a.t - 1)),
        }
    }

    pub fn diverged(&self) -> bool {
        self.status == "diverged"
    }

    pub fn reached_threshold(&self, iters: u64) -> bool {
        self.steps_to_threshold.is_some_and(|s| s <= iters)
    }

    pub fn reached_full_accuracy(&self, iters: u64) -> bool {
        self.steps_to_full_accuracy.is_some_and(|s| s <= iters)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub runs: usize,
    pub diverged: usize,
    pub final_loss_mean: Option<f64>,
    pub final_loss_std: Option<f64>,
    pub best_loss_mean: Option<f64>,
    pub best_loss_std: Option<f64>,
    pub min_grad_norm_mean: Option<f64>,
    pub min_grad_norm_std: Option<f64>,
    pub steps_to_threshold_mean: Option<f64>,
    pub steps_to_threshold_std: Option<f64>,
    pub threshold_reached: Option<usize>,
    pub steps_to_full_accuracy_mean: Option<f64>,
    pub steps_to_full_accuracy_std: Option<f64>,
    pub full_accuracy_reached: Option<usize>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

impl VariantSummary {
    /// Loss statistics use runs that did not diverge; step counts use every
    /// run, with unreached targets censored at `iters + 1`.
    pub fn from_runs(variant: &str, runs: &[RunStats], iters: u64) -> Self {
        let live: Vec<&RunStats> = runs.iter().filter(|r| !r.diverged()).collect();
        let col = |f: fn(&RunStats) -> f64| mean_std(&live.iter().map(|r| f(r)).collect::<Vec<_>>());
        let (final_loss_mean, final_loss_std) = col(|r| r.final_loss);
        let (best_loss_mean, best_loss_std) = col(|r| r.best_loss);
        let (min_grad_norm_mean, min_grad_norm_std) = col(|r| r.min_grad_norm);
        let steps = |f: fn(&RunStats) -> Option<u64>| {
            let v: Vec<f64> = runs.iter().filter_map(|r| f(r).map(|s| s as f64)).collect();
            if v.len() == runs.len() {
                mean_std(&v)
            } else {
                (None, None)
            }
        };
        let (steps_to_threshold_mean, steps_to_threshold_std) = steps(|r| r.steps_to_threshold);
        let (steps_to_full_accuracy_mean, steps_to_full_accuracy_std) = steps(|r| r.steps_to_full_accuracy);
        VariantSummary {
            variant: variant.to_string(),
            runs: runs.len(),
            diverged: runs.len() - live.len(),
            final_loss_mean,
            final_loss_std,
            best_loss_mean,
            best_loss_std,
            min_grad_norm_mean,
            min_grad_norm_std,
            steps_to_threshold_mean,
            steps_to_threshold_std,
            threshold_reached: steps_to_threshold_mean.map(|_| runs.iter().filter(|r| r.reached_threshold(iters)).count()),
            steps_to_full_accuracy_mean,
            steps_to_full_accuracy_std,
            full_accuracy_reached: steps_to_full_accuracy_mean
                .map(|_| runs.iter().filter(|r| r.reached_full_accuracy(iters)).count()),
        }
    }
}
