use super::GradientOracle;

/// Outcome of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    /// `max_k |analytic_k - numeric_k| / max(1, |analytic_k|, |numeric_k|)`.
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

impl GradientCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }
}

pub fn check_gradient(oracle: &dyn GradientOracle, x: &[f64], h: f64) -> GradientCheck {
    let analytic = oracle.gradient(x);
    let mut probe = x.to_vec();
    let numeric: Vec<f64> = (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = oracle.value(&probe);
            probe[k] = x[k] - h;
            let down = oracle.value(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect();
    let mut max_rel_error = 0.0;
    let mut worst_index = 0;
    for (k, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let err = (a - n).abs() / 1f64.max(a.abs()).max(n.abs());
        // NaN compares false; treat it as the worst possible error.
        if err > max_rel_error || err.is_nan() {
            max_rel_error = if err.is_nan() { f64::INFINITY } else { err };
            worst_index = k;
        }
    }
    GradientCheck { max_rel_error, worst_index, analytic, numeric }
}
