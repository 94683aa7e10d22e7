use super::CheckStatus;

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub status: CheckStatus,
    /// Least-squares slope of `log min_grad_sq(T)` on `log(ln T / T^{1-b})`.
    pub slope: Option<f64>,
    /// Whether `min_grad_sq(T) T^{1-b} / ln T` avoids monotone growth over the
    /// last decade of `T`.
    pub bounded: Option<bool>,
    /// `(T, min_grad_sq(T) T^{1-b} / ln T)` for every usable sample.
    pub ratios: Vec<(u64, f64)>,
    pub detail: String,
}

impl RateReport {
    fn inconclusive(detail: impl Into<String>) -> Self {
        RateReport {
            status: CheckStatus::Inconclusive,
            slope: None,
            bounded: None,
            ratios: Vec::new(),
            detail: detail.into(),
        }
    }
}

const MIN_POINTS: usize = 5;

/// About `per_decade` log-spaced step counts in `[1, t_max]`, always including `t_max`.
pub fn log_spaced_checkpoints(t_max: u64, per_decade: u32) -> Vec<u64> {
    let mut out = Vec::new();
    let top = (t_max as f64).log10();
    let n = (top * per_decade as f64).ceil() as u64;
    for i in 0..=n {
        let t = 10f64.powf(i as f64 / per_decade as f64).round() as u64;
        let t = t.clamp(1, t_max);
        if out.last() != Some(&t) {
            out.push(t);
        }
    }
    if out.last() != Some(&t_max) {
        out.push(t_max);
    }
    out
}

/// Compare a min-so-far squared gradient norm series against the
/// `ln T / T^{1-b}` envelope.
///
/// Needs at least five samples with `T >= 2` spanning a decade and a series
/// that actually moves; anything less is reported as inconclusive.
pub fn rate_check(min_grad_sq: &[(u64, f64)], b: f64) -> RateReport {
    let usable: Vec<(u64, f64)> = min_grad_sq
        .iter()
        .copied()
        .filter(|&(t, v)| t >= 2 && v.is_finite() && v > 0.0)
        .collect();
    if usable.len() < MIN_POINTS {
        return RateReport::inconclusive(format!("{} usable samples, need {MIN_POINTS}", usable.len()));
    }
    let t_lo = usable.iter().map(|p| p.0).min().unwrap_or(0);
    let t_hi = usable.iter().map(|p| p.0).max().unwrap_or(0);
    if (t_hi as f64) < 10.0 * t_lo as f64 {
        return RateReport::inconclusive("samples span less than one decade");
    }
    let v0 = usable[0].1;
    if usable.iter().all(|&(_, v)| v == v0) {
        return RateReport::inconclusive("series is constant; no rate to fit");
    }

    let envelope = |t: u64| (t as f64).ln() / (t as f64).powf(1.0 - b);
    let xs: Vec<f64> = usable.iter().map(|&(t, _)| envelope(t).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { Some(sxy / sxx) } else { None };

    let ratios: Vec<(u64, f64)> = usable.iter().map(|&(t, v)| (t, v / envelope(t))).collect();
    let last_decade: Vec<f64> = ratios.iter().filter(|(t, _)| *t as f64 * 10.0 >= t_hi as f64).map(|r| r.1).collect();
    let growing = last_decade.len() >= 2 && last_decade.windows(2).all(|w| w[1] > w[0]);
    let bounded = !growing;
    RateReport {
        status: if bounded { CheckStatus::Pass } else { CheckStatus::Fail },
        slope,
        bounded: Some(bounded),
        ratios,
        detail: if bounded { String::new() } else { "ratio grows monotonically over the last decade".into() },
    }
}
