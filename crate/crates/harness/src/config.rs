//! Flat JSON experiment description and its command-line overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use cgadam::problems::{logistic_regression, quadratic, rosenbrock, tiny_mlp, GradientOracle};
use cgadam::{Algorithm, BaselineKind, Beta1Schedule, ConjugateMethod, HyperParams};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const PROBLEMS: [&str; 4] = ["quadratic", "rosenbrock", "logistic_regression", "tiny_mlp"];
pub const OPTIMIZERS: [&str; 6] = ["cg_like_adam", "generic_adam", "adam", "amsgrad", "amsgrad_bc", "coba"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: String,
    /// Problem dimension; defaults to 10 for quadratic/logistic and 2 for Rosenbrock.
    pub dim: Option<usize>,
    pub condition: f64,
    pub n_samples: usize,
    pub hidden: usize,
    /// Seed of the generated dataset, shared by every run seed.
    pub problem_seed: u64,
    /// Minibatch size for finite-sum problems; full batch when absent.
    pub batch_size: Option<usize>,
    pub optimizer: String,
    pub method: String,
    pub alpha: f64,
    pub lr_exponent: f64,
    pub beta1: f64,
    /// `constant` or `inverse_time` (`beta1 / t`).
    pub beta1_schedule: String,
    pub beta2: f64,
    pub a: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub denom_guard: f64,
    pub coba_m: f64,
    pub vanilla_cg: bool,
    pub per_group_gamma: bool,
    pub iters: u64,
    pub seeds: Vec<u64>,
    pub noise_scale: f64,
    #[serde(rename = "clip_H")]
    pub clip_h: Option<f64>,
    pub record_every: u64,
    pub out_dir: PathBuf,
    pub ledger: bool,
    pub loss_threshold: Option<f64>,
    /// Write wall-clock milliseconds into traces (breaks byte-identical reruns).
    pub timing: bool,
    /// Name used in output files; derived from optimizer and method when absent.
    pub variant: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hp = HyperParams::default();
        RunConfig {
            problem: "quadratic".into(),
            dim: None,
            condition: 100.0,
            n_samples: 200,
            hidden: 16,
            problem_seed: 0,
            batch_size: None,
            optimizer: "cg_like_adam".into(),
            method: "fr".into(),
            alpha: hp.alpha0,
            lr_exponent: hp.lr_exponent,
            beta1: hp.beta1.initial(),
            beta1_schedule: "constant".into(),
            beta2: hp.beta2,
            a: hp.a,
            lambda: hp.lambda,
            epsilon: hp.epsilon,
            denom_guard: hp.denom_guard,
            coba_m: cgadam::baselines::COBA_DEFAULT_M,
            vanilla_cg: false,
            per_group_gamma: false,
            iters: 1000,
            seeds: vec![0],
            noise_scale: 0.0,
            clip_h: None,
            record_every: 1,
            out_dir: PathBuf::from("runs"),
            ledger: false,
            loss_threshold: None,
            timing: false,
            variant: None,
        }
    }
}

/// Command-line values that replace config fields when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub optimizer: Option<String>,
    pub method: Option<String>,
    pub alpha: Option<f64>,
    pub lr_exponent: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub a: Option<f64>,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub iters: Option<u64>,
    pub seed: Option<u64>,
    pub noise_scale: Option<f64>,
    pub clip_h: Option<f64>,
    pub ledger: bool,
    pub vanilla_cg: bool,
    pub timing: bool,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = &self.$field { c.$target = v.clone(); })*
            };
        }
        set!(problem => problem, optimizer => optimizer, method => method, alpha => alpha,
             lr_exponent => lr_exponent, beta1 => beta1, beta2 => beta2, a => a, lambda => lambda,
             epsilon => epsilon, iters => iters, noise_scale => noise_scale, out => out_dir);
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        if let Some(h) = self.clip_h {
            c.clip_h = Some(h);
        }
        c.ledger |= self.ledger;
        c.vanilla_cg |= self.vanilla_cg;
        c.timing |= self.timing;
    }
}

/// Everything a run needs, resolved and validated once.
#[derive(Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub variant: String,
    pub algorithm: Algorithm,
    pub hp: HyperParams,
    pub problem: Arc<dyn GradientOracle>,
}

impl std::fmt::Debug for Resolved {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Resolved")
            .field("variant", &self.variant)
            .field("algorithm", &self.algorithm)
            .field("problem", &self.problem.name())
            .finish()
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
    }

    pub fn hyper_params(&self) -> Result<HyperParams> {
        let method: ConjugateMethod = self.method.parse()?;
        let beta1 = match self.beta1_schedule.as_str() {
            "constant" => Beta1Schedule::Constant(self.beta1),
            "inverse_time" => Beta1Schedule::InverseTime(self.beta1),
            other => return Err(HarnessError::config(format!("unknown beta1_schedule `{other}`"))),
        };
        let hp = HyperParams {
            alpha0: self.alpha,
            lr_exponent: self.lr_exponent,
            beta1,
            beta2: self.beta2,
            a: self.a,
            epsilon: self.epsilon,
            method,
            lambda: self.lambda,
            denom_guard: self.denom_guard,
            rectify: !self.vanilla_cg,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        let alg = match self.optimizer.as_str() {
            "cg_like_adam" => Algorithm::CgLikeAdam,
            "generic_adam" => Algorithm::Baseline(BaselineKind::GenericAdam),
            "adam" => Algorithm::Baseline(BaselineKind::Adam),
            "amsgrad" => Algorithm::Baseline(BaselineKind::Amsgrad),
            "amsgrad_bc" => Algorithm::Baseline(BaselineKind::AmsgradBc),
            "coba" => Algorithm::Baseline(BaselineKind::Coba { m: self.coba_m }),
            other => {
                return Err(HarnessError::config(format!(
                    "unknown optimizer `{other}` (expected one of {})",
                    OPTIMIZERS.join(", ")
                )))
            }
        };
        alg.validate()?;
        Ok(alg)
    }

    pub fn build_problem(&self) -> Result<Arc<dyn GradientOracle>> {
        let p: Arc<dyn GradientOracle> = match self.problem.as_str() {
            "quadratic" => Arc::new(quadratic(self.dim.unwrap_or(10), self.condition)?),
            "rosenbrock" => Arc::new(rosenbrock(self.dim.unwrap_or(2))?),
            "logistic_regression" => {
                Arc::new(logistic_regression(self.n_samples, self.dim.unwrap_or(10), self.problem_seed)?)
            }
            "tiny_mlp" => Arc::new(tiny_mlp(self.hidden, self.problem_seed)?),
            other => {
                return Err(HarnessError::config(format!(
                    "unknown problem `{other}` (expected one of {})",
                    PROBLEMS.join(", ")
                )))
            }
        };
        Ok(p)
    }

    /// Identity of the problem instance, used to check that compared configs agree.
    pub fn problem_key(&self) -> String {
        match self.problem.as_str() {
            "quadratic" => format!("quadratic(dim={},condition={})", self.dim.unwrap_or(10), self.condition),
            "rosenbrock" => format!("rosenbrock(dim={})", self.dim.unwrap_or(2)),
            "logistic_regression" => format!(
                "logistic_regression(n={},dim={},seed={})",
                self.n_samples,
                self.dim.unwrap_or(10),
                self.problem_seed
            ),
            "tiny_mlp" => format!("tiny_mlp(hidden={},seed={})", self.hidden, self.problem_seed),
            other => other.to_string(),
        }
    }

    pub fn default_variant(&self) -> String {
        let mut name = self.optimizer.clone();
        if matches!(self.optimizer.as_str(), "cg_like_adam" | "coba") {
            name.push('-');
            name.push_str(&self.method.to_ascii_lowercase());
        }
        if self.vanilla_cg {
            name.push_str("-vanilla");
        }
        name
    }

    pub fn resolve(&self) -> Result<Resolved> {
        if self.iters == 0 {
            return Err(HarnessError::config("iters must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::config("seeds must not be empty"));
        }
        if self.record_every == 0 || self.record_every > self.iters {
            return Err(HarnessError::config(format!(
                "record_every must lie in 1..=iters, got {}",
                self.record_every
            )));
        }
        let mut unique = self.seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        if unique.len() != self.seeds.len() {
            return Err(HarnessError::config("seeds must be distinct"));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(HarnessError::config("noise_scale must be nonnegative"));
        }
        if self.noise_scale > 0.0 && self.clip_h.is_none() {
            return Err(HarnessError::config("noise_scale > 0 requires clip_H"));
        }
        if let Some(h) = self.clip_h {
            if !(h > 0.0) {
                return Err(HarnessError::config("clip_H must be positive"));
            }
        }
        let hp = self.hyper_params()?;
        if self.ledger && hp.beta1.initial() == 0.5 {
            return Err(HarnessError::config("ledger diagnostics need beta1 != 0.5"));
        }
        let algorithm = self.algorithm()?;
        if self.vanilla_cg && algorithm != Algorithm::CgLikeAdam {
            return Err(HarnessError::config("vanilla_cg only applies to cg_like_adam"));
        }
        let problem = self.build_problem()?;
        if let Some(b) = self.batch_size {
            match problem.n_samples() {
                Some(n) if b >= 1 && b <= n => {}
                Some(n) => return Err(HarnessError::config(format!("batch_size must lie in 1..={n}"))),
                None => {
                    return Err(HarnessError::config(format!("{} has no samples to batch", self.problem)))
                }
            }
        }
        let variant = self.variant.clone().unwrap_or_else(|| self.default_variant());
        if variant.is_empty() || variant.contains("__") || variant.contains(['/', '\\', ',']) {
            return Err(HarnessError::config(format!("variant name `{variant}` is not file-safe")));
        }
        Ok(Resolved { config: self.clone(), variant, algorithm, hp, problem })
    }
}
