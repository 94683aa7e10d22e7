use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cgadam::problems::{logistic_regression, tiny_mlp};
use cgadam_harness::compare::write_comparison_csv;
use cgadam_harness::experiment::write_atomic;
use cgadam_harness::plotdata::DEFAULT_METRICS;
use cgadam_harness::{compare, emit_plot_data, run_experiment, HarnessError, Overrides, Result, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgadam", version, about = "Seeded CG-like-Adam experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config over all of its seeds.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run several configs on their shared seeds and rank the variants.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        flags: Flags,
        /// Where to write the comparison table (default: <first out_dir>/compare.csv).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Long-format `variant,seed,t,metric,value` rows from a trace directory.
    Plotdata {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a generated dataset as CSV.
    Dataset {
        #[arg(long, default_value = "tiny_mlp")]
        problem: String,
        #[arg(long, default_value_t = 0)]
        problem_seed: u64,
        #[arg(long, default_value_t = 200)]
        n_samples: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Default)]
struct Flags {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lr_exponent: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long = "clip-H")]
    clip_h: Option<f64>,
    #[arg(long)]
    ledger: bool,
    #[arg(long)]
    vanilla_cg: bool,
    /// Record wall-clock time in traces (reruns are then not byte-identical).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            problem: self.problem.clone(),
            optimizer: self.optimizer.clone(),
            method: self.method.clone(),
            alpha: self.alpha,
            lr_exponent: self.lr_exponent,
            beta1: self.beta1,
            beta2: self.beta2,
            a: self.a,
            lambda: self.lambda,
            epsilon: self.epsilon,
            iters: self.iters,
            seed: self.seed,
            noise_scale: self.noise_scale,
            clip_h: self.clip_h,
            ledger: self.ledger,
            vanilla_cg: self.vanilla_cg,
            timing: self.timing,
            out: self.out.clone(),
        }
    }
}

fn load(path: Option<&PathBuf>, flags: &Flags) -> Result<RunConfig> {
    let mut c = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    flags.overrides().apply(&mut c);
    Ok(c)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, flags } => {
            let c = load(config.as_ref(), &flags)?;
            let res = run_experiment(&c)?;
            let s = &res.summary;
            println!(
                "{}: {} runs, {} diverged, final loss {} (std {}), min grad norm {}",
                s.variant,
                s.runs,
                s.diverged,
                fmt_opt(s.final_loss_mean),
                fmt_opt(s.final_loss_std),
                fmt_opt(s.min_grad_norm_mean)
            );
            for o in &res.outcomes {
                if let cgadam_harness::RunStatus::ContractViolation { t, message } = &o.status {
                    eprintln!("seed {}: stopped at t={t}: {message}", o.seed);
                }
                for check in o.checks.iter().filter(|c| !c.passed()) {
                    eprintln!("seed {}: check {} {}: {}", o.seed, check.name, check.status.as_str(), check.detail);
                }
            }
            println!("outputs in {}", res.out_dir.display());
        }
        Command::Compare { configs, flags, table } => {
            let loaded: Vec<RunConfig> = configs.iter().map(|p| load(Some(p), &flags)).collect::<Result<_>>()?;
            let cmp = compare(&loaded)?;
            let path = table.unwrap_or_else(|| loaded[0].out_dir.join("compare.csv"));
            write_atomic(&path, |w| write_comparison_csv(&cmp.rows, w))?;
            for r in &cmp.rows {
                println!(
                    "{:>3} {:<28} final loss {} steps to 100% {}",
                    r.rank_final_loss,
                    r.summary.variant,
                    fmt_opt(r.summary.final_loss_mean),
                    fmt_opt(r.summary.steps_to_full_accuracy_mean)
                );
            }
            println!("table written to {}", path.display());
        }
        Command::Plotdata { dir, metrics, out } => {
            let metrics = metrics.unwrap_or_else(|| DEFAULT_METRICS.iter().map(|s| s.to_string()).collect());
            let report = match &out {
                Some(path) => {
                    let mut result = None;
                    write_atomic(path, |w| {
                        result = Some(emit_plot_data(&dir, &metrics, w));
                        Ok(())
                    })?;
                    result.expect("plot data written")?
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    let r = emit_plot_data(&dir, &metrics, &mut lock)?;
                    lock.flush().map_err(|e| HarnessError::io("stdout", e))?;
                    r
                }
            };
            for (path, why) in &report.skipped {
                eprintln!("skipped {}: {why}", path.display());
            }
        }
        Command::Dataset { problem, problem_seed, n_samples, dim, out } => {
            let data = match problem.as_str() {
                "tiny_mlp" => tiny_mlp(1, problem_seed)?.dataset().clone(),
                "logistic_regression" => logistic_regression(n_samples, dim, problem_seed)?.dataset().clone(),
                other => return Err(HarnessError::config(format!("`{other}` has no dataset"))),
            };
            write_atomic(&out, |w| data.write_csv(w))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
