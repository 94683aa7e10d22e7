//! Runs every seed of a config and writes traces, per-run statistics and the
//! variant summary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cgadam::diagnostics::{write_reports_csv, LedgerSummary};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Resolved, RunConfig};
use crate::error::{HarnessError, Result};
use crate::runner::{run_one, RunOutcome, RunStatus};
use crate::summary::{RunStats, VariantSummary};
use crate::trace::{write_csv, write_trace_csv};

pub fn trace_path(dir: &Path, variant: &str, seed: u64) -> PathBuf {
    dir.join(format!("{variant}__seed{seed}.trace.csv"))
}

pub fn accuracy_path(dir: &Path, variant: &str, seed: u64) -> PathBuf {
    dir.join(format!("{variant}__seed{seed}.acc.csv"))
}

pub fn checks_path(dir: &Path, variant: &str, seed: u64) -> PathBuf {
    dir.join(format!("{variant}__seed{seed}.checks.csv"))
}

pub fn summary_path(dir: &Path, variant: &str) -> PathBuf {
    dir.join(format!("{variant}.summary.csv"))
}

pub fn runs_path(dir: &Path, variant: &str) -> PathBuf {
    dir.join(format!("{variant}.runs.csv"))
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).map_err(|e| HarnessError::io(path, e))?;
        buf.flush().map_err(|e| HarnessError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub variant: String,
    pub out_dir: PathBuf,
    pub outcomes: Vec<RunOutcome>,
    pub runs: Vec<RunStats>,
    pub summary: VariantSummary,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    variant: &'a str,
    algorithm: &'a str,
    convention: &'a str,
    approximation: Option<&'a str>,
    step_budget: &'a str,
    trace_rows: &'a str,
    config: &'a RunConfig,
    runs: Vec<RunMetaEntry>,
}

#[derive(Serialize)]
struct RunMetaEntry {
    seed: u64,
    status: &'static str,
    detail: Option<String>,
}

/// Run every seed of `config` (in parallel) and write all outputs.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentResult> {
    let resolved = config.resolve()?;
    run_resolved(&resolved)
}

pub fn run_resolved(r: &Resolved) -> Result<ExperimentResult> {
    let c = &r.config;
    let dir = c.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let outcomes: Vec<RunOutcome> = c.seeds.par_iter().map(|&s| run_one(r, s)).collect::<Result<_>>()?;

    outcomes.par_iter().try_for_each(|o| -> Result<()> {
        write_atomic(&trace_path(&dir, &r.variant, o.seed), |w| write_trace_csv(&o.rows, w).map_err(csv_io))?;
        if !o.accuracy.is_empty() {
            write_atomic(&accuracy_path(&dir, &r.variant, o.seed), |w| write_csv(&o.accuracy, w).map_err(csv_io))?;
        }
        if c.ledger && !o.checks.is_empty() {
            write_atomic(&checks_path(&dir, &r.variant, o.seed), |w| write_reports_csv(&o.checks, w))?;
        }
        Ok(())
    })?;

    let runs: Vec<RunStats> = outcomes
        .iter()
        .map(|o| RunStats::from_trace(&r.variant, o.seed, &o.rows, &o.accuracy, c.iters, c.record_every, c.loss_threshold))
        .collect();
    let summary = VariantSummary::from_runs(&r.variant, &runs, c.iters);
    write_atomic(&runs_path(&dir, &r.variant), |w| write_csv(&runs, w).map_err(csv_io))?;
    write_atomic(&summary_path(&dir, &r.variant), |w| write_csv(std::slice::from_ref(&summary), w).map_err(csv_io))?;

    if c.ledger {
        let ledgers: Vec<_> = outcomes.iter().filter_map(|o| o.ledger.clone()).collect();
        let ls = LedgerSummary::from_runs(&ledgers);
        write_atomic(&dir.join(format!("{}.ledger.csv", r.variant)), |w| {
            writeln!(w, "field,mean,stderr,runs")?;
            for (name, mean, se) in &ls.fields {
                writeln!(w, "{name},{mean},{se},{}", ls.runs)?;
            }
            Ok(())
        })?;
    }

    let meta = RunMeta {
        variant: &r.variant,
        algorithm: r.algorithm.name(),
        convention: r.algorithm.convention(),
        approximation: matches!(r.algorithm, cgadam::Algorithm::Baseline(cgadam::BaselineKind::Coba { .. }))
            .then_some("CoBA is approximated by d_t = g_t - M gamma_t d_{t-1}"),
        step_budget: "one step = one (full- or mini-) batch gradient evaluation; \
                      budgets are desk-scale and not epoch-matched",
        trace_rows: "t = 1 + k*record_every; loss and grad_norm are exact at x_t; \
                     gamma, d_norm, tau and ledger sums come from the step that produced x_t",
        config: c,
        runs: outcomes
            .iter()
            .map(|o| RunMetaEntry {
                seed: o.seed,
                status: o.status.as_str(),
                detail: match &o.status {
                    RunStatus::Completed => None,
                    RunStatus::Diverged { t } => Some(format!("diverged at t={t}")),
                    RunStatus::ContractViolation { t, message } => Some(format!("t={t}: {message}")),
                },
            })
            .collect(),
    };
    write_atomic(&dir.join(format!("{}.meta.json", r.variant)), |w| {
        serde_json::to_writer_pretty(&mut *w, &meta).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;

    Ok(ExperimentResult { variant: r.variant.clone(), out_dir: dir, outcomes, runs, summary })
}
