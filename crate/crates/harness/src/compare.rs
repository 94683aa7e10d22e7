//! Merge several configs on a shared problem into one ranked table.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::{self, Write};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_resolved, ExperimentResult};
use crate::summary::VariantSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub rank_final_loss: usize,
    pub rank_steps_to_full_accuracy: Option<usize>,
    pub summary: VariantSummary,
}

/// The two rank columns followed by the summary columns.
pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], mut out: W) -> io::Result<()> {
    let mut inner = csv::Writer::from_writer(Vec::new());
    for r in rows {
        inner.serialize(&r.summary).map_err(io::Error::other)?;
    }
    let body = inner.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    let body = String::from_utf8(body).map_err(io::Error::other)?;
    let mut lines = body.lines();
    let header = lines.next().unwrap_or("");
    writeln!(out, "rank_final_loss,rank_steps_to_full_accuracy,{header}")?;
    for (r, line) in rows.iter().zip(lines) {
        let acc = r.rank_steps_to_full_accuracy.map_or(String::new(), |k| k.to_string());
        writeln!(out, "{},{acc},{line}", r.rank_final_loss)?;
    }
    Ok(())
}

/// Seeds shared by every config, in ascending order.
pub fn seed_intersection(configs: &[RunConfig]) -> Vec<u64> {
    let mut sets = configs.iter().map(|c| c.seeds.iter().copied().collect::<BTreeSet<u64>>());
    let first = sets.next().unwrap_or_default();
    sets.fold(first, |acc, s| acc.intersection(&s).copied().collect()).into_iter().collect()
}

pub fn check_compatible(configs: &[RunConfig]) -> Result<Vec<u64>> {
    let first = configs.first().ok_or_else(|| HarnessError::config("compare needs at least one config"))?;
    for c in &configs[1..] {
        if c.problem_key() != first.problem_key() {
            return Err(HarnessError::config(format!(
                "problems differ: {} vs {}",
                first.problem_key(),
                c.problem_key()
            )));
        }
        if c.iters != first.iters {
            return Err(HarnessError::config(format!("budgets differ: {} vs {} iters", first.iters, c.iters)));
        }
    }
    let seeds = seed_intersection(configs);
    if seeds.is_empty() {
        return Err(HarnessError::config("configs share no seeds"));
    }
    Ok(seeds)
}

fn by_option(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Rank summaries: ascending final loss and ascending steps to full accuracy,
/// ties broken by variant name. Rows come out in final-loss order.
pub fn rank(summaries: Vec<VariantSummary>) -> Vec<ComparisonRow> {
    let mut order: Vec<usize> = (0..summaries.len()).collect();
    order.sort_by(|&i, &j| {
        by_option(summaries[i].final_loss_mean, summaries[j].final_loss_mean)
            .then_with(|| summaries[i].variant.cmp(&summaries[j].variant))
    });
    let classify = summaries.iter().any(|s| s.steps_to_full_accuracy_mean.is_some());
    let mut acc_order: Vec<usize> = (0..summaries.len()).collect();
    acc_order.sort_by(|&i, &j| {
        by_option(summaries[i].steps_to_full_accuracy_mean, summaries[j].steps_to_full_accuracy_mean)
            .then_with(|| summaries[i].variant.cmp(&summaries[j].variant))
    });
    let acc_rank = |i: usize| classify.then(|| acc_order.iter().position(|&k| k == i).unwrap_or(0) + 1);
    order
        .iter()
        .enumerate()
        .map(|(pos, &i)| ComparisonRow {
            rank_final_loss: pos + 1,
            rank_steps_to_full_accuracy: acc_rank(i),
            summary: summaries[i].clone(),
        })
        .collect()
}

pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub experiments: Vec<ExperimentResult>,
    pub seeds: Vec<u64>,
}

/// Run every config on the shared seeds and rank the variants.
pub fn compare(configs: &[RunConfig]) -> Result<Comparison> {
    let seeds = check_compatible(configs)?;
    let mut names = BTreeSet::new();
    let mut experiments = Vec::new();
    for c in configs {
        let c = RunConfig { seeds: seeds.clone(), ..c.clone() };
        let r = c.resolve()?;
        if !names.insert(r.variant.clone()) {
            return Err(HarnessError::config(format!("variant `{}` appears twice", r.variant)));
        }
        experiments.push(run_resolved(&r)?);
    }
    let rows = rank(experiments.iter().map(|e| e.summary.clone()).collect());
    Ok(Comparison { rows, experiments, seeds })
}
