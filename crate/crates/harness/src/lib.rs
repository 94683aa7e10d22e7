//! Experiment runner for CG-like-Adam: seeded runs over the problem suite,
//! per-step traces, per-variant summaries, cross-variant comparison and
//! long-format plot data.

pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod plotdata;
pub mod runner;
pub mod summary;
pub mod trace;

pub use compare::{compare, Comparison, ComparisonRow};
pub use config::{Overrides, Resolved, RunConfig};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentResult};
pub use plotdata::emit_plot_data;
pub use runner::{run_one, RunOutcome, RunStatus};
pub use summary::{RunStats, VariantSummary};
pub use trace::{TraceRecord, TRACE_HEADER};
