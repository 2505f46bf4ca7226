//! Monte Carlo benchmark engine, configuration, reports and the CLI.

pub mod bench;
pub mod cli;
pub mod config;
pub mod report;

pub use bench::{run_bench, BenchResult, BenchSamples, CellResult, TrialSample};
pub use config::{BenchConfig, ChirpConfig, GridConfig, ThresholdConfig};
pub use report::{plot_data, read_report_csv, summarize, write_report, Metric, Series, SummaryRow};

use rayon::prelude::*;

use crate::error::Result;

/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "CHIRP_MI_THREADS";

/// Size rayon's global pool from `CHIRP_MI_THREADS` (first call wins).
pub fn init_workers() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| {
        if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    });
}

/// Evaluate `f(0..n)` on the current rayon pool, returning results in
/// index order. The reported error is the one with the lowest index.
pub fn par_map<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let out: Vec<Result<T>> = (0..n).into_par_iter().map(f).collect();
    out.into_iter().collect()
}
