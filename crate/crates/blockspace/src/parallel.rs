//! Multi-threaded drivers. Results match the sequential core functions
//! exactly: every chain owns its random stream and outcomes are combined in
//! start and grid order.

use blockspace_core::estimation::{assemble_fit, fit_start, FitConfig};
use blockspace_core::selection::{assemble_selection, SelectionTable};
use blockspace_core::{ExpressionDataset, FitResult, ModelSpec};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Environment variable holding the worker count; unset or `0` uses rayon's
/// default.
pub const THREADS_ENV: &str = "BLOCKSPACE_THREADS";

pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn fit_starts(ds: &ExpressionDataset, spec: &ModelSpec, config: &FitConfig) -> blockspace_core::Result<FitResult> {
    let outcomes = (0..config.n_starts)
        .into_par_iter()
        .map(|s| fit_start(ds, spec, config, s))
        .collect::<blockspace_core::Result<Vec<_>>>()?;
    assemble_fit(ds, spec, config, outcomes)
}

/// Runs the starts concurrently on the current rayon pool.
pub fn fit_parallel(ds: &ExpressionDataset, spec: &ModelSpec, config: &FitConfig) -> Result<FitResult> {
    Ok(fit_starts(ds, spec, config)?)
}

/// Fits every grid entry concurrently and selects by ICL.
pub fn select_parallel(ds: &ExpressionDataset, grid: &[ModelSpec], config: &FitConfig) -> Result<(FitResult, SelectionTable)> {
    let outcomes: Vec<_> = grid.par_iter().map(|spec| fit_starts(ds, spec, config)).collect();
    Ok(assemble_selection(grid, outcomes)?)
}
