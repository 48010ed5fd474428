//! Integrated completed likelihood and sweeps over model dimensions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit, FitConfig};
use crate::kernels::KernelKind;
use crate::types::{ExpressionDataset, FitResult, ModelSpec};

/// `logL - n ln K - p ln R - (4KR + dim_phi R)/2 · ln(np)`.
pub fn icl(best_loglik: f64, n: usize, p: usize, k: usize, r: usize, dim_phi: usize) -> f64 {
    let free = (4 * k * r + dim_phi * r) as f64;
    best_loglik - n as f64 * (k as f64).ln() - p as f64 * (r as f64).ln() - 0.5 * free * ((n * p) as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "message")]
pub enum FitStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub row_clusters: usize,
    pub col_clusters: usize,
    pub kernel: KernelKind,
    pub best_loglik: Option<f64>,
    pub icl: Option<f64>,
    pub status: FitStatus,
    /// Position of the configuration in the grid.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionTable {
    pub rows: Vec<SelectionRow>,
}

impl SelectionTable {
    /// Index of the successful row with the largest ICL; ties go to the
    /// earliest grid entry.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(v) = row.icl {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Builds the table from per-configuration outcomes (in grid order) and
/// returns the ICL-maximizing fit.
pub fn assemble_selection(grid: &[ModelSpec], outcomes: Vec<Result<FitResult>>) -> Result<(FitResult, SelectionTable)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.len() != outcomes.len() {
        return Err(Error::LengthMismatch(grid.len(), outcomes.len()));
    }
    let mut table = SelectionTable::default();
    let mut fits = Vec::with_capacity(grid.len());
    for (index, (spec, outcome)) in grid.iter().zip(outcomes).enumerate() {
        let (best_loglik, icl, status) = match &outcome {
            Ok(f) if f.icl.is_finite() => (Some(f.best_loglik), Some(f.icl), FitStatus::Ok),
            Ok(_) => (None, None, FitStatus::Failed(String::from("non-finite ICL"))),
            Err(e) => (None, None, FitStatus::Failed(e.to_string())),
        };
        table.rows.push(SelectionRow {
            row_clusters: spec.row_clusters,
            col_clusters: spec.col_clusters,
            kernel: spec.kernel,
            best_loglik,
            icl,
            status,
            index,
        });
        fits.push(outcome.ok());
    }
    let winner = table.argmax().ok_or_else(|| Error::OptimizerFailure(String::from("every configuration failed")))?;
    let best = fits[winner].take().ok_or(Error::EmptyGrid)?;
    Ok((best, table))
}

/// Fits every configuration in turn and selects by ICL.
pub fn select(ds: &ExpressionDataset, grid: &[ModelSpec], config: &FitConfig) -> Result<(FitResult, SelectionTable)> {
    let outcomes = grid.iter().map(|spec| fit(ds, spec, config)).collect();
    assemble_selection(grid, outcomes)
}

/// Grid over `K × R` for one kernel family, row-major in `K`.
pub fn dimension_grid(row_clusters: &[usize], col_clusters: &[usize], kernel: KernelKind, c_delta: f64) -> Vec<ModelSpec> {
    let mut grid = Vec::with_capacity(row_clusters.len() * col_clusters.len());
    for &k in row_clusters {
        for &r in col_clusters {
            grid.push(ModelSpec::new(k, r, kernel).with_c_delta(c_delta));
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn icl_worked_example() {
        let v = icl(-1000.0, 60, 60, 3, 3, 1);
        let expected = -1000.0 - 120.0 * 3f64.ln() - 19.5 * 3600f64.ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-10);
        assert_abs_diff_eq!(v, -1291.5129, epsilon = 1e-4);
    }

    #[test]
    fn single_block_penalty() {
        let v = icl(-50.0, 10, 20, 1, 1, 1);
        assert_abs_diff_eq!(v, -50.0 - 2.5 * 200f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn failed_rows_are_excluded() {
        let table = SelectionTable {
            rows: alloc::vec![
                SelectionRow {
                    row_clusters: 2,
                    col_clusters: 2,
                    kernel: KernelKind::Gaussian,
                    best_loglik: None,
                    icl: None,
                    status: FitStatus::Failed(String::from("x")),
                    index: 0,
                },
                SelectionRow {
                    row_clusters: 3,
                    col_clusters: 2,
                    kernel: KernelKind::Gaussian,
                    best_loglik: Some(-10.0),
                    icl: Some(-20.0),
                    status: FitStatus::Ok,
                    index: 1,
                },
            ],
        };
        assert_eq!(table.argmax(), Some(1));
    }
}
