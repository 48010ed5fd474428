//! Domain types shared by every stage of the pipeline.
//!
//! Cluster labels are zero-based inside the library (`0..K`, `0..R`); file
//! formats written by the CLI use one-based labels.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationReport, Violation};
use crate::kernels::{KernelKind, KernelParams};

/// Planar location of a measurement site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Real-valued `n × p` matrix whose columns are located at 2-D sites.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionDataset {
    values: DMatrix<f64>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    coords: Vec<Point>,
}

impl ExpressionDataset {
    /// Builds a dataset, rejecting it with every violation found.
    pub fn new(
        values: DMatrix<f64>,
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        coords: Vec<Point>,
    ) -> Result<Self> {
        let ds = ExpressionDataset {
            values,
            row_ids,
            col_ids,
            coords,
        };
        validate_dataset(&ds).map_err(Error::InvalidDataset)?;
        Ok(ds)
    }

    /// Dataset with generated ids (`row_1..`, `col_1..`).
    pub fn from_matrix(values: DMatrix<f64>, coords: Vec<Point>) -> Result<Self> {
        let row_ids = (1..=values.nrows()).map(|i| format!("row_{i}")).collect();
        let col_ids = (1..=values.ncols()).map(|j| format!("col_{j}")).collect();
        Self::new(values, row_ids, col_ids, coords)
    }

    /// Skips validation. Used by [`validate_dataset`] tests and by callers that
    /// want the full violation list rather than a constructed value.
    pub fn new_unchecked(
        values: DMatrix<f64>,
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        coords: Vec<Point>,
    ) -> Self {
        ExpressionDataset {
            values,
            row_ids,
            col_ids,
            coords,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    /// Row `i` restricted to the given columns.
    pub fn row_subset(&self, row: usize, cols: &[usize]) -> Vec<f64> {
        cols.iter().map(|&j| self.values[(row, j)]).collect()
    }
}

/// Checks every dataset invariant and reports all violations at once.
pub fn validate_dataset(ds: &ExpressionDataset) -> core::result::Result<(), ValidationReport> {
    let mut violations = Vec::new();
    let (n, p) = ds.values.shape();
    if n < 1 {
        violations.push(Violation::DimensionMismatch(String::from("need at least one row")));
    }
    if p < 2 {
        violations.push(Violation::DimensionMismatch(String::from("need at least two columns")));
    }
    if ds.row_ids.len() != n {
        violations.push(Violation::DimensionMismatch(format!(
            "{} row ids for {n} rows",
            ds.row_ids.len()
        )));
    }
    if ds.col_ids.len() != p {
        violations.push(Violation::DimensionMismatch(format!(
            "{} column ids for {p} columns",
            ds.col_ids.len()
        )));
    }
    if ds.coords.len() != p {
        violations.push(Violation::DimensionMismatch(format!(
            "{} coordinate pairs for {p} columns",
            ds.coords.len()
        )));
    }
    for i in 0..n {
        for j in 0..p {
            if !ds.values[(i, j)].is_finite() {
                violations.push(Violation::NonFiniteValue { row: i, col: j });
            }
        }
    }
    if ds.coords.iter().any(|c| !c.x.is_finite() || !c.y.is_finite()) {
        violations.push(Violation::DimensionMismatch(String::from("non-finite coordinate")));
    }
    let mut seen = BTreeSet::new();
    for id in &ds.col_ids {
        if !seen.insert(id.as_str()) {
            violations.push(Violation::DuplicateColumnId(id.clone()));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport { violations })
    }
}

/// Row and column cluster assignments.
///
/// Row clusters may be empty; column clusters never are.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoClusterLabels {
    rows: Vec<usize>,
    cols: Vec<usize>,
    n_row_clusters: usize,
    n_col_clusters: usize,
}

impl CoClusterLabels {
    pub fn new(
        rows: Vec<usize>,
        cols: Vec<usize>,
        n_row_clusters: usize,
        n_col_clusters: usize,
    ) -> Result<Self> {
        if n_row_clusters == 0 || n_col_clusters == 0 {
            return Err(Error::InvalidLabels(String::from("cluster counts must be positive")));
        }
        if let Some(&bad) = rows.iter().find(|&&k| k >= n_row_clusters) {
            return Err(Error::InvalidLabels(format!(
                "row label {bad} outside 0..{n_row_clusters}"
            )));
        }
        if let Some(&bad) = cols.iter().find(|&&r| r >= n_col_clusters) {
            return Err(Error::InvalidLabels(format!(
                "column label {bad} outside 0..{n_col_clusters}"
            )));
        }
        let sizes = cluster_sizes(&cols, n_col_clusters);
        if let Some(r) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidLabels(format!("column cluster {r} is empty")));
        }
        Ok(CoClusterLabels {
            rows,
            cols,
            n_row_clusters,
            n_col_clusters,
        })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn n_row_clusters(&self) -> usize {
        self.n_row_clusters
    }

    pub fn n_col_clusters(&self) -> usize {
        self.n_col_clusters
    }

    pub fn row_members(&self, k: usize) -> Vec<usize> {
        members(&self.rows, k)
    }

    pub fn col_members(&self, r: usize) -> Vec<usize> {
        members(&self.cols, r)
    }

    pub fn row_sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.rows, self.n_row_clusters)
    }

    pub fn col_sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.cols, self.n_col_clusters)
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<usize>) {
        (self.rows, self.cols)
    }
}

/// Indices carrying label `label`, ascending.
pub fn members(labels: &[usize], label: usize) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter_map(|(i, &l)| (l == label).then_some(i))
        .collect()
}

pub fn cluster_sizes(labels: &[usize], n_clusters: usize) -> Vec<usize> {
    let mut sizes = vec![0; n_clusters];
    for &l in labels {
        if l < n_clusters {
            sizes[l] += 1;
        }
    }
    sizes
}

/// Parameters of one `(k, r)` block: mean, spatial share, nugget share and
/// the inverse-gamma prior on the row-specific variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParameters {
    pub mu: f64,
    pub tau: f64,
    pub xi: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BlockParameters {
    /// Builds a block from `tau`; the nugget is `c_delta - tau`.
    pub fn new(mu: f64, tau: f64, alpha: f64, beta: f64, c_delta: f64) -> Result<Self> {
        if !(c_delta > 0.0) {
            return Err(Error::NonPositiveParameter {
                name: "c_delta",
                value: c_delta,
            });
        }
        if !(tau > 0.0 && tau < c_delta) {
            return Err(Error::InvalidParameter(format!(
                "tau = {tau} must lie in (0, {c_delta})"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu = {mu} is not finite")));
        }
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        Ok(BlockParameters {
            mu,
            tau,
            xi: c_delta - tau,
            alpha,
            beta,
        })
    }

    /// Spatial signal-to-noise ratio `tau / xi`.
    pub fn snr(&self) -> f64 {
        self.tau / self.xi
    }
}

/// `K × R` grid of block parameters, row-major in `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGrid {
    n_row_clusters: usize,
    n_col_clusters: usize,
    blocks: Vec<BlockParameters>,
}

impl BlockGrid {
    pub fn filled(n_row_clusters: usize, n_col_clusters: usize, value: BlockParameters) -> Self {
        BlockGrid {
            n_row_clusters,
            n_col_clusters,
            blocks: vec![value; n_row_clusters * n_col_clusters],
        }
    }

    pub fn from_blocks(
        n_row_clusters: usize,
        n_col_clusters: usize,
        blocks: Vec<BlockParameters>,
    ) -> Result<Self> {
        if blocks.len() != n_row_clusters * n_col_clusters {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for a {n_row_clusters}x{n_col_clusters} grid",
                blocks.len()
            )));
        }
        Ok(BlockGrid {
            n_row_clusters,
            n_col_clusters,
            blocks,
        })
    }

    pub fn n_row_clusters(&self) -> usize {
        self.n_row_clusters
    }

    pub fn n_col_clusters(&self) -> usize {
        self.n_col_clusters
    }

    pub fn get(&self, k: usize, r: usize) -> &BlockParameters {
        &self.blocks[k * self.n_col_clusters + r]
    }

    pub fn set(&mut self, k: usize, r: usize, value: BlockParameters) {
        self.blocks[k * self.n_col_clusters + r] = value;
    }

    pub fn blocks(&self) -> &[BlockParameters] {
        &self.blocks
    }
}

/// Model dimensions, kernel family and identifiability constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub row_clusters: usize,
    pub col_clusters: usize,
    pub kernel: KernelKind,
    /// `tau + xi` for every block.
    pub c_delta: f64,
    /// Starting kernel parameters per column cluster; empty means "derive
    /// from the coordinates".
    pub phi: Vec<KernelParams>,
}

pub const DEFAULT_C_DELTA: f64 = 10.0;

impl ModelSpec {
    pub fn new(row_clusters: usize, col_clusters: usize, kernel: KernelKind) -> Self {
        ModelSpec {
            row_clusters,
            col_clusters,
            kernel,
            c_delta: DEFAULT_C_DELTA,
            phi: Vec::new(),
        }
    }

    pub fn with_c_delta(mut self, c_delta: f64) -> Self {
        self.c_delta = c_delta;
        self
    }

    pub fn with_phi(mut self, phi: Vec<KernelParams>) -> Self {
        self.phi = phi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.row_clusters == 0 || self.col_clusters == 0 {
            return Err(Error::InvalidParameter(String::from(
                "cluster counts must be positive",
            )));
        }
        if !(self.c_delta > 0.0) {
            return Err(Error::NonPositiveParameter {
                name: "c_delta",
                value: self.c_delta,
            });
        }
        if !self.phi.is_empty() {
            if self.phi.len() != self.col_clusters {
                return Err(Error::DimensionMismatch(format!(
                    "{} kernel parameter vectors for {} column clusters",
                    self.phi.len(),
                    self.col_clusters
                )));
            }
            for phi in &self.phi {
                if phi.kind() != self.kernel {
                    return Err(Error::InvalidParameter(String::from(
                        "all column clusters must share the model kernel family",
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Summary of one independent chain of the estimation algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: usize,
    pub best_loglik: f64,
    pub best_iteration: usize,
    pub loglik_trace: Vec<f64>,
    pub se_accepted: usize,
    pub se_proposed: usize,
    /// Iterations where the CE or M step lowered the classification
    /// log-likelihood beyond round-off.
    pub monotonicity_violations: usize,
}

/// Outcome of a multi-start fit: the state at the best iteration over all
/// starts, plus per-start diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub labels: CoClusterLabels,
    pub theta: BlockGrid,
    pub phi: Vec<KernelParams>,
    pub kernel: KernelKind,
    pub c_delta: f64,
    /// Trace of the winning start, one entry per iteration.
    pub loglik_trace: Vec<f64>,
    /// One-based iteration of the winning start where the maximum occurred.
    pub best_iteration: usize,
    pub best_start: usize,
    pub best_loglik: f64,
    pub icl: f64,
    pub seed: u64,
    pub n_starts: usize,
    pub starts: Vec<StartSummary>,
}

impl FitResult {
    pub fn monotonicity_violations(&self) -> usize {
        self.starts.iter().map(|s| s.monotonicity_violations).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn grid_coords(p: usize) -> Vec<Point> {
        (0..p).map(|j| Point::new(j as f64, 0.0)).collect()
    }

    #[test]
    fn valid_dataset_passes() {
        let m = DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64);
        let ds = ExpressionDataset::new(m, ids("g", 3), ids("s", 4), grid_coords(4));
        assert!(ds.is_ok());
    }

    #[test]
    fn nan_is_located() {
        let mut m = DMatrix::from_element(3, 4, 1.0);
        m[(2, 1)] = f64::NAN;
        let ds = ExpressionDataset::new_unchecked(m, ids("g", 3), ids("s", 4), grid_coords(4));
        let report = validate_dataset(&ds).unwrap_err();
        assert_eq!(report.violations, vec![Violation::NonFiniteValue { row: 2, col: 1 }]);
    }

    #[test]
    fn coordinate_count_mismatch() {
        let m = DMatrix::from_element(3, 4, 1.0);
        let ds = ExpressionDataset::new_unchecked(m, ids("g", 3), ids("s", 4), grid_coords(3));
        let report = validate_dataset(&ds).unwrap_err();
        assert!(matches!(report.violations[..], [Violation::DimensionMismatch(_)]));
    }

    #[test]
    fn duplicate_column_ids_reported() {
        let m = DMatrix::from_element(2, 3, 1.0);
        let cols = vec!["a".to_string(), "b".to_string(), "a".to_string()];
        let ds = ExpressionDataset::new_unchecked(m, ids("g", 2), cols, grid_coords(3));
        let report = validate_dataset(&ds).unwrap_err();
        assert_eq!(report.violations, vec![Violation::DuplicateColumnId("a".to_string())]);
    }

    #[test]
    fn block_parameters_respect_constraint() {
        let b = BlockParameters::new(0.3, 7.5, 3.0, 2.0, 10.0).unwrap();
        assert!((b.tau + b.xi - 10.0).abs() <= 1e-10);
        assert!((b.snr() - 3.0).abs() < 1e-12);
        assert!(BlockParameters::new(0.0, 10.0, 3.0, 2.0, 10.0).is_err());
        assert!(BlockParameters::new(0.0, 1.0, 0.0, 2.0, 10.0).is_err());
    }

    #[test]
    fn labels_reject_empty_column_cluster() {
        assert!(CoClusterLabels::new(vec![0, 1], vec![0, 0, 0], 2, 2).is_err());
        assert!(CoClusterLabels::new(vec![0, 0], vec![0, 1, 1], 3, 2).is_ok());
        assert!(CoClusterLabels::new(vec![0, 5], vec![0, 1], 3, 2).is_err());
    }
}
