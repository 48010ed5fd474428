use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelParams};
use crate::types::{cluster_sizes, members, BlockGrid, BlockParameters, ExpressionDataset};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm from a k-means++ seeding. Returns labels in `0..k`;
/// clusters may end empty only when there are fewer distinct points than `k`.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, max_iterations: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    if n == 0 || k <= 1 {
        return vec![0; n];
    }
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }

    let dim = points[0].len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iterations {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            if labels[i] != best.0 {
                labels[i] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    labels
}

/// Moves single members from the largest clusters into empty ones.
pub(crate) fn repair_empty(labels: &mut [usize], n_clusters: usize) {
    loop {
        let sizes = cluster_sizes(labels, n_clusters);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..n_clusters).max_by_key(|&c| (sizes[c], usize::MAX - c)).unwrap_or(0);
        if sizes[largest] < 2 {
            return;
        }
        let j = labels.iter().rposition(|&l| l == largest).unwrap_or(0);
        labels[j] = empty;
    }
}

/// k-means on the rows and on the columns of the raw matrix. Column clusters
/// are repaired to be non-empty.
pub fn initial_labels<R: Rng + ?Sized>(
    ds: &ExpressionDataset,
    n_row_clusters: usize,
    n_col_clusters: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_col_clusters > ds.n_cols() {
        return Err(Error::InvalidParameter(alloc::format!(
            "{n_col_clusters} column clusters for {} columns",
            ds.n_cols()
        )));
    }
    let x = ds.values();
    let rows: Vec<Vec<f64>> = (0..ds.n_rows()).map(|i| x.row(i).iter().copied().collect()).collect();
    let cols: Vec<Vec<f64>> = (0..ds.n_cols()).map(|j| x.column(j).iter().copied().collect()).collect();
    let row_labels = kmeans(&rows, n_row_clusters, 100, rng);
    let mut col_labels = kmeans(&cols, n_col_clusters, 100, rng);
    repair_empty(&mut col_labels, n_col_clusters);
    Ok((row_labels, col_labels))
}

/// Reassigns `round(fraction * n)` distinct positions to uniform labels.
pub fn perturb_labels<R: Rng + ?Sized>(labels: &mut [usize], n_clusters: usize, fraction: f64, rng: &mut R) {
    let n = labels.len();
    let count = ((fraction * n as f64).round() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
        labels[idx[i]] = rng.random_range(0..n_clusters);
    }
}

/// Block-moment initializer: `μ` = block mean, `τ = ξ = c/2`, `α = 3` and
/// `β = 2·var/c`, so the prior mean of `σ²(τ+ξ)` equals the block variance.
/// Empty row clusters take the moments of the whole column cluster.
pub fn initial_theta(
    ds: &ExpressionDataset,
    row_labels: &[usize],
    col_labels: &[usize],
    n_row_clusters: usize,
    n_col_clusters: usize,
    c_delta: f64,
    floor: f64,
) -> Result<BlockGrid> {
    let moments = |rows: &[usize], cols: &[usize]| -> (f64, f64) {
        let count = (rows.len() * cols.len()) as f64;
        let mut sum = 0.0;
        for &i in rows {
            for &j in cols {
                sum += ds.value(i, j);
            }
        }
        let mean = sum / count;
        let mut ss = 0.0;
        for &i in rows {
            for &j in cols {
                ss += (ds.value(i, j) - mean).powi(2);
            }
        }
        (mean, ss / count)
    };
    let all_rows: Vec<usize> = (0..ds.n_rows()).collect();
    let mut blocks = Vec::with_capacity(n_row_clusters * n_col_clusters);
    for k in 0..n_row_clusters {
        let rows = members(row_labels, k);
        for r in 0..n_col_clusters {
            let cols = members(col_labels, r);
            if cols.is_empty() {
                return Err(Error::InvalidLabels(alloc::format!("column cluster {r} is empty")));
            }
            let (mean, var) = moments(if rows.is_empty() { &all_rows } else { &rows }, &cols);
            let beta = (2.0 * var / c_delta).max(floor);
            blocks.push(BlockParameters::new(mean, c_delta / 2.0, 3.0, beta, c_delta)?);
        }
    }
    BlockGrid::from_blocks(n_row_clusters, n_col_clusters, blocks)
}

/// Length scale of half the median within-cluster pairwise distance; the
/// rational quadratic shape starts at 1.
pub fn initial_phi(ds: &ExpressionDataset, col_labels: &[usize], kind: KernelKind, n_col_clusters: usize) -> Result<Vec<KernelParams>> {
    let coords = ds.coords();
    let mut all = Vec::new();
    let mut out = Vec::with_capacity(n_col_clusters);
    for r in 0..n_col_clusters {
        let cols = members(col_labels, r);
        let mut d = Vec::with_capacity(cols.len() * cols.len().saturating_sub(1) / 2);
        for (a, &i) in cols.iter().enumerate() {
            for &j in &cols[a + 1..] {
                d.push(coords[i].distance(&coords[j]));
            }
        }
        out.push(median(&mut d));
        all.append(&mut d);
    }
    let fallback = median(&mut all).unwrap_or(1.0);
    out.into_iter()
        .map(|m| {
            let scale = m.filter(|v| *v > 0.0).unwrap_or(if fallback > 0.0 { fallback } else { 1.0 }) / 2.0;
            match kind {
                KernelKind::RationalQuadratic => KernelParams::new(kind, vec![scale, 1.0]),
                _ => KernelParams::new(kind, vec![scale]),
            }
        })
        .collect()
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 { 0.5 * (v[mid - 1] + v[mid]) } else { v[mid] })
}
