//! Conditional laws of the row-specific variances given data and estimates.
//!
//! Each row segment's variance is inverse gamma a posteriori with shape
//! `α* = p_r/2 + α` and scale `β* = rᵀΔ⁻¹r/2 + β`, where `r = x - μ1`.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelEigen;
use crate::likelihood::{ColumnClusterView, RowDensityWorkspace};
use crate::special::{gamma_p, gamma_q, ln_gamma};
use crate::types::{BlockParameters, ExpressionDataset, FitResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaPosterior {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub gene_id: String,
    /// `(k, r)`.
    pub block: (usize, usize),
}

impl SigmaPosterior {
    pub fn new(alpha_star: f64, beta_star: f64) -> Result<Self> {
        for (name, value) in [("alpha_star", alpha_star), ("beta_star", beta_star)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        Ok(SigmaPosterior {
            alpha_star,
            beta_star,
            gene_id: String::new(),
            block: (0, 0),
        })
    }
}

/// Posterior of the variance of one row segment.
pub fn sigma_posterior(
    x_row: &[f64],
    block: &BlockParameters,
    eigen: &KernelEigen,
    gene_id: &str,
    block_index: (usize, usize),
) -> Result<SigmaPosterior> {
    if x_row.len() != eigen.order() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "row of length {} for a kernel of order {}",
            x_row.len(),
            eigen.order()
        )));
    }
    let ws = RowDensityWorkspace::compute(x_row, block, eigen)?;
    Ok(SigmaPosterior {
        alpha_star: ws.alpha_star,
        beta_star: ws.beta_star,
        gene_id: String::from(gene_id),
        block: block_index,
    })
}

pub fn ig_mean(post: &SigmaPosterior) -> Result<f64> {
    if post.alpha_star <= 1.0 {
        return Err(Error::UndefinedMean {
            alpha_star: post.alpha_star,
        });
    }
    Ok(post.beta_star / (post.alpha_star - 1.0))
}

/// `P(σ² ≤ q)` for `σ² ~ IG(α*, β*)`, i.e. `Q(α*, β*/q)`.
pub fn ig_cdf(post: &SigmaPosterior, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    gamma_q(post.alpha_star, post.beta_star / q)
}

pub fn ig_log_density(post: &SigmaPosterior, s: f64) -> f64 {
    let (a, b) = (post.alpha_star, post.beta_star);
    a * b.ln() - ln_gamma(a) - (a + 1.0) * s.ln() - b / s
}

/// Quantile of `IG(α*, β*)` at probability `target ∈ (0, 1)`.
///
/// Bisection on `ln y` for `Q(α*, y) = target`, then `q = β*/y`.
pub fn ig_quantile(post: &SigmaPosterior, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidLevel(target));
    }
    let a = post.alpha_star;
    // g is decreasing in y; work with the smaller tail for accuracy.
    let upper = target > 0.5;
    let g = |y: f64| if upper { gamma_p(a, y) - (1.0 - target) } else { gamma_q(a, y) - target };
    let sign = if upper { -1.0 } else { 1.0 };
    let (mut lo, mut hi) = (a.max(1e-300).ln(), a.max(1e-300).ln());
    while sign * g(lo.exp()) < 0.0 {
        lo -= 2.0;
        if lo < -745.0 {
            break;
        }
    }
    while sign * g(hi.exp()) > 0.0 {
        hi += 2.0;
        if hi > 709.0 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sign * g(mid.exp()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * mid.abs().max(1.0) {
            break;
        }
    }
    let y = (0.5 * (lo + hi)).exp();
    Ok(post.beta_star / y)
}

/// Equal-tailed credible interval at `level`.
pub fn ig_credible_interval(post: &SigmaPosterior, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let lo = ig_quantile(post, (1.0 - level) / 2.0)?;
    let hi = ig_quantile(post, (1.0 + level) / 2.0)?;
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSummary {
    pub gene_id: String,
    pub k: usize,
    pub r: usize,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Rows of row cluster `k` ranked by descending posterior mean variance on
/// block `(k, r)`; ties go to the smaller id. Intervals are at 95%.
pub fn top_variable_genes(fit: &FitResult, ds: &ExpressionDataset, k: usize, r: usize, count: usize) -> Result<Vec<GeneSummary>> {
    let labels = &fit.labels;
    if k >= labels.n_row_clusters() || r >= labels.n_col_clusters() {
        return Err(Error::EmptyBlock { k, r });
    }
    let rows = labels.row_members(k);
    let cols = labels.col_members(r);
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptyBlock { k, r });
    }
    let view = ColumnClusterView::new(ds, cols, &fit.phi[r], r)?;
    let block = fit.theta.get(k, r);
    let terms = view.block_terms(block);
    let alpha_star = view.size() as f64 / 2.0 + block.alpha;
    let mut out = Vec::with_capacity(rows.len());
    for i in rows {
        let post = SigmaPosterior {
            alpha_star,
            beta_star: view.quad_form(i, &terms) / 2.0 + block.beta,
            gene_id: ds.row_ids()[i].clone(),
            block: (k, r),
        };
        let (lo, hi) = ig_credible_interval(&post, 0.95)?;
        out.push(GeneSummary {
            mean: ig_mean(&post)?,
            gene_id: post.gene_id,
            k,
            r,
            lo,
            hi,
        });
    }
    out.sort_by(|a, b| b.mean.total_cmp(&a.mean).then_with(|| a.gene_id.cmp(&b.gene_id)));
    out.truncate(count);
    Ok(out)
}
