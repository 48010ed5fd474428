//! Marginal row density with the row-specific variance integrated out, and
//! the classification log-likelihood built from it.
//!
//! A row segment `x` of length `p_r` in block `(k, r)` has density
//!
//! ```text
//! log f(x) = -(p_r/2) log 2π - ½ log|Δ| + log Γ(α*) - log Γ(α) + α log β - α* log β*
//! α* = p_r/2 + α,   β* = (x - μ1)ᵀ Δ⁻¹ (x - μ1) / 2 + β,   Δ = τK + ξI
//! ```
//!
//! Everything is evaluated through the eigendecomposition of `K`, so one
//! factorization per column cluster serves every block and every `(τ, ξ)`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{KernelEigen, KernelEigenCache, KernelParams};
use crate::special::ln_gamma;
use crate::types::{members, BlockGrid, BlockParameters, CoClusterLabels, ExpressionDataset};

/// Result of applying `Δ⁻¹` to a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSolve {
    pub logdet: f64,
    pub solved: DVector<f64>,
    pub quad: f64,
}

/// `log|τK + ξI|`, `(τK + ξI)⁻¹ v` and `vᵀ(τK + ξI)⁻¹ v`.
pub fn delta_logdet_and_solve(eigen: &KernelEigen, tau: f64, xi: f64, v: &[f64]) -> Result<DeltaSolve> {
    let p = eigen.order();
    if v.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against kernel of order {p}",
            v.len()
        )));
    }
    check_positive("tau", tau)?;
    check_positive("xi", xi)?;
    let u = &eigen.eigenvectors;
    let v = DVector::from_column_slice(v);
    let mut coef = u.tr_mul(&v);
    let mut logdet = 0.0;
    let mut quad = 0.0;
    for (j, c) in coef.iter_mut().enumerate() {
        let d = tau * eigen.eigenvalues[j] + xi;
        logdet += d.ln();
        quad += *c * *c / d;
        *c /= d;
    }
    Ok(DeltaSolve {
        logdet,
        solved: u * coef,
        quad,
    })
}

/// Intermediate quantities of the marginal row density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowDensityWorkspace {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub logdet_delta: f64,
    pub quad_form: f64,
}

impl RowDensityWorkspace {
    pub fn compute(x_row: &[f64], block: &BlockParameters, eigen: &KernelEigen) -> Result<Self> {
        check_positive("alpha", block.alpha)?;
        check_positive("beta", block.beta)?;
        let resid: Vec<f64> = x_row.iter().map(|x| x - block.mu).collect();
        let solve = delta_logdet_and_solve(eigen, block.tau, block.xi, &resid)?;
        Ok(RowDensityWorkspace {
            alpha_star: x_row.len() as f64 / 2.0 + block.alpha,
            beta_star: solve.quad / 2.0 + block.beta,
            logdet_delta: solve.logdet,
            quad_form: solve.quad,
        })
    }

    pub fn log_density(&self, p_r: usize, alpha: f64, beta: f64) -> f64 {
        log_marginal_from_parts(p_r, self.logdet_delta, self.quad_form, alpha, beta)
    }
}

/// Log marginal density given the log-determinant and quadratic form.
pub fn log_marginal_from_parts(p_r: usize, logdet: f64, quad: f64, alpha: f64, beta: f64) -> f64 {
    let half_p = p_r as f64 / 2.0;
    let alpha_star = half_p + alpha;
    let beta_star = quad / 2.0 + beta;
    -half_p * (2.0 * PI).ln() - 0.5 * logdet + ln_gamma(alpha_star) - ln_gamma(alpha)
        + alpha * beta.ln()
        - alpha_star * beta_star.ln()
}

/// Log marginal density of one row segment.
pub fn row_marginal_logdensity(x_row: &[f64], block: &BlockParameters, eigen: &KernelEigen) -> Result<f64> {
    let ws = RowDensityWorkspace::compute(x_row, block, eigen)?;
    Ok(ws.log_density(x_row.len(), block.alpha, block.beta))
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::NonPositiveParameter { name, value });
    }
    Ok(())
}

/// Per-block constants shared by every row of the block.
#[derive(Debug, Clone)]
pub struct BlockTerms {
    weights: Vec<f64>,
    constant: f64,
    alpha_star: f64,
    beta: f64,
    mu: f64,
}

/// A column cluster's kernel factorization together with every data row
/// projected onto the eigenbasis, so that a row's density costs `O(p_r)`.
#[derive(Debug, Clone)]
pub struct ColumnClusterView {
    pub cache: KernelEigenCache,
    /// Column `i` holds `Uᵀ x_i` for data row `i` restricted to the cluster.
    projected: DMatrix<f64>,
    projected_ones: DVector<f64>,
}

impl ColumnClusterView {
    pub fn new(ds: &ExpressionDataset, members: Vec<usize>, phi: &KernelParams, col_cluster: usize) -> Result<Self> {
        let cache = KernelEigenCache::build(ds.coords(), members, phi, col_cluster)?;
        Ok(Self::from_cache(ds, cache))
    }

    pub fn from_cache(ds: &ExpressionDataset, cache: KernelEigenCache) -> Self {
        let p_r = cache.members.len();
        let n = ds.n_rows();
        let values = ds.values();
        let mut sub = DMatrix::zeros(p_r, n);
        for (a, &j) in cache.members.iter().enumerate() {
            for i in 0..n {
                sub[(a, i)] = values[(i, j)];
            }
        }
        let u = &cache.eigen.eigenvectors;
        let projected = u.tr_mul(&sub);
        let projected_ones = u.tr_mul(&DVector::from_element(p_r, 1.0));
        ColumnClusterView {
            cache,
            projected,
            projected_ones,
        }
    }

    pub fn size(&self) -> usize {
        self.cache.members.len()
    }

    pub fn phi(&self) -> &KernelParams {
        &self.cache.phi_used
    }

    pub fn block_terms(&self, block: &BlockParameters) -> BlockTerms {
        let eig = &self.cache.eigen.eigenvalues;
        let mut logdet = 0.0;
        let weights = eig
            .iter()
            .map(|&l| {
                let d = block.tau * l + block.xi;
                logdet += d.ln();
                1.0 / d
            })
            .collect();
        let half_p = self.size() as f64 / 2.0;
        let alpha_star = half_p + block.alpha;
        let constant = -half_p * (2.0 * PI).ln() - 0.5 * logdet + ln_gamma(alpha_star) - ln_gamma(block.alpha)
            + block.alpha * block.beta.ln();
        BlockTerms {
            weights,
            constant,
            alpha_star,
            beta: block.beta,
            mu: block.mu,
        }
    }

    /// `(x_i - μ1)ᵀ Δ⁻¹ (x_i - μ1)` for data row `row`.
    #[inline]
    pub fn quad_form(&self, row: usize, terms: &BlockTerms) -> f64 {
        let y = self.projected.column(row);
        let mut q = 0.0;
        for ((&yj, &uj), &w) in y.iter().zip(self.projected_ones.iter()).zip(terms.weights.iter()) {
            let e = yj - terms.mu * uj;
            q += w * e * e;
        }
        q
    }

    #[inline]
    pub fn row_logdensity(&self, row: usize, terms: &BlockTerms) -> f64 {
        let beta_star = self.quad_form(row, terms) / 2.0 + terms.beta;
        terms.constant - terms.alpha_star * beta_star.ln()
    }

    /// Sum of row log densities over `rows` under one block's parameters.
    pub fn block_loglik(&self, rows: &[usize], block: &BlockParameters) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let terms = self.block_terms(block);
        rows.iter().map(|&i| self.row_logdensity(i, &terms)).sum()
    }

    /// Contribution of this column cluster to the classification
    /// log-likelihood: `Σ_k Σ_{i ∈ C_k} log f(x_i; θ_kr, φ_r)`.
    pub fn cluster_loglik(&self, row_labels: &[usize], theta: &BlockGrid, r: usize) -> f64 {
        (0..theta.n_row_clusters())
            .map(|k| self.block_loglik(&members(row_labels, k), theta.get(k, r)))
            .sum()
    }
}

/// Classification log-likelihood `Σ_i Σ_r log f(x_i restricted to D_r; θ_{z_i r}, φ_r)`.
///
/// `caches[r]` must have been built for exactly the columns of cluster `r`
/// and for `phi[r]`; otherwise `StaleCache` is returned.
pub fn classification_loglik(
    ds: &ExpressionDataset,
    labels: &CoClusterLabels,
    theta: &BlockGrid,
    phi: &[KernelParams],
    caches: &[KernelEigenCache],
) -> Result<f64> {
    let r_count = labels.n_col_clusters();
    if caches.len() != r_count || phi.len() != r_count {
        return Err(Error::DimensionMismatch(format!(
            "{} caches and {} kernel parameter sets for {r_count} column clusters",
            caches.len(),
            phi.len()
        )));
    }
    if theta.n_row_clusters() != labels.n_row_clusters() || theta.n_col_clusters() != r_count {
        return Err(Error::DimensionMismatch(format!(
            "parameter grid {}x{} against labels {}x{}",
            theta.n_row_clusters(),
            theta.n_col_clusters(),
            labels.n_row_clusters(),
            r_count
        )));
    }
    let mut total = 0.0;
    for (r, cache) in caches.iter().enumerate() {
        let cols = labels.col_members(r);
        cache.check(&cols, &phi[r])?;
        let view = ColumnClusterView::from_cache(ds, cache.clone());
        total += view.cluster_loglik(labels.rows(), theta, r);
    }
    Ok(total)
}
