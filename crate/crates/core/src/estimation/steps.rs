use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use super::proposals::{propose_m1, propose_m2};
use super::FitConfig;
use crate::error::{Error, Result};
use crate::kernels::KernelParams;
use crate::likelihood::ColumnClusterView;
use crate::optim::{minimize, Bounds, LbfgsbConfig};
use crate::types::{members, BlockGrid, BlockParameters, ExpressionDataset, ModelSpec};

/// Upper bound on log-scale parameters, far beyond any sensible value.
const LOG_PARAM_CAP: f64 = 18.420_680_743_952_367; // ln(1e8)

/// One view per column cluster for the labeling `col_labels`.
pub fn build_views(
    ds: &ExpressionDataset,
    col_labels: &[usize],
    phi: &[KernelParams],
) -> Result<Vec<ColumnClusterView>> {
    phi.iter()
        .enumerate()
        .map(|(r, p)| {
            let cols = members(col_labels, r);
            if cols.is_empty() {
                return Err(Error::InvalidLabels(alloc::format!("column cluster {r} is empty")));
            }
            ColumnClusterView::new(ds, cols, p, r)
        })
        .collect()
}

/// Classification log-likelihood from up-to-date views.
pub fn total_loglik(views: &[ColumnClusterView], row_labels: &[usize], theta: &BlockGrid) -> f64 {
    views
        .iter()
        .enumerate()
        .map(|(r, v)| v.cluster_loglik(row_labels, theta, r))
        .sum()
}

fn check_views(views: &[ColumnClusterView], col_labels: &[usize]) -> Result<()> {
    for (r, v) in views.iter().enumerate() {
        if v.cache.members != members(col_labels, r) {
            return Err(Error::StaleCache { col_cluster: r });
        }
    }
    Ok(())
}

/// CE step: every row moves to the row cluster maximizing
/// `Σ_r log f(x_i on D_r; θ_kr, φ_r)`; ties go to the smallest `k`.
pub fn ce_step(
    ds: &ExpressionDataset,
    col_labels: &[usize],
    theta: &BlockGrid,
    views: &[ColumnClusterView],
) -> Result<Vec<usize>> {
    check_views(views, col_labels)?;
    let k_count = theta.n_row_clusters();
    let terms: Vec<Vec<_>> = (0..k_count)
        .map(|k| views.iter().enumerate().map(|(r, v)| v.block_terms(theta.get(k, r))).collect())
        .collect();
    let labels = (0..ds.n_rows())
        .map(|i| {
            let mut best = (0, f64::NEG_INFINITY);
            for (k, tk) in terms.iter().enumerate() {
                let score: f64 = views.iter().zip(tk).map(|(v, t)| v.row_logdensity(i, t)).sum();
                if score > best.1 {
                    best = (k, score);
                }
            }
            best.0
        })
        .collect();
    Ok(labels)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SeStats {
    pub proposed: usize,
    pub accepted: usize,
    pub infeasible: usize,
}

/// SE step: `config.se_repeats_per_iteration` Metropolis-Hastings updates of
/// the column labels with rows and parameters held fixed. Views of the
/// affected clusters are rebuilt on acceptance.
#[allow(clippy::too_many_arguments)]
pub fn se_step<R: Rng + ?Sized>(
    ds: &ExpressionDataset,
    row_labels: &[usize],
    col_labels: &mut Vec<usize>,
    theta: &BlockGrid,
    views: &mut [ColumnClusterView],
    config: &FitConfig,
    rng: &mut R,
) -> Result<SeStats> {
    let r_count = theta.n_col_clusters();
    let mut stats = SeStats::default();
    if r_count < 2 {
        return Ok(stats);
    }
    check_views(views, col_labels)?;
    let row_groups: Vec<Vec<usize>> = (0..theta.n_row_clusters()).map(|k| members(row_labels, k)).collect();
    let cluster_ll = |view: &ColumnClusterView, r: usize| -> f64 {
        row_groups
            .iter()
            .enumerate()
            .map(|(k, rows)| view.block_loglik(rows, theta.get(k, r)))
            .sum()
    };
    let mut current: Vec<f64> = views.iter().enumerate().map(|(r, v)| cluster_ll(v, r)).collect();

    for _ in 0..config.se_repeats_per_iteration {
        stats.proposed += 1;
        let m = rng.random_range(1..=config.m_max);
        let use_m1 = rng.random::<f64>() < config.move_m1_probability;
        let proposal = if use_m1 {
            propose_m1(col_labels, r_count, m, rng)?
        } else {
            propose_m2(col_labels, r_count, m, rng)?
        };
        if !proposal.feasible {
            stats.infeasible += 1;
            continue;
        }
        let mut fresh = Vec::with_capacity(proposal.touched.len());
        let mut log_a = proposal.log_transition_ratio;
        for &r in &proposal.touched {
            let view = ColumnClusterView::new(ds, members(&proposal.candidate, r), views[r].phi(), r)?;
            let ll = cluster_ll(&view, r);
            log_a += ll - current[r];
            fresh.push((r, view, ll));
        }
        let u: f64 = rng.random();
        if u.ln() < log_a {
            stats.accepted += 1;
            *col_labels = proposal.candidate;
            for (r, view, ll) in fresh {
                views[r] = view;
                current[r] = ll;
            }
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone)]
pub struct MStepOutcome {
    pub theta: BlockGrid,
    pub phi: Vec<KernelParams>,
    pub views: Vec<ColumnClusterView>,
    /// Every per-cluster optimization met its stopping rule.
    pub converged: bool,
}

struct ViewCache<'a> {
    ds: &'a ExpressionDataset,
    members: Vec<usize>,
    r: usize,
    entries: Vec<(Vec<u64>, ColumnClusterView)>,
}

impl ViewCache<'_> {
    const CAPACITY: usize = 4;

    fn get(&mut self, phi: &KernelParams) -> Option<&ColumnClusterView> {
        let key: Vec<u64> = phi.values().iter().map(|v| v.to_bits()).collect();
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            if pos != 0 {
                let e = self.entries.remove(pos);
                self.entries.insert(0, e);
            }
            return Some(&self.entries[0].1);
        }
        let view = ColumnClusterView::new(self.ds, self.members.clone(), phi, self.r).ok()?;
        self.entries.insert(0, (key, view));
        self.entries.truncate(Self::CAPACITY);
        Some(&self.entries[0].1)
    }
}

/// M step: per column cluster, jointly maximizes the cluster's
/// log-likelihood over `φ_r` and `(μ, τ, α, β)` of every non-empty row
/// cluster, with `ξ = c_delta - τ`. Keeps the incoming parameters whenever
/// the optimizer does not improve on them. Parameters of empty row clusters
/// are left untouched.
pub fn m_step(
    ds: &ExpressionDataset,
    row_labels: &[usize],
    col_labels: &[usize],
    theta: &BlockGrid,
    views: &[ColumnClusterView],
    spec: &ModelSpec,
    config: &FitConfig,
) -> Result<MStepOutcome> {
    check_views(views, col_labels)?;
    let floor = config.parameter_floor;
    let c = spec.c_delta;
    let row_groups: Vec<Vec<usize>> = (0..theta.n_row_clusters()).map(|k| members(row_labels, k)).collect();
    let active: Vec<usize> = (0..row_groups.len()).filter(|&k| !row_groups[k].is_empty()).collect();
    let opt_config = LbfgsbConfig {
        max_iterations: config.optimizer_max_iterations,
        f_tolerance: config.optimizer_tolerance,
        ..LbfgsbConfig::default()
    };

    let mut new_theta = theta.clone();
    let mut new_phi = Vec::with_capacity(views.len());
    let mut new_views = Vec::with_capacity(views.len());
    let mut converged = true;

    for (r, view) in views.iter().enumerate() {
        let kind = view.phi().kind();
        let dim_phi = kind.dim();
        let mut x0: Vec<f64> = view.phi().values().iter().map(|v| v.ln()).collect();
        let mut lower = vec![floor.ln(); dim_phi];
        let mut upper = vec![LOG_PARAM_CAP; dim_phi];
        for &k in &active {
            let b = theta.get(k, r);
            x0.extend_from_slice(&[b.mu, b.tau, b.alpha.ln(), b.beta.ln()]);
            lower.extend_from_slice(&[f64::NEG_INFINITY, floor, floor.ln(), floor.ln()]);
            upper.extend_from_slice(&[f64::INFINITY, c - floor, LOG_PARAM_CAP, LOG_PARAM_CAP]);
        }
        let bounds = Bounds { lower, upper };

        let decode_block = |x: &[f64], slot: usize| -> Option<BlockParameters> {
            let o = dim_phi + 4 * slot;
            BlockParameters::new(x[o], x[o + 1], x[o + 2].exp(), x[o + 3].exp(), c).ok()
        };
        let decode_phi = |x: &[f64]| KernelParams::new(kind, x[..dim_phi].iter().map(|v| v.exp()).collect()).ok();

        let mut cache = ViewCache {
            ds,
            members: view.cache.members.clone(),
            r,
            entries: vec![(view.phi().values().iter().map(|v| v.to_bits()).collect(), view.clone())],
        };
        let mut objective = |x: &[f64]| -> f64 {
            let Some(phi) = decode_phi(x) else {
                return f64::INFINITY;
            };
            let Some(v) = cache.get(&phi) else {
                return f64::INFINITY;
            };
            let mut ll = 0.0;
            for (slot, &k) in active.iter().enumerate() {
                let Some(b) = decode_block(x, slot) else {
                    return f64::INFINITY;
                };
                ll += v.block_loglik(&row_groups[k], &b);
            }
            -ll
        };

        let f_init = -active
            .iter()
            .map(|&k| view.block_loglik(&row_groups[k], theta.get(k, r)))
            .sum::<f64>();
        if !f_init.is_finite() {
            return Err(Error::OptimizerFailure(alloc::format!(
                "non-finite objective for column cluster {r} at the initial point"
            )));
        }
        let result = minimize(&mut objective, &x0, &bounds, &opt_config)?;
        converged &= result.converged;
        let improved = result.f < f_init;
        if improved {
            let phi = decode_phi(&result.x).ok_or_else(|| Error::OptimizerFailure(alloc::string::String::from("invalid kernel parameters")))?;
            for (slot, &k) in active.iter().enumerate() {
                let b = decode_block(&result.x, slot)
                    .ok_or_else(|| Error::OptimizerFailure(alloc::string::String::from("invalid block parameters")))?;
                new_theta.set(k, r, b);
            }
            let v = cache.get(&phi).cloned().ok_or(Error::NotPositiveDefinite)?;
            new_phi.push(phi);
            new_views.push(v);
        } else {
            new_phi.push(view.phi().clone());
            new_views.push(view.clone());
        }
    }
    Ok(MStepOutcome {
        theta: new_theta,
        phi: new_phi,
        views: new_views,
        converged,
    })
}
