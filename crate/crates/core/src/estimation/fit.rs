use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::init::{initial_labels, initial_phi, initial_theta, perturb_labels, repair_empty};
use super::steps::{build_views, ce_step, m_step, se_step, total_loglik};
use super::FitConfig;
use crate::error::{Error, Result};
use crate::kernels::KernelParams;
use crate::selection::icl;
use crate::types::{BlockGrid, CoClusterLabels, ExpressionDataset, FitResult, ModelSpec, StartSummary};

/// Labels and parameters of one chain at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    pub theta: BlockGrid,
    pub phi: Vec<KernelParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    pub summary: StartSummary,
    /// State at the chain's best iteration.
    pub best: ChainState,
}

fn violates(before: f64, after: f64) -> bool {
    after < before - 1e-9 * before.abs().max(1.0)
}

/// Runs one chain. The random stream is seeded with `config.seed + start`;
/// start 0 begins at the k-means labels, later starts perturb them.
pub fn fit_start(ds: &ExpressionDataset, spec: &ModelSpec, config: &FitConfig, start: usize) -> Result<StartOutcome> {
    spec.validate()?;
    config.validate()?;
    let (k_count, r_count) = (spec.row_clusters, spec.col_clusters);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(start as u64));
    let (mut rows, mut cols) = initial_labels(ds, k_count, r_count, &mut rng)?;
    if start > 0 {
        perturb_labels(&mut rows, k_count, config.perturbation_fraction, &mut rng);
        perturb_labels(&mut cols, r_count, config.perturbation_fraction, &mut rng);
        repair_empty(&mut cols, r_count);
    }
    let phi = if spec.phi.is_empty() {
        initial_phi(ds, &cols, spec.kernel, r_count)?
    } else {
        spec.phi.clone()
    };
    let mut theta = initial_theta(ds, &rows, &cols, k_count, r_count, spec.c_delta, config.parameter_floor)?;
    let mut views = build_views(ds, &cols, &phi)?;

    let mut trace = Vec::with_capacity(config.max_iterations);
    let mut best: Option<(f64, usize, ChainState)> = None;
    let mut violations = 0;
    let (mut accepted, mut proposed) = (0, 0);
    let mut last_m_labels: Option<(Vec<usize>, Vec<usize>)> = None;

    for iteration in 1..=config.max_iterations {
        let before_ce = total_loglik(&views, &rows, &theta);
        rows = ce_step(ds, &cols, &theta, &views)?;
        let after_ce = total_loglik(&views, &rows, &theta);
        if violates(before_ce, after_ce) {
            violations += 1;
        }

        let stats = se_step(ds, &rows, &mut cols, &theta, &mut views, config, &mut rng)?;
        accepted += stats.accepted;
        proposed += stats.proposed;

        let unchanged = last_m_labels.as_ref().is_some_and(|(r, c)| *r == rows && *c == cols);
        let ll = if unchanged {
            total_loglik(&views, &rows, &theta)
        } else {
            let before_m = total_loglik(&views, &rows, &theta);
            let out = m_step(ds, &rows, &cols, &theta, &views, spec, config)?;
            theta = out.theta;
            views = out.views;
            let after_m = total_loglik(&views, &rows, &theta);
            if violates(before_m, after_m) {
                violations += 1;
            }
            last_m_labels = Some((rows.clone(), cols.clone()));
            after_m
        };
        trace.push(ll);
        if best.as_ref().is_none_or(|(b, _, _)| ll > *b) {
            let state = ChainState {
                row_labels: rows.clone(),
                col_labels: cols.clone(),
                theta: theta.clone(),
                phi: views.iter().map(|v| v.phi().clone()).collect(),
            };
            best = Some((ll, iteration, state));
        }
    }
    let (best_loglik, best_iteration, state) = best.ok_or(Error::TooShort)?;
    if !best_loglik.is_finite() {
        return Err(Error::OptimizerFailure(alloc::string::String::from("non-finite log-likelihood")));
    }
    Ok(StartOutcome {
        summary: StartSummary {
            start,
            best_loglik,
            best_iteration,
            loglik_trace: trace,
            se_accepted: accepted,
            se_proposed: proposed,
            monotonicity_violations: violations,
        },
        best: state,
    })
}

/// Picks the start with the largest best log-likelihood (ties go to the
/// lowest start index) and packages it with ICL and every start's summary.
pub fn assemble_fit(ds: &ExpressionDataset, spec: &ModelSpec, config: &FitConfig, outcomes: Vec<StartOutcome>) -> Result<FitResult> {
    let mut winner: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if winner.is_none_or(|w| o.summary.best_loglik > outcomes[w].summary.best_loglik) {
            winner = Some(i);
        }
    }
    let w = winner.ok_or(Error::EmptyGrid)?;
    let best = outcomes[w].best.clone();
    let summary = outcomes[w].summary.clone();
    let labels = CoClusterLabels::new(best.row_labels, best.col_labels, spec.row_clusters, spec.col_clusters)?;
    Ok(FitResult {
        labels,
        theta: best.theta,
        phi: best.phi,
        kernel: spec.kernel,
        c_delta: spec.c_delta,
        loglik_trace: summary.loglik_trace,
        best_iteration: summary.best_iteration,
        best_start: summary.start,
        best_loglik: summary.best_loglik,
        icl: icl(
            summary.best_loglik,
            ds.n_rows(),
            ds.n_cols(),
            spec.row_clusters,
            spec.col_clusters,
            spec.kernel.dim(),
        ),
        seed: config.seed,
        n_starts: config.n_starts,
        starts: outcomes.into_iter().map(|o| o.summary).collect(),
    })
}

/// Runs `config.n_starts` chains one after another and keeps the best state.
pub fn fit(ds: &ExpressionDataset, spec: &ModelSpec, config: &FitConfig) -> Result<FitResult> {
    let outcomes = (0..config.n_starts)
        .map(|s| fit_start(ds, spec, config, s))
        .collect::<Result<Vec<_>>>()?;
    assemble_fit(ds, spec, config, outcomes)
}
