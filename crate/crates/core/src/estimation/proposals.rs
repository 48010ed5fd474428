//! Metropolis-Hastings proposals over column labelings.
//!
//! Both moves relabel a handful of columns; the proposal reports the log of
//! `q(W | W*) / q(W* | W)` so the sampler can correct for the asymmetry.
//! A proposal that would empty a column cluster is flagged infeasible and
//! counted as a rejection by the sampler.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_factorial;
use crate::types::{cluster_sizes, members};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    /// `m` columns from one source cluster to one target cluster.
    M1,
    /// `m` independent (source, target) pairs, one column each.
    M2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalOutcome {
    pub candidate: Vec<usize>,
    /// `log q(W | W*) - log q(W* | W)`; zero when infeasible.
    pub log_transition_ratio: f64,
    pub move_kind: MoveKind,
    pub feasible: bool,
    /// Clusters whose membership changes.
    pub touched: Vec<usize>,
}

impl ProposalOutcome {
    fn infeasible(col_labels: &[usize], move_kind: MoveKind) -> Self {
        ProposalOutcome {
            candidate: col_labels.to_vec(),
            log_transition_ratio: 0.0,
            move_kind,
            feasible: false,
            touched: Vec::new(),
        }
    }
}

/// `log[p_src! p_dst! / ((p_src - m)! (p_dst + m)!)]`.
pub fn m1_log_ratio(p_src: usize, p_dst: usize, m: usize) -> f64 {
    ln_factorial(p_src) + ln_factorial(p_dst) - ln_factorial(p_src - m) - ln_factorial(p_dst + m)
}

/// Log transition ratio of an M2 move with per-cluster outflow `b_out` and
/// inflow `b_in` from clusters of sizes `sizes`.
///
/// Reverse path: pick the `b_in[r]` arrivals among the `p_r - b_out[r] + b_in[r]`
/// members of each receiving cluster. Forward path: pick the `b_out[r]`
/// leavers among the `p_r` members of each source cluster. Picks are
/// ordered, since each leaver is matched to the target of its pair:
///
/// ```text
/// Σ_{r: b_in>0}  log[(p_r - b_out)! / (p_r - b_out + b_in)!]
///   - Σ_{r: b_out>0} log[(p_r - b_out)! / p_r!]
/// ```
pub fn m2_log_ratio(sizes: &[usize], b_out: &[usize], b_in: &[usize]) -> f64 {
    let mut ratio = 0.0;
    for r in 0..sizes.len() {
        let rest = sizes[r] - b_out[r];
        if b_in[r] > 0 {
            ratio += ln_factorial(rest) - ln_factorial(rest + b_in[r]);
        }
        if b_out[r] > 0 {
            ratio -= ln_factorial(rest) - ln_factorial(sizes[r]);
        }
    }
    ratio
}

fn draw_pair<R: Rng + ?Sized>(n_clusters: usize, rng: &mut R) -> (usize, usize) {
    let g1 = rng.random_range(0..n_clusters);
    let mut g2 = rng.random_range(0..n_clusters - 1);
    if g2 >= g1 {
        g2 += 1;
    }
    (g1, g2)
}

/// Uniform ordered sample of `k` distinct elements (partial Fisher-Yates).
fn sample_ordered<R: Rng + ?Sized>(mut pool: Vec<usize>, k: usize, rng: &mut R) -> Vec<usize> {
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Move M1: draw `g1`, then `g2 ≠ g1`, and relabel `m` random members of `g1`
/// to `g2`. Infeasible when `g1` has `m` or fewer members.
pub fn propose_m1<R: Rng + ?Sized>(
    col_labels: &[usize],
    n_clusters: usize,
    m: usize,
    rng: &mut R,
) -> Result<ProposalOutcome> {
    if n_clusters < 2 {
        return Err(Error::SingleColumnCluster);
    }
    let (g1, g2) = draw_pair(n_clusters, rng);
    let sizes = cluster_sizes(col_labels, n_clusters);
    if sizes[g1] <= m {
        return Ok(ProposalOutcome::infeasible(col_labels, MoveKind::M1));
    }
    let moved = sample_ordered(members(col_labels, g1), m, rng);
    let mut candidate = col_labels.to_vec();
    for j in moved {
        candidate[j] = g2;
    }
    Ok(ProposalOutcome {
        candidate,
        log_transition_ratio: m1_log_ratio(sizes[g1], sizes[g2], m),
        move_kind: MoveKind::M1,
        feasible: true,
        touched: vec![g1.min(g2), g1.max(g2)],
    })
}

/// Move M2: draw `m` independent pairs `(g1_h, g2_h)`; from each source
/// cluster `r` pick `b_out[r]` random members and send each to the target of
/// its pair. Infeasible when a source lacks members or a cluster would empty.
pub fn propose_m2<R: Rng + ?Sized>(
    col_labels: &[usize],
    n_clusters: usize,
    m: usize,
    rng: &mut R,
) -> Result<ProposalOutcome> {
    if n_clusters < 2 {
        return Err(Error::SingleColumnCluster);
    }
    let pairs: Vec<(usize, usize)> = (0..m).map(|_| draw_pair(n_clusters, rng)).collect();
    let sizes = cluster_sizes(col_labels, n_clusters);
    let mut b_out = vec![0usize; n_clusters];
    let mut b_in = vec![0usize; n_clusters];
    for &(g1, g2) in &pairs {
        b_out[g1] += 1;
        b_in[g2] += 1;
    }
    for r in 0..n_clusters {
        if b_out[r] > sizes[r] || sizes[r] - b_out[r] + b_in[r] == 0 {
            return Ok(ProposalOutcome::infeasible(col_labels, MoveKind::M2));
        }
    }
    let mut candidate = col_labels.to_vec();
    for r in 0..n_clusters {
        if b_out[r] == 0 {
            continue;
        }
        let targets = pairs.iter().filter(|(g1, _)| *g1 == r).map(|&(_, g2)| g2);
        let leavers = sample_ordered(members(col_labels, r), b_out[r], rng);
        for (j, t) in leavers.into_iter().zip(targets) {
            candidate[j] = t;
        }
    }
    let touched = (0..n_clusters).filter(|&r| b_out[r] > 0 || b_in[r] > 0).collect();
    Ok(ProposalOutcome {
        candidate,
        log_transition_ratio: m2_log_ratio(&sizes, &b_out, &b_in),
        move_kind: MoveKind::M2,
        feasible: true,
        touched,
    })
}
