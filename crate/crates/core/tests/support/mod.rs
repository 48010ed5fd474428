//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use blockspace_core::estimation::{build_views, se_step, total_loglik, FitConfig};
use blockspace_core::{BlockGrid, BlockParameters, ExpressionDataset, KernelParams, Point};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_coords<R: Rng>(p: usize, spread: f64, rng: &mut R) -> Vec<Point> {
    (0..p)
        .map(|_| Point::new(rng.random::<f64>() * spread, rng.random::<f64>() * spread))
        .collect()
}

pub fn normal_vec<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// `(log|Δ|, vᵀΔ⁻¹v)` through a dense Cholesky factorization.
pub fn dense_logdet_quad(delta: &DMatrix<f64>, v: &[f64]) -> (f64, f64) {
    let chol = delta.clone().cholesky().expect("positive definite");
    let l = chol.l();
    let logdet = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let y = l.solve_lower_triangular(&nalgebra::DVector::from_column_slice(v)).expect("solve");
    (logdet, y.norm_squared())
}

/// `log ∫ N(x; μ1, σ²Δ) IG(σ²; α, β) dσ²` by double-exponential quadrature
/// in `s = ln σ²`, with the Gaussian evaluated through a dense factorization.
pub fn quadrature_log_marginal(x: &[f64], block: &BlockParameters, k: &DMatrix<f64>) -> f64 {
    let p = x.len();
    let delta = k * block.tau + DMatrix::identity(p, p) * block.xi;
    let resid: Vec<f64> = x.iter().map(|v| v - block.mu).collect();
    let (logdet, quad) = dense_logdet_quad(&delta, &resid);
    let (a, b) = (block.alpha, block.beta);
    let log_integrand = |s: f64| {
        let pf = p as f64;
        let log_normal = -0.5 * pf * (2.0 * PI).ln() - 0.5 * logdet - 0.5 * pf * s - quad / (2.0 * s.exp());
        let log_ig = a * b.ln() - libm::lgamma(a) - (a + 1.0) * s - b / s.exp();
        log_normal + log_ig + s
    };
    // Center on the integrand's peak to keep the quadrature in range.
    let peak_s = ((quad / 2.0 + b) / (pf_half(p) + a)).ln();
    let peak = log_integrand(peak_s);
    peak + composite_integral(|s| (log_integrand(s) - peak).exp(), peak_s - 40.0, peak_s + 40.0, 160).ln()
}

/// Double-exponential quadrature on `panels` equal subintervals; a single
/// panel loses accuracy on peaked integrands over wide ranges.
pub fn composite_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            quadrature::double_exponential::integrate(&f, lo, lo + h, 1e-13).integral
        })
        .sum()
}

fn pf_half(p: usize) -> f64 {
    p as f64 / 2.0
}

fn members(labels: &[usize], c: usize) -> Vec<usize> {
    (0..labels.len()).filter(|&j| labels[j] == c).collect()
}

/// All ordered selections of `k` distinct elements of `pool`.
pub fn ordered_tuples(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &first) in pool.iter().enumerate() {
        let rest: Vec<usize> = pool.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
        for mut tail in ordered_tuples(&rest, k - 1) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Every labeling of `p` items into `r` clusters with no empty cluster.
pub fn all_labelings(p: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = r.pow(p as u32);
    for code in 0..total {
        let mut c = code;
        let labels: Vec<usize> = (0..p)
            .map(|_| {
                let l = c % r;
                c /= r;
                l
            })
            .collect();
        if (0..r).all(|k| labels.contains(&k)) {
            out.push(labels);
        }
    }
    out
}

/// Probability that one M1 draw with fixed `m` turns `from` into `to`,
/// summed over every source, target and ordered choice of movers.
pub fn m1_transition_probability(from: &[usize], to: &[usize], r: usize, m: usize) -> f64 {
    let mut total = 0.0;
    for g1 in 0..r {
        for g2 in 0..r {
            if g1 == g2 {
                continue;
            }
            let pool = members(from, g1);
            if pool.len() <= m {
                continue;
            }
            let tuples = ordered_tuples(&pool, m);
            let hits = tuples
                .iter()
                .filter(|t| {
                    let mut w = from.to_vec();
                    for &j in t.iter() {
                        w[j] = g2;
                    }
                    w == to
                })
                .count();
            total += hits as f64 / tuples.len() as f64 / (r * (r - 1)) as f64;
        }
    }
    total
}

/// Probability that the M2 mechanism, having drawn `pairs`, turns `from`
/// into `to`: each source's movers are an ordered sample matched to the
/// targets of that source's pairs in draw order.
pub fn m2_path_probability(from: &[usize], to: &[usize], r: usize, pairs: &[(usize, usize)]) -> f64 {
    let mut per_source: Vec<(Vec<Vec<usize>>, Vec<usize>)> = Vec::new();
    for src in 0..r {
        let targets: Vec<usize> = pairs.iter().filter(|p| p.0 == src).map(|p| p.1).collect();
        if targets.is_empty() {
            continue;
        }
        let pool = members(from, src);
        if pool.len() < targets.len() {
            return 0.0;
        }
        per_source.push((ordered_tuples(&pool, targets.len()), targets));
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    let mut idx = vec![0usize; per_source.len()];
    loop {
        let mut w = from.to_vec();
        for (s, (tuples, targets)) in per_source.iter().enumerate() {
            for (&j, &t) in tuples[idx[s]].iter().zip(targets) {
                w[j] = t;
            }
        }
        total += 1;
        if w == to {
            hits += 1;
        }
        let mut s = 0;
        loop {
            if s == per_source.len() {
                let pair_prob = (1.0 / (r * (r - 1)) as f64).powi(pairs.len() as i32);
                return pair_prob * hits as f64 / total as f64;
            }
            idx[s] += 1;
            if idx[s] < per_source[s].0.len() {
                break;
            }
            idx[s] = 0;
            s += 1;
        }
    }
}

/// Every sequence of `m` ordered pairs of distinct clusters.
pub fn pair_sequences(r: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|a| (0..r).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|seq| {
                pairs.iter().map(move |&p| {
                    let mut s = seq.clone();
                    s.push(p);
                    s
                })
            })
            .collect();
    }
    out
}

/// Small fixed instance for sampler checks: 4 rows in 2 row clusters,
/// 6 columns on a line, 2 column clusters.
pub struct TinyInstance {
    pub ds: ExpressionDataset,
    pub rows: Vec<usize>,
    pub theta: BlockGrid,
    pub phi: Vec<KernelParams>,
}

pub fn tiny_instance(seed: u64) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, p) = (4, 6);
    let values = DMatrix::from_fn(n, p, |i, j| {
        let shift = if (i < 2) == (j < 3) { 0.6 } else { -0.6 };
        shift + Distribution::<f64>::sample(&StandardNormal, &mut rng)
    });
    let coords: Vec<Point> = (0..p).map(|j| Point::new(10.0 * j as f64, 0.0)).collect();
    let ds = ExpressionDataset::from_matrix(values, coords).unwrap();
    let c = 10.0;
    let theta = BlockGrid::from_blocks(
        2,
        2,
        vec![
            BlockParameters::new(0.5, 4.0, 3.0, 0.2, c).unwrap(),
            BlockParameters::new(-0.5, 7.0, 4.0, 0.3, c).unwrap(),
            BlockParameters::new(-0.4, 2.0, 2.5, 0.25, c).unwrap(),
            BlockParameters::new(0.4, 5.0, 3.5, 0.2, c).unwrap(),
        ],
    )
    .unwrap();
    let phi = vec![KernelParams::exponential(15.0).unwrap(), KernelParams::exponential(25.0).unwrap()];
    TinyInstance {
        ds,
        rows: vec![0, 0, 1, 1],
        theta,
        phi,
    }
}

/// Enumerated `p(W | Z, X; Θ)` over all 2⁶ column labelings (zero for
/// labelings with an empty cluster), indexed by `Σ_j W_j 2^j`.
pub fn exact_column_posterior(t: &TinyInstance) -> Vec<f64> {
    let p = t.ds.n_cols();
    let mut logp = vec![f64::NEG_INFINITY; 1 << p];
    for w in all_labelings(p, 2) {
        let views = build_views(&t.ds, &w, &t.phi).unwrap();
        logp[code(&w)] = total_loglik(&views, &t.rows, &t.theta);
    }
    let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logp.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

pub fn code(w: &[usize]) -> usize {
    w.iter().enumerate().map(|(j, &l)| l << j).sum()
}

/// Total variation between the SE chain's visit frequencies after
/// `proposals` single-proposal updates and the enumerated posterior.
pub fn se_chain_total_variation(t: &TinyInstance, proposals: usize, seed: u64) -> f64 {
    let exact = exact_column_posterior(t);
    let config = FitConfig {
        se_repeats_per_iteration: 1,
        m_max: 2,
        ..FitConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![0, 0, 0, 1, 1, 1];
    let mut views = build_views(&t.ds, &cols, &t.phi).unwrap();
    let mut counts = vec![0usize; exact.len()];
    for _ in 0..proposals {
        se_step(&t.ds, &t.rows, &mut cols, &t.theta, &mut views, &config, &mut rng).unwrap();
        counts[code(&cols)] += 1;
    }
    0.5 * counts
        .iter()
        .zip(&exact)
        .map(|(&c, &e)| (c as f64 / proposals as f64 - e).abs())
        .sum::<f64>()
}

/// Closed-form marginal with a dense factorization of `Δ`.
pub fn dense_log_marginal(x: &[f64], block: &BlockParameters, k: &DMatrix<f64>) -> f64 {
    let p = x.len();
    let delta = k * block.tau + DMatrix::identity(p, p) * block.xi;
    let resid: Vec<f64> = x.iter().map(|v| v - block.mu).collect();
    let (logdet, quad) = dense_logdet_quad(&delta, &resid);
    let a_star = p as f64 / 2.0 + block.alpha;
    let b_star = quad / 2.0 + block.beta;
    -(p as f64 / 2.0) * (2.0 * PI).ln() - 0.5 * logdet + libm::lgamma(a_star) - libm::lgamma(block.alpha)
        + block.alpha * block.beta.ln()
        - a_star * b_star.ln()
}
