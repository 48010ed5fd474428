//! Synthetic spatial experiments.
//!
//! Each block is drawn from a matrix normal law with a Wishart row
//! covariance and a column covariance `τK + ξI` built from a per-cluster
//! kernel. Scenarios:
//!
//! * `S1`: row clusters with distinct spatial signal-to-noise layouts.
//! * `S2`: the layout is constant down each column cluster.
//! * `S3`: the layout is constant along each row cluster.
//! * `S4`: an `S1` experiment mixed with a nuisance signal correlated across
//!   every row and column.
//! * `S5`: row clusters drawn independently within each column cluster; the
//!   truth is the refinement of the three row partitions.
//! * `Custom`: the `S1` construction with explicit settings.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, KernelKind, KernelParams};
use crate::types::{ExpressionDataset, Point};

/// Draws from `W(df, scale)` by the Bartlett decomposition.
pub fn sample_wishart<R: Rng + ?Sized>(df: usize, scale: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = scale.nrows();
    if !scale.is_square() || d == 0 {
        return Err(Error::DimensionMismatch(String::from("Wishart scale must be square and non-empty")));
    }
    if df < d {
        return Err(Error::DegreesOfFreedomTooSmall { df, dim: d });
    }
    let l = scale.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new((df - i) as f64).map_err(|_| Error::DegreesOfFreedomTooSmall { df, dim: d })?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let la = l * a;
    let w = &la * la.transpose();
    // symmetrize against round-off
    Ok((&w + w.transpose()) * 0.5)
}

/// `M + A E Bᵀ` with `A Aᵀ = Sigma`, `B Bᵀ = Delta` and `E` standard normal.
pub fn sample_matrix_normal<R: Rng + ?Sized>(
    mean: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    delta: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let (n, p) = mean.shape();
    if sigma.shape() != (n, n) || delta.shape() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "mean {n}x{p}, row covariance {:?}, column covariance {:?}",
            sigma.shape(),
            delta.shape()
        )));
    }
    let a = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();
    let b = delta.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();
    let mut e = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            e[(i, j)] = StandardNormal.sample(rng);
        }
    }
    Ok(mean + a * e * b.transpose())
}

/// `(τ, ξ)` with `τ/ξ = snr` and `τ + ξ = c`.
pub fn snr_to_tau_xi(snr: f64, c: f64) -> (f64, f64) {
    let xi = c / (1.0 + snr);
    (c - xi, xi)
}

/// Spacing of the synthetic hexagonal lattice.
pub const GRID_SPACING: f64 = 10.0;

fn hex_patch(size: usize) -> Vec<Point> {
    let m = ((size as f64).sqrt().ceil() as i64) + 2;
    let h = 3f64.sqrt() / 2.0;
    let mut pts = Vec::new();
    for a in -m..=m {
        for b in -m..=m {
            let x = (a as f64 + 0.5 * b as f64) * GRID_SPACING;
            let y = b as f64 * h * GRID_SPACING;
            pts.push(Point::new(x, y));
        }
    }
    pts.sort_by(|p, q| {
        let dp = ((p.x * p.x + p.y * p.y) * 1e6).round();
        let dq = ((q.x * q.x + q.y * q.y) * 1e6).round();
        dp.total_cmp(&dq).then(p.y.atan2(p.x).total_cmp(&q.y.atan2(q.x)))
    });
    pts.truncate(size);
    pts
}

/// Hexagonal-lattice patches, one per cluster, laid out along the x axis.
///
/// Each patch holds the `size` lattice points nearest its center, randomly
/// rotated. Neighboring patches are separated by more than the largest patch
/// diameter plus two lattice spacings, so every within-patch distance is
/// shorter than every between-patch distance.
pub fn synthetic_coords<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<(Vec<Point>, Vec<usize>)> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::ConfigInvalid(String::from("patch sizes must be positive")));
    }
    let patches: Vec<Vec<Point>> = sizes.iter().map(|&s| hex_patch(s)).collect();
    let radius = |pts: &[Point]| pts.iter().map(|p| p.x.hypot(p.y)).fold(0.0, f64::max);
    let max_diameter = patches.iter().map(|p| 2.0 * radius(p)).fold(0.0, f64::max);
    let gap = max_diameter + 2.0 * GRID_SPACING;
    let mut coords = Vec::with_capacity(sizes.iter().sum());
    let mut labels = Vec::with_capacity(coords.capacity());
    let mut cursor = 0.0;
    for (r, patch) in patches.iter().enumerate() {
        let rad = radius(patch);
        let center = cursor + rad;
        cursor = center + rad + gap;
        let angle = rng.random::<f64>() * 2.0 * PI;
        let (s, c) = angle.sin_cos();
        for p in patch {
            coords.push(Point::new(center + c * p.x - s * p.y, s * p.x + c * p.y));
            labels.push(r);
        }
    }
    Ok((coords, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    S1,
    S2,
    S3,
    S4,
    S5,
    Custom,
}

/// Row-cluster covariance recipe for a cluster of `n` rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WishartSpec {
    /// `W(n + df_offset, diag_mean / (n + df_offset) · I)`, whose diagonal
    /// has mean `diag_mean`.
    Isotropic { df_offset: usize, diag_mean: f64 },
    /// `W(n + df_offset, Σ_ref · 200 / (divisor · n))`, where `Σ_ref` is the
    /// first row cluster's draw when it has the same size and a fresh draw
    /// of the first recipe otherwise.
    Reference { df_offset: usize, divisor: f64 },
}

impl WishartSpec {
    /// The three recipes of the reference design at 200 rows per cluster:
    /// `W(210, 0.03 I)`, `W(230, 0.05 I)` and `W(200, Σ₁/150)`.
    pub fn defaults() -> [WishartSpec; 3] {
        [
            WishartSpec::Isotropic {
                df_offset: 10,
                diag_mean: 6.3,
            },
            WishartSpec::Isotropic {
                df_offset: 30,
                diag_mean: 11.5,
            },
            WishartSpec::Reference {
                df_offset: 0,
                divisor: 150.0,
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoordsSource {
    SyntheticGrid,
    /// Given sites; columns are assigned to clusters in order, the first
    /// `col_sizes[0]` sites to cluster 0 and so on.
    Points(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Rows per row cluster. For `S5`, only the total matters; it must be a
    /// multiple of six.
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
    /// `τ/ξ` per block, `snr[k][r]`.
    pub snr: Vec<Vec<f64>>,
    pub c_true: f64,
    /// One kernel per column cluster; empty selects the defaults.
    pub kernels: Vec<KernelParams>,
    /// One recipe per row cluster; empty selects the defaults.
    pub wishart: Vec<WishartSpec>,
    pub coords: CoordsSource,
    pub lambda_s: f64,
    pub lambda_b: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Default layout for a scenario with `K = R = 3`, `rows` rows and
    /// `cols` columns per cluster.
    pub fn preset(scenario: Scenario, rows: usize, cols: usize, seed: u64) -> Self {
        let snr = match scenario {
            Scenario::S2 => vec![vec![0.0, 1.0, 3.0]; 3],
            Scenario::S3 => vec![vec![0.0; 3], vec![1.0; 3], vec![3.0; 3]],
            _ => vec![vec![0.0, 1.0, 3.0], vec![3.0, 0.0, 1.0], vec![1.0, 3.0, 0.0]],
        };
        let half = core::f64::consts::FRAC_1_SQRT_2;
        ScenarioConfig {
            scenario,
            row_sizes: vec![rows; 3],
            col_sizes: vec![cols; 3],
            snr,
            c_true: 10.0,
            kernels: Vec::new(),
            wishart: Vec::new(),
            coords: CoordsSource::SyntheticGrid,
            lambda_s: if scenario == Scenario::S4 { half } else { 1.0 },
            lambda_b: if scenario == Scenario::S4 { half } else { 0.0 },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        let (k, r) = (self.row_sizes.len(), self.col_sizes.len());
        if k == 0 || r == 0 || self.row_sizes.contains(&0) || self.col_sizes.contains(&0) {
            return bad(String::from("cluster sizes must be non-empty and positive"));
        }
        if self.snr.len() != k || self.snr.iter().any(|row| row.len() != r) {
            return bad(format!("snr must be a {k}x{r} grid"));
        }
        if self.snr.iter().flatten().any(|&s| !(s >= 0.0) || !s.is_finite()) {
            return bad(String::from("snr entries must be finite and non-negative"));
        }
        if !(self.c_true > 0.0) || !self.c_true.is_finite() {
            return bad(String::from("c_true must be positive"));
        }
        if !self.kernels.is_empty() && self.kernels.len() != r {
            return bad(format!("{} kernels for {r} column clusters", self.kernels.len()));
        }
        if !self.wishart.is_empty() && self.wishart.len() != k {
            return bad(format!("{} Wishart recipes for {k} row clusters", self.wishart.len()));
        }
        for w in &self.wishart {
            let ok = match *w {
                WishartSpec::Isotropic { diag_mean, .. } => diag_mean > 0.0 && diag_mean.is_finite(),
                WishartSpec::Reference { divisor, .. } => divisor > 0.0 && divisor.is_finite(),
            };
            if !ok {
                return bad(String::from("Wishart scales must be positive"));
            }
        }
        if let CoordsSource::Points(p) = &self.coords {
            if p.len() != self.col_sizes.iter().sum::<usize>() {
                return bad(format!("{} sites for {} columns", p.len(), self.col_sizes.iter().sum::<usize>()));
            }
        }
        match self.scenario {
            Scenario::S4 => {
                if (self.lambda_s.powi(2) + self.lambda_b.powi(2) - 1.0).abs() > 1e-10 {
                    return bad(String::from("lambda_s² + lambda_b² must equal 1"));
                }
                if self.lambda_s < 0.0 || self.lambda_b < 0.0 {
                    return bad(String::from("mixing weights must be non-negative"));
                }
            }
            Scenario::S5 => {
                let n: usize = self.row_sizes.iter().sum();
                if k != 3 || r != 3 || n % 6 != 0 {
                    return bad(String::from("S5 needs K = R = 3 and a row count divisible by 6"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Generating labels and parameters of a simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Row partition to score against; for `S5` the refinement labels.
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    /// `S5` only: `nested_row_labels[r][i]` is row `i`'s cluster within
    /// column cluster `r`.
    pub nested_row_labels: Option<Vec<Vec<usize>>>,
    pub tau: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub kernels: Vec<KernelParams>,
    pub c_true: f64,
}

/// Length scale factor of the synthetic grid relative to the reference
/// design of 200 sites per cluster.
fn grid_scale(col_sizes: &[usize]) -> f64 {
    let mean = col_sizes.iter().sum::<usize>() as f64 / col_sizes.len() as f64;
    (mean / 200.0).sqrt()
}

/// Exponential (50), rational quadratic (50, 2) and Gaussian (70) length
/// scales, multiplied by `factor` and cycled over the column clusters.
pub fn default_kernels(r: usize, factor: f64) -> Vec<KernelParams> {
    (0..r)
        .map(|i| match i % 3 {
            0 => KernelParams::new(KernelKind::Exponential, vec![50.0 * factor]),
            1 => KernelParams::new(KernelKind::RationalQuadratic, vec![50.0 * factor, 2.0]),
            _ => KernelParams::new(KernelKind::Gaussian, vec![70.0 * factor]),
        })
        .collect::<Result<Vec<_>>>()
        .expect("default kernel parameters are positive")
}

fn draw_row_covariance<R: Rng + ?Sized>(
    spec: WishartSpec,
    n: usize,
    reference: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    match spec {
        WishartSpec::Isotropic { df_offset, diag_mean } => {
            let df = n + df_offset;
            sample_wishart(df, &(DMatrix::identity(n, n) * (diag_mean / df as f64)), rng)
        }
        WishartSpec::Reference { df_offset, divisor } => {
            let fresh;
            let base = match reference {
                Some(m) if m.nrows() == n => m,
                _ => {
                    fresh = draw_row_covariance(WishartSpec::defaults()[0], n, None, rng)?;
                    &fresh
                }
            };
            sample_wishart(n + df_offset, &(base * (200.0 / (divisor * n as f64))), rng)
        }
    }
}

fn column_covariance(coords: &[Point], kernel: &KernelParams, tau: f64, xi: f64) -> Result<DMatrix<f64>> {
    let k = kernel_matrix(coords, kernel)?;
    let p = coords.len();
    Ok(k * tau + DMatrix::identity(p, p) * xi)
}

/// Population column covariance `τK + ξI` of every block, assembled without
/// sampling; indexed `[k][r]`.
pub fn population_column_covariances(cfg: &ScenarioConfig, coords: &[Point], col_labels: &[usize], kernels: &[KernelParams]) -> Result<Vec<Vec<DMatrix<f64>>>> {
    let groups = group_coords(coords, col_labels, cfg.col_sizes.len());
    cfg.snr
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(r, &s)| {
                    let (tau, xi) = snr_to_tau_xi(s, cfg.c_true);
                    column_covariance(&groups[r], &kernels[r], tau, xi)
                })
                .collect()
        })
        .collect()
}

fn group_coords(coords: &[Point], labels: &[usize], r: usize) -> Vec<Vec<Point>> {
    let mut g = vec![Vec::new(); r];
    for (p, &l) in coords.iter().zip(labels) {
        g[l].push(*p);
    }
    g
}

/// Rows of each of the six chunks, and the chunk-to-cluster map of each
/// column cluster for `S5`: sizes `(n/3, n/3, n/3)` in the first two column
/// clusters and `(n/6, n/3, n/2)` in the third.
const S5_LAYOUT: [[usize; 6]; 3] = [[0, 0, 1, 1, 2, 2], [0, 0, 1, 2, 1, 2], [0, 1, 1, 2, 2, 2]];

/// Refinement of several row partitions: rows share a label exactly when
/// they share a cluster in every partition. Labels follow first appearance.
pub fn refine_partitions(partitions: &[Vec<usize>]) -> Vec<usize> {
    let n = partitions.first().map_or(0, Vec::len);
    let mut seen: Vec<Vec<usize>> = Vec::new();
    (0..n)
        .map(|i| {
            let key: Vec<usize> = partitions.iter().map(|p| p[i]).collect();
            match seen.iter().position(|s| *s == key) {
                Some(pos) => pos,
                None => {
                    seen.push(key);
                    seen.len() - 1
                }
            }
        })
        .collect()
}

fn members_of(labels: &[usize], k: usize) -> Vec<usize> {
    labels.iter().enumerate().filter(|(_, &l)| l == k).map(|(i, _)| i).collect()
}

fn write_block(x: &mut DMatrix<f64>, rows: &[usize], cols: &[usize], block: &DMatrix<f64>) {
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            x[(i, j)] = block[(a, b)];
        }
    }
}

/// Block-structured signal for a row partition per column cluster.
#[allow(clippy::too_many_arguments)]
fn block_signal<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    row_partitions: &[Vec<usize>],
    col_labels: &[usize],
    coords: &[Point],
    kernels: &[KernelParams],
    wishart: &[WishartSpec],
    shared_sigma: bool,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = row_partitions[0].len();
    let p = col_labels.len();
    let (k_count, r_count) = (cfg.row_sizes.len(), cfg.col_sizes.len());
    let mut x = DMatrix::zeros(n, p);
    let col_groups: Vec<Vec<usize>> = (0..r_count).map(|r| members_of(col_labels, r)).collect();
    let site_groups = group_coords(coords, col_labels, r_count);
    // Shared covariances: one draw per row cluster, the reference recipe
    // reusing the first cluster's draw. Otherwise fresh draws per block.
    let mut shared: Vec<DMatrix<f64>> = Vec::new();
    if shared_sigma {
        for k in 0..k_count {
            let size = row_partitions[0].iter().filter(|&&l| l == k).count();
            let s = draw_row_covariance(wishart[k], size, shared.first(), rng)?;
            shared.push(s);
        }
    }
    for r in 0..r_count {
        let rows_of = &row_partitions[if shared_sigma { 0 } else { r }];
        for k in 0..k_count {
            let rows = members_of(rows_of, k);
            if rows.is_empty() {
                continue;
            }
            let fresh;
            let sigma = if shared_sigma {
                &shared[k]
            } else {
                fresh = draw_row_covariance(wishart[k], rows.len(), None, rng)?;
                &fresh
            };
            let (tau, xi) = snr_to_tau_xi(cfg.snr[k][r], cfg.c_true);
            let delta = column_covariance(&site_groups[r], &kernels[r], tau, xi)?;
            let block = sample_matrix_normal(&DMatrix::zeros(rows.len(), col_groups[r].len()), sigma, &delta, rng)?;
            write_block(&mut x, &rows, &col_groups[r], &block);
        }
    }
    Ok(x)
}

/// Draws a dataset and its ground truth. Deterministic in `cfg.seed`.
pub fn generate_experiment(cfg: &ScenarioConfig) -> Result<(ExpressionDataset, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (k_count, r_count) = (cfg.row_sizes.len(), cfg.col_sizes.len());
    let (coords, col_labels) = match &cfg.coords {
        CoordsSource::SyntheticGrid => synthetic_coords(&cfg.col_sizes, &mut rng)?,
        CoordsSource::Points(p) => {
            let labels = cfg.col_sizes.iter().enumerate().flat_map(|(r, &s)| core::iter::repeat_n(r, s)).collect();
            (p.clone(), labels)
        }
    };
    let factor = match cfg.coords {
        CoordsSource::SyntheticGrid => grid_scale(&cfg.col_sizes),
        CoordsSource::Points(_) => 1.0,
    };
    let kernels = if cfg.kernels.is_empty() {
        default_kernels(r_count, factor)
    } else {
        cfg.kernels.clone()
    };
    let defaults = WishartSpec::defaults();
    let wishart: Vec<WishartSpec> = if cfg.wishart.is_empty() {
        (0..k_count).map(|k| defaults[k % 3]).collect()
    } else {
        cfg.wishart.clone()
    };

    let n: usize = cfg.row_sizes.iter().sum();
    let p = coords.len();
    let (x, row_labels, nested) = match cfg.scenario {
        Scenario::S5 => {
            let chunk = n / 6;
            let partitions: Vec<Vec<usize>> = S5_LAYOUT
                .iter()
                .map(|map| (0..n).map(|i| map[(i / chunk).min(5)]).collect())
                .collect();
            let x = block_signal(cfg, &partitions, &col_labels, &coords, &kernels, &wishart, false, &mut rng)?;
            (x, refine_partitions(&partitions), Some(partitions))
        }
        _ => {
            let labels: Vec<usize> = cfg.row_sizes.iter().enumerate().flat_map(|(k, &s)| core::iter::repeat_n(k, s)).collect();
            let parts = vec![labels.clone()];
            let mut x = block_signal(cfg, &parts, &col_labels, &coords, &kernels, &wishart, true, &mut rng)?;
            if cfg.scenario == Scenario::S4 {
                let sigma_b = sample_wishart(n, &(DMatrix::identity(n, n) * (9.0 / n as f64)), &mut rng)?;
                let kb = KernelParams::new(KernelKind::Gaussian, vec![50.0 * factor])?;
                let half = cfg.c_true / 2.0;
                let delta_b = column_covariance(&coords, &kb, half, half)?;
                let xb = sample_matrix_normal(&DMatrix::zeros(n, p), &sigma_b, &delta_b, &mut rng)?;
                x = x * cfg.lambda_s + xb * cfg.lambda_b;
            }
            (x, labels, None)
        }
    };

    let row_ids = (1..=n).map(|i| format!("gene_{i}")).collect();
    let col_ids = (1..=p).map(|j| format!("spot_{j}")).collect();
    let ds = ExpressionDataset::new(x, row_ids, col_ids, coords)?;
    let (tau, xi): (Vec<Vec<f64>>, Vec<Vec<f64>>) = cfg
        .snr
        .iter()
        .map(|row| row.iter().map(|&s| snr_to_tau_xi(s, cfg.c_true)).unzip())
        .unzip();
    Ok((
        ds,
        GroundTruth {
            row_labels,
            col_labels,
            nested_row_labels: nested,
            tau,
            xi,
            kernels,
            c_true: cfg.c_true,
        },
    ))
}
