mod support;

use approx::assert_relative_eq;
use blockspace_core::kernels::{kernel_eigen, kernel_matrix};
use blockspace_core::likelihood::{classification_loglik, delta_logdet_and_solve, row_marginal_logdensity};
use blockspace_core::posterior::{ig_log_density, sigma_posterior};
use blockspace_core::{BlockGrid, BlockParameters, CoClusterLabels, ExpressionDataset, KernelEigenCache, KernelParams, Point};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

fn random_kernel<R: Rng>(rng: &mut R) -> KernelParams {
    let theta = 5.0 + 60.0 * rng.random::<f64>();
    match rng.random_range(0..3) {
        0 => KernelParams::exponential(theta).unwrap(),
        1 => KernelParams::rational_quadratic(theta, 0.5 + 4.0 * rng.random::<f64>()).unwrap(),
        _ => KernelParams::gaussian(theta).unwrap(),
    }
}

fn random_block<R: Rng>(rng: &mut R) -> BlockParameters {
    let c = 10.0;
    BlockParameters::new(
        rng.random::<f64>() * 4.0 - 2.0,
        0.05 + 9.9 * rng.random::<f64>(),
        0.5 + 5.0 * rng.random::<f64>(),
        0.1 + 3.0 * rng.random::<f64>(),
        c,
    )
    .unwrap()
}

#[test]
fn marginal_density_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..50 {
        let p = 1 + case % 3;
        let coords = random_coords(p, 100.0, &mut rng);
        let k = kernel_matrix(&coords, &random_kernel(&mut rng)).unwrap();
        let block = random_block(&mut rng);
        let x: Vec<f64> = normal_vec(p, &mut rng).iter().map(|v| block.mu + 1.5 * v).collect();
        let ours = row_marginal_logdensity(&x, &block, &kernel_eigen(&k).unwrap()).unwrap();
        let oracle = quadrature_log_marginal(&x, &block, &k);
        assert!(((ours - oracle).exp() - 1.0).abs() <= 1e-6, "case {case}: {ours} vs {oracle}");
    }
}

#[test]
fn student_t_example() {
    let eigen = kernel_eigen(&DMatrix::from_element(1, 1, 1.0)).unwrap();
    let block = BlockParameters::new(0.0, 0.3, 1.0, 1.0, 1.0).unwrap();
    let v = row_marginal_logdensity(&[0.0], &block, &eigen).unwrap();
    assert_relative_eq!(v.exp(), 1.0 / (2.0 * 2f64.sqrt()), max_relative = 1e-12);
}

#[test]
fn density_integrates_to_one_in_one_and_two_dimensions() {
    let block = BlockParameters::new(0.3, 6.0, 2.5, 1.5, 10.0).unwrap();
    let one = kernel_eigen(&DMatrix::from_element(1, 1, 1.0)).unwrap();
    let f1 = |x: f64| row_marginal_logdensity(&[x], &block, &one).unwrap().exp();
    let total = composite_integral(f1, -200.0, 200.0, 200);
    assert!((total - 1.0).abs() < 1e-4, "{total}");

    let k = kernel_matrix(&[Point::new(0.0, 0.0), Point::new(20.0, 0.0)], &KernelParams::exponential(30.0).unwrap()).unwrap();
    let two = kernel_eigen(&k).unwrap();
    let inner = |x: f64| {
        composite_integral(|y| row_marginal_logdensity(&[x, y], &block, &two).unwrap().exp(), -150.0, 150.0, 60)
    };
    let total = composite_integral(inner, -150.0, 150.0, 60);
    assert!((total - 1.0).abs() < 1e-4, "{total}");
}

#[test]
fn eigen_path_matches_dense_cholesky() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100 {
        let p = 1 + (case * 7) % 50;
        let coords = random_coords(p, 200.0, &mut rng);
        let phi = random_kernel(&mut rng);
        let members: Vec<usize> = (0..p).collect();
        let cache = KernelEigenCache::build(&coords, members, &phi, 0).unwrap();
        let k = kernel_matrix(&coords, &phi).unwrap();
        let tau = 0.01 + 9.98 * rng.random::<f64>();
        let xi = 10.0 - tau;
        let v = normal_vec(p, &mut rng);
        let ours = delta_logdet_and_solve(&cache.eigen, tau, xi, &v).unwrap();
        let delta = &k * tau + DMatrix::identity(p, p) * xi;
        let (logdet, quad) = dense_logdet_quad(&delta, &v);
        assert_relative_eq!(ours.logdet, logdet, max_relative = 1e-8, epsilon = 1e-10);
        assert_relative_eq!(ours.quad, quad, max_relative = 1e-8);
        let back = &delta * &ours.solved;
        for j in 0..p {
            assert!((back[j] - v[j]).abs() <= 1e-8 * (1.0 + v[j].abs()));
        }
    }
}

#[test]
fn reconstruction_of_random_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let coords = random_coords(10, 50.0, &mut rng);
    let k = kernel_matrix(&coords, &KernelParams::gaussian(20.0).unwrap()).unwrap();
    let e = kernel_eigen(&k).unwrap();
    assert!((e.reconstruct() - &k).amax() <= 1e-8);
}

#[test]
fn conjugacy_on_a_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = 4;
    let coords = random_coords(p, 60.0, &mut rng);
    let k = kernel_matrix(&coords, &KernelParams::exponential(25.0).unwrap()).unwrap();
    let eigen = kernel_eigen(&k).unwrap();
    let block = BlockParameters::new(0.5, 3.0, 2.0, 1.2, 10.0).unwrap();
    let x: Vec<f64> = normal_vec(p, &mut rng).iter().map(|v| 0.5 + 2.0 * v).collect();
    let marginal = row_marginal_logdensity(&x, &block, &eigen).unwrap();
    let post = sigma_posterior(&x, &block, &eigen, "g", (0, 0)).unwrap();
    let delta = &k * block.tau + DMatrix::identity(p, p) * block.xi;
    let resid: Vec<f64> = x.iter().map(|v| v - block.mu).collect();
    let (logdet, quad) = dense_logdet_quad(&delta, &resid);
    for i in 0..10 {
        let s = 0.05 * 1.8f64.powi(i);
        let log_prior = block.alpha * block.beta.ln() - libm::lgamma(block.alpha) - (block.alpha + 1.0) * s.ln() - block.beta / s;
        let log_lik = -0.5 * p as f64 * (2.0 * std::f64::consts::PI * s).ln() - 0.5 * logdet - quad / (2.0 * s);
        let lhs = log_prior + log_lik - marginal;
        let rhs = ig_log_density(&post, s);
        assert!(((lhs - rhs).exp() - 1.0).abs() < 1e-8, "s={s}");
    }
}

#[test]
fn gaussian_density_is_invariant_to_joint_rescaling() {
    // N(x; μ, σ²(τK + ξI)) equals N(x; μ, (σ²/a)(aτK + aξI)).
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = 5;
    let coords = random_coords(p, 80.0, &mut rng);
    let k = kernel_matrix(&coords, &KernelParams::gaussian(30.0).unwrap()).unwrap();
    let x = normal_vec(p, &mut rng);
    let log_normal = |sigma2: f64, tau: f64, xi: f64| {
        let delta = (&k * tau + DMatrix::identity(p, p) * xi) * sigma2;
        let (ld, q) = dense_logdet_quad(&delta, &x);
        -0.5 * (p as f64 * (2.0 * std::f64::consts::PI).ln() + ld + q)
    };
    for a in [0.1, 2.0, 37.0] {
        assert_relative_eq!(log_normal(1.7, 3.0, 7.0), log_normal(1.7 / a, 3.0 * a, 7.0 * a), max_relative = 1e-12);
    }
}

#[test]
fn classification_loglik_matches_naive_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (n, p) = (6, 6);
    let coords = random_coords(p, 40.0, &mut rng);
    let values = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 3.0);
    let ds = ExpressionDataset::from_matrix(values.clone(), coords.clone()).unwrap();
    let rows = vec![0, 1, 0, 1, 1, 0];
    let cols = vec![1, 0, 0, 1, 0, 1];
    let labels = CoClusterLabels::new(rows.clone(), cols.clone(), 2, 2).unwrap();
    let blocks: Vec<BlockParameters> = (0..4).map(|_| random_block(&mut rng)).collect();
    let theta = BlockGrid::from_blocks(2, 2, blocks).unwrap();
    let phi = vec![KernelParams::exponential(12.0).unwrap(), KernelParams::gaussian(18.0).unwrap()];
    let caches: Vec<KernelEigenCache> = (0..2)
        .map(|r| KernelEigenCache::build(&coords, (0..p).filter(|&j| cols[j] == r).collect(), &phi[r], r).unwrap())
        .collect();
    let ours = classification_loglik(&ds, &labels, &theta, &phi, &caches).unwrap();

    let mut naive = 0.0;
    for i in 0..n {
        for r in 0..2 {
            let idx: Vec<usize> = (0..p).filter(|&j| cols[j] == r).collect();
            let pts: Vec<Point> = idx.iter().map(|&j| coords[j]).collect();
            let k = kernel_matrix(&pts, &phi[r]).unwrap();
            let x: Vec<f64> = idx.iter().map(|&j| values[(i, j)]).collect();
            naive += dense_log_marginal(&x, theta.get(rows[i], r), &k);
        }
    }
    assert_relative_eq!(ours, naive, max_relative = 1e-10);
}
