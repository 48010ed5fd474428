use blockspace_core::kernels::{kernel_eigen, kernel_matrix};
use blockspace_core::posterior::{ig_credible_interval, SigmaPosterior};
use blockspace_core::{cer, cer_pairwise, icl, BlockParameters, KernelParams, Point};
use proptest::prelude::*;

fn kernel() -> impl Strategy<Value = KernelParams> {
    (0usize..3, 0.5f64..200.0, 0.1f64..20.0).prop_map(|(kind, theta, alpha)| match kind {
        0 => KernelParams::exponential(theta).unwrap(),
        1 => KernelParams::rational_quadratic(theta, alpha).unwrap(),
        _ => KernelParams::gaussian(theta).unwrap(),
    })
}

fn labels(n: std::ops::Range<usize>, k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    n.prop_flat_map(move |len| (prop::collection::vec(0..k, len), prop::collection::vec(0..k, len)))
}

proptest! {
    #[test]
    fn kernels_start_at_one_and_decay(phi in kernel()) {
        prop_assert_eq!(phi.eval(0.0), 1.0);
        let mut prev = 1.0;
        for i in 1..200 {
            let v = phi.eval(i as f64 * 2.0);
            prop_assert!(v <= prev && v >= 0.0);
            prev = v;
        }
    }

    #[test]
    fn rational_quadratic_tends_to_gaussian(theta in 1.0f64..100.0) {
        let rq = KernelParams::rational_quadratic(theta, 1e6).unwrap();
        let g = KernelParams::gaussian(theta).unwrap();
        for i in 0..=60 {
            let d = 3.0 * theta * i as f64 / 60.0;
            prop_assert!((rq.eval(d) - g.eval(d)).abs() <= 1e-4);
        }
    }

    #[test]
    fn kernel_matrices_are_psd(phi in kernel(), pts in prop::collection::vec((0.0f64..300.0, 0.0f64..300.0), 1..40)) {
        let coords: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let k = kernel_matrix(&coords, &phi).unwrap();
        prop_assert!(kernel_eigen(&k).is_ok());
    }

    #[test]
    fn block_constraint_holds(tau in 1e-4f64..9.9999, c in 10.0f64..10.0001, mu in -5.0f64..5.0) {
        let b = BlockParameters::new(mu, tau, 2.0, 1.0, c).unwrap();
        prop_assert!((b.tau + b.xi - c).abs() <= 1e-10);
    }

    #[test]
    fn cer_fast_matches_pairwise((a, b) in labels(2..500, 6)) {
        let fast = cer(&a, &b).unwrap();
        let slow = cer_pairwise(&a, &b).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-15);
        prop_assert_eq!(fast, cer(&b, &a).unwrap());
    }

    #[test]
    fn cer_ignores_label_names((a, b) in labels(2..100, 4), shift in 1usize..50) {
        let renamed: Vec<usize> = a.iter().map(|&l| (l * 7 + shift) % 1000).collect();
        prop_assert_eq!(cer(&a, &b).unwrap(), cer(&renamed, &b).unwrap());
        prop_assert_eq!(cer(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn icl_penalty_is_positive(ll in -1e6f64..0.0, n in 1usize..500, p in 2usize..500, k in 1usize..6, r in 1usize..6, dim in 1usize..3) {
        let v = icl(ll, n, p, k, r, dim);
        prop_assert!(v < ll);
        prop_assert!(icl(ll, 2 * n, 2 * p, k, r, dim) < v);
    }

    #[test]
    fn credible_intervals_nest(a in 0.6f64..200.0, b in 0.01f64..100.0, l1 in 0.05f64..0.9, gap in 0.01f64..0.09) {
        let post = SigmaPosterior::new(a, b).unwrap();
        let (lo1, hi1) = ig_credible_interval(&post, l1).unwrap();
        let (lo2, hi2) = ig_credible_interval(&post, l1 + gap).unwrap();
        prop_assert!(lo2 <= lo1 && hi1 <= hi2);
    }
}
