mod support;

use blockspace_core::estimation::{m1_log_ratio, m2_log_ratio, propose_m1, propose_m2, MoveKind};
use blockspace_core::types::cluster_sizes;
use blockspace_core::{BlockGrid, BlockParameters};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

fn moved(from: &[usize], movers: &[usize], target: usize) -> Vec<usize> {
    let mut w = from.to_vec();
    for &j in movers {
        w[j] = target;
    }
    w
}

#[test]
fn m1_ratio_matches_enumeration() {
    let mut checked = 0;
    for p in 2..=6 {
        for r in 2..=3.min(p) {
            for w in all_labelings(p, r) {
                let sizes = cluster_sizes(&w, r);
                for m in 1..=2 {
                    for g1 in 0..r {
                        if sizes[g1] <= m {
                            continue;
                        }
                        for g2 in (0..r).filter(|&g| g != g1) {
                            let pool: Vec<usize> = (0..p).filter(|&j| w[j] == g1).collect();
                            for tuple in ordered_tuples(&pool, m) {
                                let to = moved(&w, &tuple, g2);
                                let oracle = m1_transition_probability(&to, &w, r, m).ln() - m1_transition_probability(&w, &to, r, m).ln();
                                let ours = m1_log_ratio(sizes[g1], sizes[g2], m);
                                assert!((ours - oracle).abs() <= 1e-12, "{w:?} -> {to:?}: {ours} vs {oracle}");
                                checked += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn m2_ratio_matches_enumeration() {
    let mut checked = 0;
    for p in 2..=6 {
        for r in 2..=3.min(p) {
            for w in all_labelings(p, r) {
                let sizes = cluster_sizes(&w, r);
                for m in 1..=2 {
                    for pairs in pair_sequences(r, m) {
                        let mut b_out = vec![0; r];
                        let mut b_in = vec![0; r];
                        for &(a, b) in &pairs {
                            b_out[a] += 1;
                            b_in[b] += 1;
                        }
                        if (0..r).any(|c| b_out[c] > sizes[c] || sizes[c] - b_out[c] + b_in[c] == 0) {
                            continue;
                        }
                        let reverse: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
                        let ours = m2_log_ratio(&sizes, &b_out, &b_in);
                        // Every labeling reachable along this pair sequence.
                        for to in all_labelings(p, r) {
                            let fwd = m2_path_probability(&w, &to, r, &pairs);
                            if fwd == 0.0 {
                                continue;
                            }
                            let rev = m2_path_probability(&to, &w, r, &reverse);
                            let oracle = rev.ln() - fwd.ln();
                            assert!((ours - oracle).abs() <= 1e-12, "{w:?} {pairs:?} -> {to:?}: {ours} vs {oracle}");
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn m2_two_to_two_example() {
    // p = (3, 3), both draws 1 -> 2: reverse picks 2 of 5, forward 2 of 3.
    let v = m2_log_ratio(&[3, 3], &[2, 0], &[0, 2]).exp();
    assert!((v - 0.3).abs() < 1e-14, "{v}");
}

#[test]
fn reverse_move_negates_the_log_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let start = vec![0, 0, 1, 1, 1, 2, 2, 0, 1, 2, 2, 0];
    for i in 0..2000 {
        let m = 1 + i % 3;
        let out = if i % 2 == 0 {
            propose_m1(&start, 3, m, &mut rng).unwrap()
        } else {
            propose_m2(&start, 3, m, &mut rng).unwrap()
        };
        if !out.feasible {
            continue;
        }
        let s_from = cluster_sizes(&start, 3);
        let s_to = cluster_sizes(&out.candidate, 3);
        let back = match out.move_kind {
            MoveKind::M1 => {
                let g1 = (0..3).find(|&c| s_to[c] < s_from[c]).unwrap();
                let g2 = (0..3).find(|&c| s_to[c] > s_from[c]).unwrap();
                m1_log_ratio(s_to[g2], s_to[g1], m)
            }
            MoveKind::M2 => {
                let mut b_out = vec![0; 3];
                let mut b_in = vec![0; 3];
                for j in 0..start.len() {
                    if start[j] != out.candidate[j] {
                        b_out[start[j]] += 1;
                        b_in[out.candidate[j]] += 1;
                    }
                }
                m2_log_ratio(&s_to, &b_in, &b_out)
            }
        };
        assert!((out.log_transition_ratio + back).abs() < 1e-12);
    }
}

#[test]
fn m2_with_one_pair_is_m1_with_one_mover() {
    let w = vec![0, 1, 1, 2, 2, 2];
    let (mut a, mut b) = (ChaCha8Rng::seed_from_u64(2), ChaCha8Rng::seed_from_u64(2));
    let mut hist1 = std::collections::BTreeMap::new();
    let mut hist2 = std::collections::BTreeMap::new();
    for _ in 0..20000 {
        let o1 = propose_m1(&w, 3, 1, &mut a).unwrap();
        let o2 = propose_m2(&w, 3, 1, &mut b).unwrap();
        if o1.feasible {
            *hist1.entry(o1.candidate.clone()).or_insert(0usize) += 1;
        }
        if o2.feasible {
            *hist2.entry(o2.candidate.clone()).or_insert(0usize) += 1;
        }
        if o1.feasible && o2.feasible && o1.candidate == o2.candidate {
            assert!((o1.log_transition_ratio - o2.log_transition_ratio).abs() < 1e-14);
        }
    }
    assert_eq!(hist1.keys().collect::<Vec<_>>(), hist2.keys().collect::<Vec<_>>());
    for (k, &c1) in &hist1 {
        let c2 = hist2[k];
        assert!((c1 as f64 - c2 as f64).abs() < 6.0 * (c1 as f64).sqrt() + 10.0, "{k:?}: {c1} vs {c2}");
    }
}

#[test]
fn se_chain_matches_enumerated_posterior() {
    let t = tiny_instance(3);
    let tv = se_chain_total_variation(&t, 100_000, 99);
    assert!(tv <= 0.05, "total variation {tv}");
}

#[test]
fn chain_without_spatial_signal_matches_enumeration() {
    let mut t = tiny_instance(4);
    let b = BlockParameters::new(0.0, 1e-6, 3.0, 1.0, 10.0).unwrap();
    t.theta = BlockGrid::filled(2, 2, b);
    let exact = exact_column_posterior(&t);
    let positive: Vec<f64> = exact.iter().copied().filter(|&v| v > 0.0).collect();
    assert_eq!(positive.len(), 62);
    let tv = se_chain_total_variation(&t, 100_000, 5);
    assert!(tv <= 0.05, "total variation {tv}");
}
