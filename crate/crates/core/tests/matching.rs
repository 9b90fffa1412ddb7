//! Association schemes on drawn scenarios, checked against enumeration.

use std::collections::HashMap;

use hma_ee::channel::{dbm_to_watt, draw_scenario, Placement, Scenario, ScenarioConfig};
use hma_ee::matching::{
    dc_match, find_improving_swap, greedy_init, mwm_gain, oma_mwm, random_match, swap_match,
    system_ee, Matching, PaSolver, SWAP_THRESHOLD,
};
use hma_ee::oracle::{exhaustive_matching, DEFAULT_ENUMERATION_BUDGET};

fn drawn(num_users: usize, num_rbs: usize, seed: u64) -> Scenario {
    let mut cfg = ScenarioConfig::with_defaults(
        num_users,
        num_rbs,
        Placement::UniformDisk { radius: 150.0 },
    );
    cfg.seed = seed;
    cfg.max_power = dbm_to_watt(20.0);
    draw_scenario(&cfg).unwrap()
}

fn total_gain(s: &Scenario, m: &Matching) -> f64 {
    m.assignment().iter().enumerate().map(|(u, &rb)| s.gain(u, rb)).sum()
}

#[test]
fn random_match_is_uniform_over_matchings() {
    let s = drawn(4, 2, 1);
    let draws = 10_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for seed in 0..draws {
        *counts.entry(random_match(&s, seed).assignment().to_vec()).or_default() += 1;
    }
    assert_eq!(counts.len(), 6);
    let p = 1.0 / 6.0;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    let mut chi2 = 0.0;
    for &c in counts.values() {
        assert!((c as f64 - mean).abs() <= 3.0 * sd, "{counts:?}");
        chi2 += (c as f64 - mean).powi(2) / mean;
    }
    // 99.9% quantile of chi-square with 5 degrees of freedom
    assert!(chi2 < 20.52, "{chi2}");
}

#[test]
fn mwm_identity_on_diagonal_dominant_gains() {
    let gains = (0..4)
        .map(|u| (0..4).map(|m| if u == m { 10.0 } else { 1.0 + m as f64 * 0.1 }).collect())
        .collect();
    let s = Scenario::from_gains(gains, 0.0, 1.0, 1e-3, 1e-3).unwrap();
    assert_eq!(mwm_gain(&s).assignment(), &[0, 1, 2, 3]);
}

#[test]
fn mwm_value_is_invariant_under_user_permutation() {
    for seed in 0..20 {
        let s = drawn(9, 3, seed);
        let mut permuted = s.clone();
        permuted.gains.reverse();
        let a = total_gain(&s, &mwm_gain(&s));
        let b = total_gain(&permuted, &mwm_gain(&permuted));
        assert!((a - b).abs() <= 1e-12 * a);
        // and it beats the greedy start on total gain
        assert!(a >= total_gain(&s, &greedy_init(&s)) * (1.0 - 1e-12));
    }
}

#[test]
fn oma_mwm_one_user_per_rb_converges_fast() {
    for seed in 0..10 {
        let s = drawn(4, 4, seed);
        assert!(oma_mwm(&s).iterations <= 2);
    }
}

#[test]
fn oma_mwm_beats_random_matching_on_average() {
    let (mut mwm, mut rand) = (0.0, 0.0);
    for seed in 0..30 {
        let s = drawn(4, 2, seed);
        mwm += oma_mwm(&s).system_ee;
        rand += system_ee(&s, &random_match(&s, seed), PaSolver::OmaMaxEe).system_ee;
    }
    assert!(mwm >= rand);
}

#[test]
fn dc_gives_distinct_first_choices() {
    let gains = vec![
        vec![5.0, 1.0, 1.0],
        vec![1.0, 1.0, 5.0],
        vec![1.0, 5.0, 1.0],
    ];
    let s = Scenario::from_gains(gains, 0.5, 1.0, 1e-3, 1e-3).unwrap();
    assert_eq!(dc_match(&s, PaSolver::NomaMaxEe).matching.assignment(), &[0, 2, 1]);
    let one = Scenario::from_gains(vec![vec![1.0], vec![2.0]], 0.5, 1.0, 1e-3, 1e-3).unwrap();
    let sol = dc_match(&one, PaSolver::NomaMaxEe);
    assert_eq!(sol.matching.assignment(), &[0, 0]);
    assert_eq!(sol.iterations, 1);
}

#[test]
fn swap_keeps_a_pairwise_optimal_start() {
    // every user prefers a different RB and gains are well separated
    let gains = vec![vec![9.0, 0.1], vec![0.1, 9.0]];
    let s = Scenario::from_gains(gains, 0.5, 1.0, 1e-3, 1e-3).unwrap();
    let sol = swap_match(&s, PaSolver::NomaMaxEe);
    assert_eq!(sol.swap_count, 0);
    assert_eq!(sol.matching, greedy_init(&s));
}

#[test]
fn swap_trace_replays_to_a_stable_matching() {
    for seed in 0..10 {
        let s = drawn(12, 4, seed);
        for solver in [PaSolver::NomaMaxEe, PaSolver::OmaMaxEe] {
            let sol = swap_match(&s, solver);
            let mut m = greedy_init(&s);
            for rec in &sol.swap_trace {
                assert!(rec.ee_after > rec.ee_before + SWAP_THRESHOLD);
                m.swap(rec.user_a, rec.user_b);
                assert!(m.is_valid(&s.cluster_sizes));
            }
            assert_eq!(m, sol.matching);
            assert_eq!(sol.swap_trace.len(), sol.swap_count);
            assert_eq!(find_improving_swap(&s, solver, &m, SWAP_THRESHOLD), None);
            let start = system_ee(&s, &greedy_init(&s), solver).system_ee;
            assert!(sol.system_ee >= start);
        }
    }
}

#[test]
fn exhaustive_dominates_every_heuristic() {
    for (u, m) in [(4, 2), (5, 2), (6, 3), (3, 3)] {
        for seed in 0..5 {
            let s = drawn(u, m, 100 + seed);
            let best = exhaustive_matching(&s, PaSolver::NomaMaxEe, DEFAULT_ENUMERATION_BUDGET)
                .unwrap()
                .system_ee;
            let tol = best * 1e-9;
            let heuristics = [
                swap_match(&s, PaSolver::NomaMaxEe).system_ee,
                dc_match(&s, PaSolver::NomaMaxEe).system_ee,
                system_ee(&s, &mwm_gain(&s), PaSolver::NomaMaxEe).system_ee,
                system_ee(&s, &random_match(&s, seed), PaSolver::NomaMaxEe).system_ee,
            ];
            for h in heuristics {
                assert!(h <= best + tol, "U={u} M={m}: {h} > {best}");
            }
            let random_mean = (0..20)
                .map(|k| system_ee(&s, &random_match(&s, k), PaSolver::NomaMaxEe).system_ee)
                .sum::<f64>()
                / 20.0;
            assert!(heuristics[0] >= random_mean);
        }
    }
}

#[test]
fn exhaustive_on_trivial_sizes() {
    let s = drawn(2, 1, 3);
    let sol = exhaustive_matching(&s, PaSolver::NomaMaxEe, DEFAULT_ENUMERATION_BUDGET).unwrap();
    assert_eq!(sol.iterations, 1);
    let s = drawn(3, 3, 3);
    let sol = exhaustive_matching(&s, PaSolver::NomaMaxEe, DEFAULT_ENUMERATION_BUDGET).unwrap();
    assert_eq!(sol.iterations, 6);
    let mwm = system_ee(&s, &mwm_gain(&s), PaSolver::NomaMaxEe).system_ee;
    assert!(sol.system_ee >= mwm);
}
