use serde::{Deserialize, Serialize};

use super::{greedy_init, system_ee, ClusterScorer, Matching, PaSolver, SwapRecord, SystemSolution};
use crate::channel::Scenario;

/// A swap is committed only if it raises the two-cluster EE by more than this.
pub const SWAP_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapOptions {
    pub threshold: f64,
    pub record_trace: bool,
    /// Safety cap on full passes over all ordered user pairs.
    pub max_passes: usize,
}

impl Default for SwapOptions {
    fn default() -> Self {
        Self {
            threshold: SWAP_THRESHOLD,
            record_trace: true,
            max_passes: 10_000,
        }
    }
}

/// Swap matching from the greedy max-gain start.
pub fn swap_match(scenario: &Scenario, solver: PaSolver) -> SystemSolution {
    swap_match_from(scenario, solver, greedy_init(scenario), &SwapOptions::default())
}

/// Sweeps ordered pairs `(u, k)` lexicographically and commits the first
/// improving swap found, until a full pass commits nothing.
pub fn swap_match_from(
    scenario: &Scenario,
    solver: PaSolver,
    initial: Matching,
    options: &SwapOptions,
) -> SystemSolution {
    let mut scorer = ClusterScorer::new(scenario, solver);
    let mut matching = initial;
    let mut cluster_ee: Vec<f64> = (0..matching.num_rbs())
        .map(|m| scorer.ee(m, matching.members(m)))
        .collect();
    let num_users = matching.num_users();
    let mut trace = Vec::new();
    let mut swaps = 0;
    let mut passes = 0;
    while passes < options.max_passes {
        passes += 1;
        let mut committed = false;
        for u in 0..num_users {
            for k in 0..num_users {
                let (mu, mk) = (matching.rb_of(u), matching.rb_of(k));
                if mu == mk {
                    continue;
                }
                let (a, b) = swapped_members(&matching, u, k);
                let before = cluster_ee[mu] + cluster_ee[mk];
                let (ea, eb) = (scorer.ee(mu, &a), scorer.ee(mk, &b));
                if ea + eb > before + options.threshold {
                    matching.swap(u, k);
                    cluster_ee[mu] = ea;
                    cluster_ee[mk] = eb;
                    swaps += 1;
                    committed = true;
                    if options.record_trace {
                        trace.push(SwapRecord {
                            pass: passes,
                            user_a: u,
                            user_b: k,
                            ee_before: before,
                            ee_after: ea + eb,
                        });
                    }
                }
            }
        }
        if !committed {
            break;
        }
    }
    let mut solution = system_ee(scenario, &matching, solver);
    solution.swap_count = swaps;
    solution.swap_trace = trace;
    solution.iterations = passes;
    solution
}

/// First ordered pair whose swap would raise the system EE by more than
/// `threshold`, if any.
pub fn find_improving_swap(
    scenario: &Scenario,
    solver: PaSolver,
    matching: &Matching,
    threshold: f64,
) -> Option<(usize, usize)> {
    let mut scorer = ClusterScorer::new(scenario, solver);
    let n = matching.num_users();
    for u in 0..n {
        for k in 0..n {
            let (mu, mk) = (matching.rb_of(u), matching.rb_of(k));
            if mu == mk {
                continue;
            }
            let before = scorer.ee(mu, matching.members(mu)) + scorer.ee(mk, matching.members(mk));
            let (a, b) = swapped_members(matching, u, k);
            if scorer.ee(mu, &a) + scorer.ee(mk, &b) > before + threshold {
                return Some((u, k));
            }
        }
    }
    None
}

fn swapped_members(matching: &Matching, u: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    let replace = |list: &[usize], out: usize, inn: usize| {
        let mut v: Vec<usize> = list.iter().map(|&x| if x == out { inn } else { x }).collect();
        v.sort_unstable();
        v
    };
    (
        replace(matching.members(matching.rb_of(u)), u, k),
        replace(matching.members(matching.rb_of(k)), k, u),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::tests::scenario;

    #[test]
    fn crossed_gains_take_one_swap() {
        // each user is far better on the RB the other one holds
        let s = scenario(vec![vec![1.0, 50.0], vec![50.0, 1.0]], 0.5);
        let start = Matching::from_assignment(vec![0, 1], &s.cluster_sizes).unwrap();
        let sol = swap_match_from(&s, PaSolver::NomaMaxEe, start, &SwapOptions::default());
        assert_eq!(sol.swap_count, 1);
        assert_eq!(sol.matching.assignment(), &[1, 0]);
        assert_eq!(sol.swap_trace[0].pass, 1);
        assert!(sol.swap_trace[0].ee_after > sol.swap_trace[0].ee_before);
        assert_eq!(sol.iterations, 2);
    }

    #[test]
    fn result_is_swap_stable_and_improves_start() {
        let s = scenario(
            vec![
                vec![0.3, 2.0, 0.9],
                vec![1.5, 0.2, 0.8],
                vec![0.7, 0.6, 3.0],
                vec![2.2, 1.1, 0.1],
                vec![0.4, 0.9, 1.7],
                vec![1.0, 1.2, 0.5],
            ],
            0.3,
        );
        let start = greedy_init(&s);
        let base = system_ee(&s, &start, PaSolver::NomaMaxEe).system_ee;
        let sol = swap_match(&s, PaSolver::NomaMaxEe);
        assert!(sol.system_ee >= base - 1e-12);
        assert!(sol.matching.is_valid(&s.cluster_sizes));
        assert_eq!(
            find_improving_swap(&s, PaSolver::NomaMaxEe, &sol.matching, SWAP_THRESHOLD),
            None
        );
        for w in sol.swap_trace.windows(2) {
            assert!(w[0].pass <= w[1].pass);
        }
    }

    #[test]
    fn single_rb_has_nothing_to_swap() {
        let s = scenario(vec![vec![1.0], vec![2.0]], 0.0);
        let sol = swap_match(&s, PaSolver::NomaMaxEe);
        assert_eq!(sol.swap_count, 0);
        assert_eq!(sol.iterations, 1);
    }
}
