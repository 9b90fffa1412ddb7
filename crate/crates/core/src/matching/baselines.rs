//! Reference association schemes: maximum-weight matching on channel gain,
//! OMA with rate-weighted matching, and deferred acceptance.

use super::{
    max_weight_assignment, system_ee, ClusterScorer, Matching, PaSolver, SystemSolution,
};
use crate::channel::Scenario;

/// Alternation stops once the system EE improves by less than this.
pub const OMA_MWM_TOLERANCE: f64 = 1e-8;
pub const OMA_MWM_MAX_ALTERNATIONS: usize = 50;

/// Slot `j` of the expanded assignment problem belongs to RB `slots[j]`.
fn expand_slots(cluster_sizes: &[usize]) -> Vec<usize> {
    cluster_sizes
        .iter()
        .enumerate()
        .flat_map(|(m, &l)| std::iter::repeat_n(m, l))
        .collect()
}

fn assign_by_weight(scenario: &Scenario, weight: impl Fn(usize, usize) -> f64) -> Matching {
    let slots = expand_slots(&scenario.cluster_sizes);
    let weights: Vec<Vec<f64>> = (0..scenario.num_users())
        .map(|u| slots.iter().map(|&m| weight(u, m)).collect())
        .collect();
    let col = max_weight_assignment(&weights);
    Matching::from_assignment(
        col.iter().map(|&j| slots[j]).collect(),
        &scenario.cluster_sizes,
    )
    .expect("slots match sizes")
}

/// Matching that maximizes the total channel gain, RB `m` replicated
/// `L_m` times.
pub fn mwm_gain(scenario: &Scenario) -> Matching {
    let scale = scenario
        .gains
        .iter()
        .flatten()
        .fold(0.0f64, |a, &g| a.max(g));
    assign_by_weight(scenario, |u, m| scenario.gain(u, m) / scale)
}

/// Alternates a rate-weighted matching at fixed powers with per-cluster OMA
/// power allocation. Starts from every user at its cap and returns the best
/// matching seen.
pub fn oma_mwm(scenario: &Scenario) -> SystemSolution {
    let mut powers = scenario.max_powers.clone();
    let mut best: Option<SystemSolution> = None;
    for alternation in 1..=OMA_MWM_MAX_ALTERNATIONS {
        let matching = assign_by_weight(scenario, |u, m| {
            let share = scenario.cluster_sizes[m] as f64;
            (1.0 + share * powers[u] * scenario.gain(u, m) / scenario.noise_power).log2() / share
        });
        let mut sol = system_ee(scenario, &matching, PaSolver::OmaMaxEe);
        sol.iterations = alternation;
        for c in sol.clusters.iter().filter(|c| c.solution.feasible) {
            for (&u, &p) in c.users.iter().zip(c.solution.powers.iter()) {
                powers[u] = p;
            }
        }
        match best {
            Some(ref mut b) if sol.system_ee < b.system_ee + OMA_MWM_TOLERANCE => {
                if sol.system_ee > b.system_ee {
                    *b = sol;
                }
                b.iterations = alternation;
                break;
            }
            _ => best = Some(sol),
        }
    }
    best.expect("at least one alternation runs")
}

/// Deferred acceptance: users propose along their gain ranking; an
/// over-subscribed RB keeps the subset chosen by greedily adding the
/// candidate that maximizes the cluster EE.
pub fn dc_match(scenario: &Scenario, solver: PaSolver) -> SystemSolution {
    let num_users = scenario.num_users();
    let num_rbs = scenario.num_rbs();
    let prefs: Vec<Vec<usize>> = (0..num_users)
        .map(|u| {
            let mut order: Vec<usize> = (0..num_rbs).collect();
            order.sort_by(|&a, &b| scenario.gain(u, b).total_cmp(&scenario.gain(u, a)).then(a.cmp(&b)));
            order
        })
        .collect();
    let mut next = vec![0usize; num_users];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); num_rbs];
    let mut free: Vec<usize> = (0..num_users).collect();
    let mut forced = Vec::new();
    let mut scorer = ClusterScorer::new(scenario, solver);
    let mut rounds = 0;
    while !free.is_empty() {
        rounds += 1;
        let mut proposals: Vec<Vec<usize>> = vec![Vec::new(); num_rbs];
        let mut exhausted = Vec::new();
        for &u in &free {
            match prefs[u].get(next[u]) {
                Some(&m) => {
                    next[u] += 1;
                    proposals[m].push(u);
                }
                None => exhausted.push(u),
            }
        }
        free.clear();
        for u in exhausted {
            let m = (0..num_rbs)
                .find(|&m| held[m].len() < scenario.cluster_sizes[m])
                .expect("total capacity equals the number of users");
            held[m].push(u);
            forced.push(u);
        }
        for m in 0..num_rbs {
            if proposals[m].is_empty() {
                continue;
            }
            let mut candidates = std::mem::take(&mut held[m]);
            candidates.extend(&proposals[m]);
            let cap = scenario.cluster_sizes[m];
            if candidates.len() <= cap {
                held[m] = candidates;
                continue;
            }
            let kept = greedy_subset(scenario, &mut scorer, m, &candidates, cap);
            free.extend(candidates.iter().filter(|u| !kept.contains(u)));
            held[m] = kept;
        }
        free.sort_unstable();
    }
    let mut assignment = vec![0; num_users];
    for (m, list) in held.iter().enumerate() {
        for &u in list {
            assignment[u] = m;
        }
    }
    let matching =
        Matching::from_assignment(assignment, &scenario.cluster_sizes).expect("RBs are filled");
    let mut sol = system_ee(scenario, &matching, solver);
    sol.iterations = rounds;
    sol.forced_users = forced;
    sol
}

/// Adds, one at a time, the candidate giving the highest cluster EE; ties go
/// to the higher gain, then the lower index.
fn greedy_subset(
    scenario: &Scenario,
    scorer: &mut ClusterScorer<'_>,
    rb: usize,
    candidates: &[usize],
    cap: usize,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(cap);
    while chosen.len() < cap {
        let mut best: Option<(usize, f64)> = None;
        for &c in candidates.iter().filter(|c| !chosen.contains(c)) {
            let mut trial = chosen.clone();
            trial.push(c);
            let ee = scorer.ee(rb, &trial);
            let better = match best {
                None => true,
                Some((b, bee)) => {
                    ee > bee
                        || (ee == bee
                            && (scenario.gain(c, rb), std::cmp::Reverse(c))
                                > (scenario.gain(b, rb), std::cmp::Reverse(b)))
                }
            };
            if better {
                best = Some((c, ee));
            }
        }
        chosen.push(best.expect("enough candidates").0);
    }
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::tests::scenario;

    fn enumerate(sizes: &[usize], n: usize) -> Vec<Vec<usize>> {
        fn go(sizes: &mut Vec<usize>, cur: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for m in 0..sizes.len() {
                if sizes[m] > 0 {
                    sizes[m] -= 1;
                    cur.push(m);
                    go(sizes, cur, n, out);
                    cur.pop();
                    sizes[m] += 1;
                }
            }
        }
        let mut out = Vec::new();
        go(&mut sizes.to_vec(), &mut Vec::new(), n, &mut out);
        out
    }

    fn four_by_two() -> Scenario {
        scenario(
            vec![
                vec![0.9, 2.1],
                vec![1.7, 0.4],
                vec![0.3, 1.2],
                vec![2.5, 2.4],
            ],
            0.4,
        )
    }

    #[test]
    fn mwm_maximizes_total_gain() {
        let s = four_by_two();
        let m = mwm_gain(&s);
        let total = |a: &[usize]| a.iter().enumerate().map(|(u, &m)| s.gain(u, m)).sum::<f64>();
        let best = enumerate(&s.cluster_sizes, 4)
            .iter()
            .map(|a| total(a))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((total(m.assignment()) - best).abs() < 1e-12);
    }

    #[test]
    fn oma_mwm_is_valid_and_nondecreasing() {
        let s = four_by_two();
        let sol = oma_mwm(&s);
        assert!(sol.matching.is_valid(&s.cluster_sizes));
        assert!(sol.iterations >= 1 && sol.iterations <= OMA_MWM_MAX_ALTERNATIONS);
        // the first alternation is a lower bound on what is returned
        let powers = s.max_powers.clone();
        let first = assign_by_weight(&s, |u, m| {
            let share = s.cluster_sizes[m] as f64;
            (1.0 + share * powers[u] * s.gain(u, m) / s.noise_power).log2() / share
        });
        assert!(sol.system_ee >= system_ee(&s, &first, PaSolver::OmaMaxEe).system_ee);
    }

    #[test]
    fn dc_fills_every_rb() {
        let s = four_by_two();
        let sol = dc_match(&s, PaSolver::NomaMaxEe);
        assert!(sol.matching.is_valid(&s.cluster_sizes));
        assert!(sol.forced_users.is_empty());
        assert!(sol.iterations >= 1);
    }

    #[test]
    fn dc_without_contention_gives_first_choices() {
        let s = scenario(vec![vec![3.0, 1.0], vec![1.0, 3.0]], 0.2);
        let sol = dc_match(&s, PaSolver::NomaMaxEe);
        assert_eq!(sol.matching.assignment(), &[0, 1]);
        assert_eq!(sol.iterations, 1);
    }
}
