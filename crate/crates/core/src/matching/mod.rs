//! User-to-RB association.
//!
//! A [`Matching`] puts every user on exactly one RB and exactly `L_m` users
//! on RB `m`. Given a matching, clusters are independent, so the system EE is
//! the sum of the per-cluster optima. [`swap_match`] improves a greedy
//! max-gain start by pairwise swaps; the baselines are in [`baselines`].

mod assignment;
pub mod baselines;
mod swap;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::cluster::{maximize_ee, maximize_se, ClusterInstance, EeSolution};
use crate::oma::oma_maximize_ee;
use crate::{Error, Result};

pub use assignment::max_weight_assignment;
pub use baselines::{dc_match, mwm_gain, oma_mwm};
pub use swap::{find_improving_swap, swap_match, swap_match_from, SwapOptions, SWAP_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Matching {
    /// `assignment[u]` is the RB of user `u`; RB `m` must receive exactly
    /// `cluster_sizes[m]` users.
    pub fn from_assignment(assignment: Vec<usize>, cluster_sizes: &[usize]) -> Result<Self> {
        let mut members = vec![Vec::new(); cluster_sizes.len()];
        for (u, &m) in assignment.iter().enumerate() {
            let slot = members.get_mut(m).ok_or_else(|| {
                Error::InvalidInstance(format!("user {u} assigned to unknown RB {m}"))
            })?;
            slot.push(u);
        }
        for (m, (list, &size)) in members.iter().zip(cluster_sizes).enumerate() {
            if list.len() != size {
                return Err(Error::InvalidInstance(format!(
                    "RB {m} holds {} users, expected {size}",
                    list.len()
                )));
            }
        }
        Ok(Self {
            assignment,
            members,
        })
    }

    pub fn rb_of(&self, user: usize) -> usize {
        self.assignment[user]
    }

    /// Users on RB `rb`, in ascending user index.
    pub fn members(&self, rb: usize) -> &[usize] {
        &self.members[rb]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_users(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_rbs(&self) -> usize {
        self.members.len()
    }

    /// Exchanges the RBs of two users.
    pub fn swap(&mut self, a: usize, b: usize) {
        let (ma, mb) = (self.assignment[a], self.assignment[b]);
        if ma == mb {
            return;
        }
        self.assignment.swap(a, b);
        for (m, out, inn) in [(ma, a, b), (mb, b, a)] {
            let list = &mut self.members[m];
            list.retain(|&u| u != out);
            list.push(inn);
            list.sort_unstable();
        }
    }

    /// Every user on one RB, RB sizes as required, and the two views agree.
    pub fn is_valid(&self, cluster_sizes: &[usize]) -> bool {
        self.members.len() == cluster_sizes.len()
            && self
                .members
                .iter()
                .zip(cluster_sizes)
                .all(|(list, &l)| list.len() == l)
            && self
                .members
                .iter()
                .enumerate()
                .all(|(m, list)| list.iter().all(|&u| self.assignment.get(u) == Some(&m)))
            && self.members.iter().map(Vec::len).sum::<usize>() == self.assignment.len()
    }
}

/// Per-cluster power allocation used to score a matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaSolver {
    /// NOMA cluster, EE-optimal powers.
    NomaMaxEe,
    /// OMA cluster, EE-optimal powers.
    OmaMaxEe,
    /// NOMA cluster, sum-rate-optimal powers.
    NomaMaxSe,
}

impl PaSolver {
    pub fn solve(&self, instance: &ClusterInstance) -> EeSolution {
        match self {
            PaSolver::NomaMaxEe => maximize_ee(instance),
            PaSolver::OmaMaxEe => oma_maximize_ee(instance),
            PaSolver::NomaMaxSe => maximize_se(instance),
        }
    }
}

/// Cluster of `users` on RB `rb`, sorted by descending gain on that RB
/// (ties by user index). Returns the instance and the sorted user list.
pub fn cluster_instance(
    scenario: &Scenario,
    rb: usize,
    users: &[usize],
) -> Result<(ClusterInstance, Vec<usize>)> {
    let mut sorted = users.to_vec();
    sorted.sort_by(|&a, &b| {
        scenario
            .gain(b, rb)
            .total_cmp(&scenario.gain(a, rb))
            .then(a.cmp(&b))
    });
    let instance = ClusterInstance::new(
        sorted.iter().map(|&u| scenario.gain(u, rb)).collect(),
        sorted.iter().map(|&u| scenario.min_rates[u]).collect(),
        sorted.iter().map(|&u| scenario.max_powers[u]).collect(),
        scenario.circuit_power_per_user * users.len() as f64,
        scenario.noise_power,
    )?;
    Ok((instance, sorted))
}

/// Memoized cluster EEs keyed by RB and member set. Infeasible clusters
/// score 0.
pub(crate) struct ClusterScorer<'a> {
    scenario: &'a Scenario,
    solver: PaSolver,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl<'a> ClusterScorer<'a> {
    pub(crate) fn new(scenario: &'a Scenario, solver: PaSolver) -> Self {
        Self {
            scenario,
            solver,
            cache: HashMap::new(),
        }
    }

    pub(crate) fn ee(&mut self, rb: usize, users: &[usize]) -> f64 {
        let mut key = users.to_vec();
        key.sort_unstable();
        if let Some(&ee) = self.cache.get(&(rb, key.clone())) {
            return ee;
        }
        let ee = if users.is_empty() {
            0.0
        } else {
            let (instance, _) =
                cluster_instance(self.scenario, rb, &key).expect("scenario is validated");
            let sol = self.solver.solve(&instance);
            if sol.feasible {
                sol.ee
            } else {
                0.0
            }
        };
        self.cache.insert((rb, key), ee);
        ee
    }
}

/// One committed swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub pass: usize,
    pub user_a: usize,
    pub user_b: usize,
    pub ee_before: f64,
    pub ee_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub rb: usize,
    /// Cluster members in decoding order (descending gain on the RB);
    /// `solution.powers[i]` belongs to `users[i]`.
    pub users: Vec<usize>,
    pub solution: EeSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSolution {
    pub matching: Matching,
    pub clusters: Vec<ClusterResult>,
    /// Sum of the feasible clusters' EEs.
    pub system_ee: f64,
    pub swap_count: usize,
    pub swap_trace: Vec<SwapRecord>,
    /// Passes, alternations, or proposal rounds, depending on the scheme.
    pub iterations: usize,
    /// RBs whose cluster has no feasible power allocation.
    pub infeasible_rbs: Vec<usize>,
    /// Users placed without being accepted by any RB (deferred acceptance).
    pub forced_users: Vec<usize>,
}

impl SystemSolution {
    /// Transmit power of every user, indexed by user.
    pub fn user_powers(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.matching.num_users()];
        for c in &self.clusters {
            for (u, power) in c.users.iter().zip(c.solution.powers.iter()) {
                p[*u] = *power;
            }
        }
        p
    }

    pub fn csv_header() -> Vec<&'static str> {
        vec![
            "row", "rb", "users", "ee", "sum_rate", "total_power_w", "powers_w", "feasible",
        ]
    }

    /// One row per cluster plus a `total` row.
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let join = |it: &mut dyn Iterator<Item = String>| it.collect::<Vec<_>>().join(";");
        let mut rows: Vec<Vec<String>> = self
            .clusters
            .iter()
            .map(|c| {
                vec![
                    "cluster".into(),
                    c.rb.to_string(),
                    join(&mut c.users.iter().map(|u| u.to_string())),
                    c.solution.ee.to_string(),
                    c.solution.sum_rate.to_string(),
                    c.solution.total_power.to_string(),
                    join(&mut c.solution.powers.iter().map(|p| p.to_string())),
                    c.solution.feasible.to_string(),
                ]
            })
            .collect();
        let feasible = self.infeasible_rbs.is_empty();
        rows.push(vec![
            "total".into(),
            String::new(),
            String::new(),
            self.system_ee.to_string(),
            self.clusters
                .iter()
                .map(|c| c.solution.sum_rate)
                .sum::<f64>()
                .to_string(),
            self.clusters
                .iter()
                .map(|c| c.solution.total_power)
                .sum::<f64>()
                .to_string(),
            String::new(),
            feasible.to_string(),
        ]);
        rows
    }

    pub fn swap_trace_header() -> Vec<&'static str> {
        vec!["pass", "u", "k", "ee_before", "ee_after"]
    }

    pub fn swap_trace_records(&self) -> Vec<Vec<String>> {
        self.swap_trace
            .iter()
            .map(|s| {
                vec![
                    s.pass.to_string(),
                    s.user_a.to_string(),
                    s.user_b.to_string(),
                    s.ee_before.to_string(),
                    s.ee_after.to_string(),
                ]
            })
            .collect()
    }
}

/// Solves every cluster of `matching` and sums the EEs; infeasible clusters
/// contribute 0 and are listed in `infeasible_rbs`.
pub fn system_ee(scenario: &Scenario, matching: &Matching, solver: PaSolver) -> SystemSolution {
    let mut clusters = Vec::with_capacity(matching.num_rbs());
    let mut infeasible_rbs = Vec::new();
    let mut total = 0.0;
    for rb in 0..matching.num_rbs() {
        let (instance, users) =
            cluster_instance(scenario, rb, matching.members(rb)).expect("scenario is validated");
        let solution = solver.solve(&instance);
        if solution.feasible {
            total += solution.ee;
        } else {
            infeasible_rbs.push(rb);
        }
        clusters.push(ClusterResult {
            rb,
            users,
            solution,
        });
    }
    SystemSolution {
        matching: matching.clone(),
        clusters,
        system_ee: total,
        swap_count: 0,
        swap_trace: Vec::new(),
        iterations: 0,
        infeasible_rbs,
        forced_users: Vec::new(),
    }
}

/// Greedy max-gain start: in each of `ceil(U/M)` rounds, repeatedly give the
/// best remaining (RB, user) pair to each other, one user per RB per round.
/// Round `k` only offers RBs whose size is at least `k`.
pub fn greedy_init(scenario: &Scenario) -> Matching {
    let num_users = scenario.num_users();
    let num_rbs = scenario.num_rbs();
    let rounds = num_users.div_ceil(num_rbs);
    let mut assignment = vec![usize::MAX; num_users];
    let mut free: Vec<usize> = (0..num_users).collect();
    for round in 1..=rounds {
        let mut open: Vec<usize> = (0..num_rbs)
            .filter(|&m| scenario.cluster_sizes[m] >= round)
            .collect();
        while !open.is_empty() && !free.is_empty() {
            let mut best: Option<(usize, usize, f64)> = None;
            for (oi, &m) in open.iter().enumerate() {
                for (ui, &u) in free.iter().enumerate() {
                    let g = scenario.gain(u, m);
                    if best.is_none_or(|(_, _, bg)| g > bg) {
                        best = Some((oi, ui, g));
                    }
                }
            }
            let (oi, ui, _) = best.expect("both sets are non-empty");
            assignment[free[ui]] = open[oi];
            open.remove(oi);
            free.remove(ui);
        }
    }
    Matching::from_assignment(assignment, &scenario.cluster_sizes)
        .expect("round capacities match cluster sizes")
}

/// Uniformly random matching with the scenario's cluster sizes.
pub fn random_match(scenario: &Scenario, seed: u64) -> Matching {
    let mut slots: Vec<usize> = scenario
        .cluster_sizes
        .iter()
        .enumerate()
        .flat_map(|(m, &l)| std::iter::repeat_n(m, l))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    slots.shuffle(&mut rng);
    Matching::from_assignment(slots, &scenario.cluster_sizes).expect("slots match sizes")
}
