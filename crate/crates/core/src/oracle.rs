//! Brute-force references: a refining grid search over cluster powers and
//! exhaustive enumeration of matchings. Both are meant for small instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::cluster::{ee_value, is_feasible_point, min_powers, ClusterInstance, EeSolution, PowerVector};
use crate::matching::{system_ee, ClusterScorer, Matching, PaSolver, SystemSolution};
use crate::{Error, Result};

pub const DEFAULT_ENUMERATION_BUDGET: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
    /// Minimum number of refinement rounds.
    pub refinement_rounds: usize,
    /// Each round's box is this fraction of the previous one, centered on
    /// the incumbent.
    pub shrink_factor: f64,
    /// Refinement continues until, on every axis, the grid spacing is at most
    /// this fraction of both the smallest upper bound and the incumbent's
    /// coordinate (the latter floored at `1e-8` of the axis' upper bound).
    pub final_spacing: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_axis: 32,
            refinement_rounds: 4,
            shrink_factor: 0.25,
            final_spacing: 1e-4,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.points_per_axis < 8 || !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 8 points per axis and a shrink factor in (0, 1): {self:?}"
            )));
        }
        if !(self.final_spacing > 0.0) {
            return Err(Error::InvalidConfig("final spacing must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a grid search: the best feasible point and how many points were
/// scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub solution: EeSolution,
    pub evaluations: u64,
    pub rounds: usize,
}

/// Smallest box containing every feasible power vector: each user's power
/// lies between its minimum (later users at their minima) and the largest
/// value the earlier users' QoS can absorb when they transmit at full power
/// and later users sit at their minima. `None` when the QoS is infeasible.
pub fn feasible_box(instance: &ClusterInstance) -> Option<(Vec<f64>, Vec<f64>)> {
    let report = min_powers(instance);
    if !report.is_feasible() {
        return None;
    }
    let lo = report.powers.to_vec();
    let (h, sigma) = (instance.gains(), instance.noise_power());
    let targets: Vec<f64> = instance.min_rates().iter().map(|r| r.exp2() - 1.0).collect();
    let hi = (0..instance.len())
        .map(|l| {
            let later: f64 = (l + 1..instance.len()).map(|k| lo[k] * h[k]).sum::<f64>() + sigma;
            let mut cap = instance.max_powers()[l];
            // interference user j sees from l and the users between them,
            // each of which must itself reach its SINR target
            for j in 0..l {
                if targets[j] == 0.0 {
                    continue;
                }
                let budget = instance.max_powers()[j] * h[j] / targets[j] - later;
                let between: f64 = (j + 1..l).map(|i| 1.0 + targets[i]).product();
                cap = cap.min(budget / between / h[l]);
            }
            cap.max(lo[l])
        })
        .collect();
    Some((lo, hi))
}

/// Maximizes the NOMA cluster EE over a refining grid on the feasible box.
pub fn grid_search_ee(instance: &ClusterInstance, spec: &GridSpec) -> Result<GridResult> {
    let objective = |p: &[f64]| {
        is_feasible_point(instance, p)
            .then(|| ee_value(instance, p).ok())
            .flatten()
    };
    let Some((lo, hi)) = feasible_box(instance) else {
        return Ok(GridResult {
            solution: EeSolution::infeasible(instance.len()),
            evaluations: 0,
            rounds: 0,
        });
    };
    let seed = lo.clone();
    let (powers, evaluations, rounds) = grid_search_by(&lo, &hi, Some(seed), spec, objective)?;
    let solution = match powers {
        Some(p) => EeSolution::evaluate(instance, PowerVector::new(p))?,
        None => EeSolution::infeasible(instance.len()),
    };
    Ok(GridResult {
        solution,
        evaluations,
        rounds,
    })
}

/// Generic refining grid maximizer over the box `[lower, upper]`. `objective`
/// returns `None` at infeasible points. An optional feasible `seed` is the
/// initial incumbent. Returns the best point, the number of evaluations and
/// rounds.
pub fn grid_search_by<F>(
    lower: &[f64],
    upper: &[f64],
    seed: Option<Vec<f64>>,
    spec: &GridSpec,
    objective: F,
) -> Result<(Option<Vec<f64>>, u64, usize)>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    spec.validate()?;
    if lower.len() != upper.len() || lower.iter().zip(upper).any(|(a, b)| !(a <= b)) {
        return Err(Error::InvalidConfig(format!(
            "bad search box {lower:?} .. {upper:?}"
        )));
    }
    let dim = upper.len();
    let n = spec.points_per_axis;
    let total = (n as u64)
        .checked_pow(dim as u32)
        .filter(|t| *t <= 1 << 26)
        .ok_or_else(|| Error::InvalidConfig(format!("{n}^{dim} grid points is too many")))?;
    let mut best: Option<(Vec<f64>, f64)> =
        seed.and_then(|p| objective(&p).map(|v| (p, v)));
    let smallest = upper.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    let mut evaluations = 0;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let point = |idx: u64| -> Vec<f64> {
            let mut rest = idx;
            (0..dim)
                .map(|d| {
                    let i = (rest % n as u64) as f64;
                    rest /= n as u64;
                    lo[d] + (hi[d] - lo[d]) * i / (n - 1) as f64
                })
                .collect()
        };
        let round_best = (0..total)
            .into_par_iter()
            .filter_map(|idx| {
                let p = point(idx);
                objective(&p).map(|v| (idx, v))
            })
            .reduce_with(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
        evaluations += total;
        if let Some((idx, v)) = round_best {
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((point(idx), v));
            }
        }
        let Some((center, _)) = &best else { break };
        let fine = (0..dim).all(|d| {
            let spacing = (hi[d] - lo[d]) / (n - 1) as f64;
            let scale = center[d].max(1e-8 * upper[d]).min(smallest);
            spacing <= spec.final_spacing * scale
        });
        if rounds >= spec.refinement_rounds && fine {
            break;
        }
        for d in 0..dim {
            let half = 0.5 * spec.shrink_factor * (hi[d] - lo[d]);
            let (mut a, mut b) = (center[d] - half, center[d] + half);
            if a < lower[d] {
                b = (b + lower[d] - a).min(upper[d]);
                a = lower[d];
            }
            if b > upper[d] {
                a = (a - (b - upper[d])).max(lower[d]);
                b = upper[d];
            }
            lo[d] = a;
            hi[d] = b;
        }
    }
    Ok((best.map(|(p, _)| p), evaluations, rounds))
}

/// Number of distinct matchings: `U! / prod L_m!`.
pub fn matching_count(cluster_sizes: &[usize]) -> u128 {
    let mut count: u128 = 1;
    let mut placed: u128 = 0;
    for &l in cluster_sizes {
        // multiply by C(placed + l, l) incrementally
        for i in 1..=l as u128 {
            placed += 1;
            count = count.saturating_mul(placed) / i;
        }
    }
    count
}

/// Best matching by full enumeration, refusing when there are more than
/// `budget` candidates.
pub fn exhaustive_matching(
    scenario: &Scenario,
    solver: PaSolver,
    budget: u128,
) -> Result<SystemSolution> {
    let count = matching_count(&scenario.cluster_sizes);
    if count > budget {
        return Err(Error::BudgetExceeded { count, budget });
    }
    let mut scorer = ClusterScorer::new(scenario, solver);
    let mut remaining = scenario.cluster_sizes.clone();
    let mut current = Vec::with_capacity(scenario.num_users());
    let mut best: Option<(Vec<usize>, f64)> = None;
    enumerate(
        scenario,
        &mut scorer,
        &mut remaining,
        &mut current,
        &mut best,
    );
    let (assignment, _) = best.expect("at least one matching exists");
    let matching = Matching::from_assignment(assignment, &scenario.cluster_sizes)?;
    let mut solution = system_ee(scenario, &matching, solver);
    solution.iterations = count as usize;
    Ok(solution)
}

fn enumerate(
    scenario: &Scenario,
    scorer: &mut ClusterScorer<'_>,
    remaining: &mut [usize],
    current: &mut Vec<usize>,
    best: &mut Option<(Vec<usize>, f64)>,
) {
    if current.len() == scenario.num_users() {
        let mut members = vec![Vec::new(); remaining.len()];
        for (u, &m) in current.iter().enumerate() {
            members[m].push(u);
        }
        let total: f64 = members
            .iter()
            .enumerate()
            .map(|(m, list)| scorer.ee(m, list))
            .sum();
        if best.as_ref().is_none_or(|(_, b)| total > *b) {
            *best = Some((current.clone(), total));
        }
        return;
    }
    for m in 0..remaining.len() {
        if remaining[m] > 0 {
            remaining[m] -= 1;
            current.push(m);
            enumerate(scenario, scorer, remaining, current, best);
            current.pop();
            remaining[m] += 1;
        }
    }
}
