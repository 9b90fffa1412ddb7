//! Power allocation inside one NOMA cluster (a single RB).
//!
//! Users are stored in decoding order: user 0 is decoded first and sees
//! interference from every later user, the last user sees only noise. For
//! the default order users are sorted by descending channel gain.
//!
//! With received powers `x_l = P_l |h_l|^2`, the cluster sum rate collapses to
//! `log2(1 + sum(x) / noise)` whatever the order, and each QoS constraint is
//! linear: `x_l >= (2^R_l - 1) (sum_{k>l} x_k + noise)`. The EE objective is
//! therefore a concave-over-affine ratio, maximized here by Dinkelbach's
//! method with a coordinate-update solver for the subtractive subproblem.

use std::f64::consts::LN_2;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dinkelbach stops once the subtractive objective drops to this (bits).
pub const DINKELBACH_EPSILON: f64 = 1e-8;
/// Inner sweeps stop once no power moves by this much (watts).
pub const INNER_TOLERANCE_W: f64 = 1e-9;
pub const MAX_OUTER_ITERATIONS: usize = 100;
pub const MAX_INNER_SWEEPS: usize = 10_000;
/// Slack used when checking QoS constraints on computed points.
pub const RATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct ClusterInstance {
    gains: Vec<f64>,
    min_rates: Vec<f64>,
    max_powers: Vec<f64>,
    circuit_power: f64,
    noise_power: f64,
}

#[derive(Deserialize)]
struct RawInstance {
    gains: Vec<f64>,
    min_rates: Vec<f64>,
    max_powers: Vec<f64>,
    circuit_power: f64,
    noise_power: f64,
}

impl TryFrom<RawInstance> for ClusterInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        ClusterInstance::new(
            raw.gains,
            raw.min_rates,
            raw.max_powers,
            raw.circuit_power,
            raw.noise_power,
        )
    }
}

impl ClusterInstance {
    /// Gains must be sorted in non-increasing order (the default decoding
    /// order). Use [`ClusterInstance::with_decode_order`] for other orders.
    pub fn new(
        gains: Vec<f64>,
        min_rates: Vec<f64>,
        max_powers: Vec<f64>,
        circuit_power: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let inst = Self {
            gains,
            min_rates,
            max_powers,
            circuit_power,
            noise_power,
        };
        inst.validate()?;
        if inst.gains.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInstance(
                "gains must be sorted in non-increasing order".into(),
            ));
        }
        Ok(inst)
    }

    /// Every user gets the same QoS target and power cap.
    pub fn uniform(
        gains: Vec<f64>,
        min_rate: f64,
        max_power: f64,
        circuit_power: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let n = gains.len();
        Self::new(
            gains,
            vec![min_rate; n],
            vec![max_power; n],
            circuit_power,
            noise_power,
        )
    }

    fn validate(&self) -> Result<()> {
        let n = self.gains.len();
        if n == 0 {
            return Err(Error::InvalidInstance("a cluster needs at least one user".into()));
        }
        for v in [&self.min_rates, &self.max_powers] {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if self.gains.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidInstance("gains must be positive".into()));
        }
        if self.min_rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInstance("minimum rates must be >= 0".into()));
        }
        if self.max_powers.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInstance("power caps must be positive".into()));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::InvalidInstance("noise power must be positive".into()));
        }
        if !(self.circuit_power >= 0.0) {
            return Err(Error::InvalidInstance("circuit power must be >= 0".into()));
        }
        Ok(())
    }

    /// Re-orders the users so that `order[i]` is decoded `i`-th. Solutions
    /// of the returned instance are indexed in the new order.
    pub fn with_decode_order(&self, order: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: order.len(),
            });
        }
        for &i in order {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidInstance(format!(
                    "{order:?} is not a permutation of 0..{n}"
                )));
            }
        }
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Ok(Self {
            gains: pick(&self.gains),
            min_rates: pick(&self.min_rates),
            max_powers: pick(&self.max_powers),
            circuit_power: self.circuit_power,
            noise_power: self.noise_power,
        })
    }

    pub fn with_max_powers(&self, max_power: f64) -> Result<Self> {
        let inst = Self {
            max_powers: vec![max_power; self.len()],
            ..self.clone()
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn min_rates(&self) -> &[f64] {
        &self.min_rates
    }

    pub fn max_powers(&self) -> &[f64] {
        &self.max_powers
    }

    pub fn circuit_power(&self) -> f64 {
        self.circuit_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// `2^R_l - 1`, the SINR user `l` must reach.
    pub fn sinr_target(&self, l: usize) -> f64 {
        self.min_rates[l].exp2() - 1.0
    }

    fn check_powers(&self, powers: &[f64]) -> Result<()> {
        if powers.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: powers.len(),
            });
        }
        if powers.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Domain(format!("powers must be non-negative: {powers:?}")));
        }
        Ok(())
    }

    fn received(&self, powers: &[f64]) -> Vec<f64> {
        powers.iter().zip(&self.gains).map(|(p, g)| p * g).collect()
    }
}

/// Transmit powers in watts, one per user of a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(powers: Vec<f64>) -> Self {
        Self(powers)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// True when `0 <= P_l <= P_l^max` for every user.
    pub fn within_caps(&self, instance: &ClusterInstance) -> bool {
        self.0.len() == instance.len()
            && self
                .0
                .iter()
                .zip(instance.max_powers())
                .all(|(p, m)| *p >= 0.0 && *p <= *m)
    }
}

impl Deref for PowerVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for PowerVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EeSolution {
    pub powers: PowerVector,
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub total_power: f64,
    /// bit/s/Hz per watt.
    pub ee: f64,
    pub dinkelbach_iterations: usize,
    pub inner_iterations: usize,
    pub feasible: bool,
    /// False when an iteration cap was hit before the stopping rule fired.
    pub converged: bool,
}

impl EeSolution {
    pub fn infeasible(num_users: usize) -> Self {
        Self {
            powers: PowerVector(vec![0.0; num_users]),
            rates: vec![0.0; num_users],
            sum_rate: 0.0,
            total_power: 0.0,
            ee: 0.0,
            dinkelbach_iterations: 0,
            inner_iterations: 0,
            feasible: false,
            converged: true,
        }
    }

    /// Evaluates NOMA rates and EE at `powers`; `feasible` reflects whether
    /// every QoS constraint holds.
    pub fn evaluate(instance: &ClusterInstance, powers: PowerVector) -> Result<Self> {
        let rates = per_user_rates(instance, &powers)?;
        let sum_rate = sum_rate(instance, &powers)?;
        Ok(Self::from_parts(instance, powers, rates, sum_rate))
    }

    pub(crate) fn from_parts(
        instance: &ClusterInstance,
        powers: PowerVector,
        rates: Vec<f64>,
        sum_rate: f64,
    ) -> Self {
        let total_power = powers.total();
        let denom = instance.circuit_power() + total_power;
        let ee = if denom > 0.0 { sum_rate / denom } else { 0.0 };
        let feasible = rates
            .iter()
            .zip(instance.min_rates())
            .all(|(r, m)| *r >= m - RATE_TOLERANCE);
        Self {
            powers,
            rates,
            sum_rate,
            total_power,
            ee,
            dinkelbach_iterations: 0,
            inner_iterations: 0,
            feasible,
            converged: true,
        }
    }

    /// CSV header for clusters of `num_users` users.
    pub fn csv_header(num_users: usize) -> Vec<String> {
        let mut h: Vec<String> = ["ee", "sum_rate", "total_power_w"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((1..=num_users).map(|l| format!("p{l}_w")));
        h.extend(
            ["dinkelbach_iterations", "inner_iterations", "feasible"]
                .iter()
                .map(|s| s.to_string()),
        );
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let mut r = vec![
            self.ee.to_string(),
            self.sum_rate.to_string(),
            self.total_power.to_string(),
        ];
        r.extend(self.powers.iter().map(|p| p.to_string()));
        r.push(self.dinkelbach_iterations.to_string());
        r.push(self.inner_iterations.to_string());
        r.push(self.feasible.to_string());
        r
    }
}

/// Per-user NOMA rates (bit/s/Hz) under the instance's decoding order.
pub fn per_user_rates(instance: &ClusterInstance, powers: &[f64]) -> Result<Vec<f64>> {
    instance.check_powers(powers)?;
    let rx = instance.received(powers);
    let mut interference = 0.0;
    let mut rates = vec![0.0; rx.len()];
    for l in (0..rx.len()).rev() {
        rates[l] = (1.0 + rx[l] / (interference + instance.noise_power)).log2();
        interference += rx[l];
    }
    Ok(rates)
}

pub fn sum_rate(instance: &ClusterInstance, powers: &[f64]) -> Result<f64> {
    instance.check_powers(powers)?;
    let rx: f64 = instance.received(powers).iter().sum();
    Ok((1.0 + rx / instance.noise_power).log2())
}

pub fn ee_value(instance: &ClusterInstance, powers: &[f64]) -> Result<f64> {
    let rate = sum_rate(instance, powers)?;
    let denom = instance.circuit_power + powers.iter().sum::<f64>();
    if !(denom > 0.0) {
        return Err(Error::Domain(
            "EE is undefined with zero circuit and transmit power".into(),
        ));
    }
    Ok(rate / denom)
}

/// Minimum powers meeting every QoS target with all later users also at
/// their minimum, and the first user (if any) whose cap is too small.
#[derive(Debug, Clone, PartialEq)]
pub struct MinPowerReport {
    pub powers: PowerVector,
    /// Zero-based index of the first user with `P_min > P_max`.
    pub first_violation: Option<usize>,
}

impl MinPowerReport {
    pub fn is_feasible(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn into_result(self, instance: &ClusterInstance) -> Result<PowerVector> {
        match self.first_violation {
            None => Ok(self.powers),
            Some(user) => Err(Error::Infeasible {
                user,
                required: self.powers[user],
                cap: instance.max_powers[user],
            }),
        }
    }
}

pub fn min_powers(instance: &ClusterInstance) -> MinPowerReport {
    let n = instance.len();
    let mut powers = vec![0.0; n];
    // 2^(sum of later users' targets) = (interference + noise) / noise
    let mut growth = 1.0;
    for l in (0..n).rev() {
        powers[l] = growth * instance.sinr_target(l) * instance.noise_power / instance.gains[l];
        growth *= instance.min_rates[l].exp2();
    }
    let first_violation = (0..n).find(|&l| powers[l] > instance.max_powers[l]);
    MinPowerReport {
        powers: PowerVector(powers),
        first_violation,
    }
}

/// True when every QoS constraint holds at `powers` (rates within
/// [`RATE_TOLERANCE`]) and every power lies in `[0, P_max]`.
pub fn is_feasible_point(instance: &ClusterInstance, powers: &[f64]) -> bool {
    let caps = powers
        .iter()
        .zip(&instance.max_powers)
        .all(|(p, m)| *p >= 0.0 && *p <= m * (1.0 + 1e-12));
    caps && per_user_rates(instance, powers).is_ok_and(|rates| {
        rates
            .iter()
            .zip(&instance.min_rates)
            .all(|(r, m)| *r >= m - RATE_TOLERANCE)
    })
}

/// Gradient of the cluster EE with respect to each transmit power.
pub fn ee_gradient(instance: &ClusterInstance, powers: &[f64]) -> Result<Vec<f64>> {
    instance.check_powers(powers)?;
    let rx: f64 = instance.received(powers).iter().sum();
    let signal = instance.noise_power + rx;
    let denom = instance.circuit_power + powers.iter().sum::<f64>();
    if !(denom > 0.0) {
        return Err(Error::Domain(
            "EE gradient is undefined with zero circuit and transmit power".into(),
        ));
    }
    let rate = (signal / instance.noise_power).log2();
    let penalty = rate / (denom * denom);
    Ok(instance
        .gains
        .iter()
        .map(|g| g / (signal * denom * LN_2) - penalty)
        .collect())
}

/// How the coordinate solver bounds each user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMode {
    /// Users are swept from the last decoded to the first and each is clamped
    /// to the interval that keeps its own QoS and every earlier user's QoS
    /// satisfiable given the current powers. Every sweep ends feasible.
    #[default]
    DynamicBounds,
    /// Users are swept first to last and clamped to the static box
    /// `[P_min, P_max]`. Intermediate and final points may violate QoS once
    /// the coupling between users matters.
    StaticBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub powers: PowerVector,
    pub sweeps: usize,
    pub converged: bool,
}

/// `[lb, ub]` for user `l` with every other power held at `rx`.
fn dynamic_interval(instance: &ClusterInstance, rx: &[f64], l: usize) -> (f64, f64) {
    let below = rx[l + 1..].iter().sum::<f64>() + instance.noise_power;
    let gain = instance.gains[l];
    let lb = instance.sinr_target(l) * below / gain;

    // An earlier user j at full power tolerates at most x_j^max / c_j of
    // interference; users between j and l must also keep their own QoS,
    // which multiplies the interference they pass on by (1 + c_i).
    let mut ub_rx = instance.max_powers[l] * gain;
    let mut chain = 1.0;
    for j in (0..l).rev() {
        let c = instance.sinr_target(j);
        if c > 0.0 {
            let cap = instance.max_powers[j] * instance.gains[j] / (c * chain) - below;
            ub_rx = ub_rx.min(cap);
        }
        chain *= 1.0 + c;
    }
    (lb, ub_rx / gain)
}

/// Maximizes `log2(1 + sum(x)/noise) - beta (P_f + sum(P))` over the
/// feasible set by coordinate updates started from the minimum powers.
pub fn solve_inner(instance: &ClusterInstance, beta: f64, mode: InnerMode) -> Result<InnerSolution> {
    solve_inner_with(instance, beta, mode, INNER_TOLERANCE_W, MAX_INNER_SWEEPS)
}

pub fn solve_inner_with(
    instance: &ClusterInstance,
    beta: f64,
    mode: InnerMode,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<InnerSolution> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
    }
    let static_min = min_powers(instance).into_result(instance)?;
    let n = instance.len();
    let mut powers = static_min.clone().into_inner();
    let mut rx = instance.received(&powers);
    let water = if beta > 0.0 {
        1.0 / (beta * LN_2)
    } else {
        f64::INFINITY
    };

    let order: Vec<usize> = match mode {
        InnerMode::DynamicBounds => (0..n).rev().collect(),
        InnerMode::StaticBox => (0..n).collect(),
    };

    for sweep in 1..=max_sweeps {
        let mut moved: f64 = 0.0;
        for &l in &order {
            let others = rx.iter().sum::<f64>() - rx[l];
            let stationary = water - (others + instance.noise_power) / instance.gains[l];
            let (lb, ub) = match mode {
                InnerMode::DynamicBounds => dynamic_interval(instance, &rx, l),
                InnerMode::StaticBox => (static_min[l], instance.max_powers[l]),
            };
            let next = stationary.min(ub).max(lb);
            moved = moved.max((next - powers[l]).abs());
            powers[l] = next;
            rx[l] = next * instance.gains[l];
        }
        if moved < tolerance {
            return Ok(InnerSolution {
                powers: PowerVector(powers),
                sweeps: sweep,
                converged: true,
            });
        }
    }
    Ok(InnerSolution {
        powers: PowerVector(powers),
        sweeps: max_sweeps,
        converged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachOptions {
    pub epsilon: f64,
    pub max_outer: usize,
    pub inner_tolerance: f64,
    pub max_inner_sweeps: usize,
    pub mode: InnerMode,
}

impl Default for DinkelbachOptions {
    fn default() -> Self {
        Self {
            epsilon: DINKELBACH_EPSILON,
            max_outer: MAX_OUTER_ITERATIONS,
            inner_tolerance: INNER_TOLERANCE_W,
            max_inner_sweeps: MAX_INNER_SWEEPS,
            mode: InnerMode::DynamicBounds,
        }
    }
}

/// One outer iteration: the `beta` the subproblem was solved with and the
/// subtractive objective reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachStep {
    pub beta: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DinkelbachRun {
    pub solution: EeSolution,
    pub steps: Vec<DinkelbachStep>,
}

/// EE-optimal powers for a cluster; `feasible == false` when no power
/// allocation meets every QoS target.
pub fn maximize_ee(instance: &ClusterInstance) -> EeSolution {
    maximize_ee_with(instance, &DinkelbachOptions::default()).solution
}

pub fn maximize_ee_with(instance: &ClusterInstance, options: &DinkelbachOptions) -> DinkelbachRun {
    if !min_powers(instance).is_feasible() {
        return DinkelbachRun {
            solution: EeSolution::infeasible(instance.len()),
            steps: Vec::new(),
        };
    }
    let mut beta = 0.0;
    let mut steps = Vec::new();
    let mut inner_total = 0;
    let mut all_converged = true;
    loop {
        let inner = solve_inner_with(
            instance,
            beta,
            options.mode,
            options.inner_tolerance,
            options.max_inner_sweeps,
        )
        .expect("feasibility checked above");
        inner_total += inner.sweeps;
        all_converged &= inner.converged;

        let rate = sum_rate(instance, &inner.powers).expect("powers are valid");
        let denom = instance.circuit_power + inner.powers.total();
        let objective = rate - beta * denom;
        steps.push(DinkelbachStep { beta, objective });

        let done = objective <= options.epsilon || !(denom > 0.0);
        let capped = steps.len() >= options.max_outer;
        if done || capped {
            let rates = per_user_rates(instance, &inner.powers).expect("powers are valid");
            let mut solution = EeSolution::from_parts(instance, inner.powers, rates, rate);
            solution.dinkelbach_iterations = steps.len();
            solution.inner_iterations = inner_total;
            solution.converged = all_converged && done;
            return DinkelbachRun { solution, steps };
        }
        beta = rate / denom;
    }
}

/// Spectral-efficiency baseline: maximizes the received sum power.
///
/// User 0 transmits at full power; each later user then takes the largest
/// power its own cap and every earlier user's QoS allow, assuming the users
/// after it stay at their minimum, but never less than its own minimum.
pub fn maximize_se(instance: &ClusterInstance) -> EeSolution {
    let report = min_powers(instance);
    if !report.is_feasible() {
        return EeSolution::infeasible(instance.len());
    }
    let n = instance.len();
    let mut rx: Vec<f64> = report
        .powers
        .iter()
        .zip(&instance.gains)
        .map(|(p, g)| p * g)
        .collect();
    for l in 0..n {
        let mut best = instance.max_powers[l] * instance.gains[l];
        for j in 0..l {
            let c = instance.sinr_target(j);
            if c > 0.0 {
                let others: f64 = rx[j + 1..]
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| j + 1 + i != l)
                    .map(|(_, x)| x)
                    .sum();
                best = best.min(rx[j] / c - instance.noise_power - others);
            }
        }
        rx[l] = best.max(report.powers[l] * instance.gains[l]);
    }
    let powers = PowerVector(
        rx.iter()
            .zip(&instance.gains)
            .zip(&instance.max_powers)
            .map(|((x, g), m)| (x / g).min(*m))
            .collect(),
    );
    EeSolution::evaluate(instance, powers).expect("powers are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(gains: &[f64], rmin: f64, pmax: f64, pf: f64, noise: f64) -> ClusterInstance {
        ClusterInstance::uniform(gains.to_vec(), rmin, pmax, pf, noise).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn rejects_unsorted_and_bad_lengths() {
        assert!(ClusterInstance::uniform(vec![1.0, 2.0], 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(ClusterInstance::new(vec![1.0], vec![0.0, 0.0], vec![1.0], 0.0, 1.0).is_err());
        assert!(ClusterInstance::uniform(vec![1.0], 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ClusterInstance::uniform(vec![], 0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn rate_examples() {
        let i = inst(&[1.0], 0.0, 10.0, 1.0, 1.0);
        assert_eq!(per_user_rates(&i, &[0.0]).unwrap(), vec![0.0]);
        assert!(close(per_user_rates(&i, &[1.0]).unwrap()[0], 1.0, 1e-15));

        let i = inst(&[3.0, 1.0], 0.0, 10.0, 1.0, 1.0);
        let r = per_user_rates(&i, &[1.0, 1.0]).unwrap();
        assert!(close(r[0], 2.5f64.log2(), 1e-15));
        assert!(close(r[1], 1.0, 1e-15));
        assert!(close(sum_rate(&i, &[1.0, 1.0]).unwrap(), 5f64.log2(), 1e-15));
        assert_eq!(sum_rate(&i, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            per_user_rates(&i, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(per_user_rates(&i, &[-1.0, 0.0]).is_err());
    }

    #[test]
    fn ee_examples() {
        let i = inst(&[1.0], 0.0, 10.0, 2.0, 1.0);
        assert_eq!(ee_value(&i, &[0.0]).unwrap(), 0.0);
        // P|h|^2 = noise, P_f = P
        let i = inst(&[1.0], 0.0, 10.0, 1.0, 1.0);
        assert!(close(ee_value(&i, &[1.0]).unwrap(), 0.5, 1e-15));
        let i2 = inst(&[1.0], 0.0, 10.0, 2.0, 1.0);
        assert!(ee_value(&i2, &[2.0]).unwrap() != ee_value(&i, &[1.0]).unwrap());
        let z = inst(&[1.0], 0.0, 10.0, 0.0, 1.0);
        assert!(ee_value(&z, &[0.0]).is_err());
    }

    #[test]
    fn min_power_examples() {
        let i = inst(&[1.0], 0.0, 1.0, 0.0, 1.0);
        assert_eq!(min_powers(&i).powers.to_vec(), vec![0.0]);

        let i = inst(&[1.0, 1.0], 1.0, 10.0, 0.0, 1.0);
        let r = min_powers(&i);
        assert!(r.is_feasible());
        assert!(close(r.powers[0], 2.0, 1e-15));
        assert!(close(r.powers[1], 1.0, 1e-15));
        let rates = per_user_rates(&i, &r.powers).unwrap();
        assert!(rates.iter().all(|x| (x - 1.0).abs() < 1e-9));

        let i = ClusterInstance::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![10.0, 0.5], 0.0, 1.0)
            .unwrap();
        let r = min_powers(&i);
        assert_eq!(r.first_violation, Some(1));
        assert!(matches!(
            r.into_result(&i),
            Err(Error::Infeasible { user: 1, .. })
        ));
    }

    #[test]
    fn gradient_is_ordered_like_gains() {
        let i = inst(&[4.0, 2.0, 1.0], 0.5, 5.0, 0.5, 1.0);
        let g = ee_gradient(&i, &[1.0, 0.7, 0.3]).unwrap();
        assert!(g[0] >= g[1] && g[1] >= g[2]);
    }

    #[test]
    fn inner_limits() {
        let i = inst(&[2.0, 1.0, 0.5], 1.0, 10.0, 0.1, 0.1);
        let mins = min_powers(&i).powers;
        let s = solve_inner(&i, 1e12, InnerMode::DynamicBounds).unwrap();
        for (a, b) in s.powers.iter().zip(mins.iter()) {
            assert!((a - b).abs() < 1e-15);
        }

        let i = inst(&[2.0, 1.0, 0.5], 0.0, 3.0, 0.1, 0.1);
        let s = solve_inner(&i, 0.0, InnerMode::DynamicBounds).unwrap();
        assert_eq!(s.powers.to_vec(), vec![3.0; 3]);
    }

    #[test]
    fn inner_rejects_infeasible() {
        let i = inst(&[1.0, 1.0], 3.0, 1.0, 0.0, 1.0);
        assert!(matches!(
            solve_inner(&i, 1.0, InnerMode::DynamicBounds),
            Err(Error::Infeasible { .. })
        ));
        assert!(!maximize_ee(&i).feasible);
        assert!(!maximize_se(&i).feasible);
    }

    #[test]
    fn inner_sweeps_end_feasible() {
        // user 0's QoS caps how far user 1 may rise
        let i = inst(&[1.0, 0.9], 1.0, 3.0, 0.0, 1.0);
        let s = solve_inner(&i, 0.01, InnerMode::DynamicBounds).unwrap();
        assert!(is_feasible_point(&i, &s.powers));
        assert!(s.converged);
    }

    #[test]
    fn single_user_ee_matches_stationary_point() {
        // L = 1, |h|^2 = noise = 1, P_f = 1, P_max = 10: maximize
        // log2(1+P)/(1+P), stationary at (1+P) ln(1+P) = 1+P => P = e - 1
        let i = inst(&[1.0], 0.0, 10.0, 1.0, 1.0);
        let s = maximize_ee(&i);
        assert!(s.feasible && s.converged);
        assert!((s.powers[0] - (std::f64::consts::E - 1.0)).abs() < 1e-7);
        assert!(close(s.ee, std::f64::consts::LOG2_E / std::f64::consts::E, 1e-12));
    }

    #[test]
    fn dinkelbach_beta_increases() {
        let i = inst(&[3.0, 1.0, 0.2], 0.5, 2.0, 0.3, 0.1);
        let run = maximize_ee_with(&i, &DinkelbachOptions::default());
        assert!(run.steps.windows(2).all(|w| w[1].beta > w[0].beta));
        let last = run.steps.last().unwrap();
        assert!(last.objective <= DINKELBACH_EPSILON && last.objective >= -1e-12);
        assert!(run.solution.converged);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let i = inst(&[3.0, 1.0], 0.5, 2.0, 0.3, 0.1);
        let opts = DinkelbachOptions {
            max_outer: 1,
            ..Default::default()
        };
        let run = maximize_ee_with(&i, &opts);
        assert_eq!(run.solution.dinkelbach_iterations, 1);
        assert!(!run.solution.converged);
    }

    #[test]
    fn se_examples() {
        let i = inst(&[2.0, 1.0, 0.5], 0.0, 0.7, 0.1, 0.1);
        assert_eq!(maximize_se(&i).powers.to_vec(), vec![0.7; 3]);

        // tight R_1: user 2 stops where user 1's QoS binds
        let (h1, h2, noise, r1, pmax) = (1.0, 0.8, 0.1, 2.0, 1.0);
        let i = ClusterInstance::new(vec![h1, h2], vec![r1, 0.0], vec![pmax; 2], 0.1, noise)
            .unwrap();
        let se = maximize_se(&i);
        let expected = pmax * h1 / ((r1.exp2() - 1.0) * h2) - noise / h2;
        assert!(expected < pmax);
        assert_eq!(se.powers[0], pmax);
        assert!(close(se.powers[1], expected, 1e-12));
        assert!(se.feasible);
    }

    #[test]
    fn se_dominates_ee_in_rate() {
        let i = inst(&[3.0, 1.0, 0.2], 0.5, 2.0, 0.3, 0.1);
        assert!(maximize_se(&i).sum_rate >= maximize_ee(&i).sum_rate - 1e-12);
    }

    #[test]
    fn decode_order_permutes_users() {
        let i = inst(&[3.0, 1.0], 0.5, 2.0, 0.3, 0.1);
        let r = i.with_decode_order(&[1, 0]).unwrap();
        assert_eq!(r.gains(), &[1.0, 3.0]);
        assert!(i.with_decode_order(&[0, 0]).is_err());
        assert!(i.with_decode_order(&[0]).is_err());
    }

    #[test]
    fn instance_json_round_trip() {
        let i = inst(&[3.0, 1.0], 0.5, 2.0, 0.3, 0.1);
        let json = serde_json::to_string(&i).unwrap();
        assert_eq!(serde_json::from_str::<ClusterInstance>(&json).unwrap(), i);
        let bad = r#"{"gains":[1,2],"min_rates":[0,0],"max_powers":[1,1],"circuit_power":0,"noise_power":1}"#;
        assert!(serde_json::from_str::<ClusterInstance>(bad).is_err());
    }

    #[test]
    fn csv_row_shape() {
        let i = inst(&[3.0, 1.0], 0.5, 2.0, 0.3, 0.1);
        let s = maximize_ee(&i);
        assert_eq!(EeSolution::csv_header(2).len(), s.csv_record().len());
        assert_eq!(EeSolution::csv_header(2)[3], "p1_w");
    }
}
