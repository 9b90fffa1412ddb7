//! Orthogonal baseline for a cluster: each of the `L` users gets a `1/L`
//! share of the RB and concentrates its power there, so
//! `R_l = (1/L) log2(1 + L P_l |h_l|^2 / noise)` with no inter-user
//! interference.

use std::f64::consts::LN_2;

use crate::cluster::{
    ClusterInstance, DinkelbachStep, EeSolution, PowerVector, DINKELBACH_EPSILON,
    MAX_OUTER_ITERATIONS,
};
use crate::{Error, Result};

pub fn oma_rates(instance: &ClusterInstance, powers: &[f64]) -> Result<Vec<f64>> {
    if powers.len() != instance.len() {
        return Err(Error::LengthMismatch {
            expected: instance.len(),
            got: powers.len(),
        });
    }
    if powers.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Domain(format!("powers must be non-negative: {powers:?}")));
    }
    let share = instance.len() as f64;
    Ok(powers
        .iter()
        .zip(instance.gains())
        .map(|(p, h)| (1.0 + share * p * h / instance.noise_power()).log2() / share)
        .collect())
}

/// Inverse of [`oma_rates`] at the QoS targets. Reports the first user whose
/// cap is too small.
pub fn oma_min_powers(instance: &ClusterInstance) -> (PowerVector, Option<usize>) {
    let share = instance.len() as f64;
    let powers: Vec<f64> = instance
        .gains()
        .iter()
        .zip(instance.min_rates())
        .map(|(h, r)| ((share * r).exp2() - 1.0) * instance.noise_power() / (share * h))
        .collect();
    let violation = (0..powers.len()).find(|&l| powers[l] > instance.max_powers()[l]);
    (PowerVector::new(powers), violation)
}

/// Maximizer of `sum R_l - beta sum P_l`: separable, one clipped stationary
/// point per user.
pub fn oma_inner(instance: &ClusterInstance, beta: f64) -> PowerVector {
    let share = instance.len() as f64;
    let (mins, _) = oma_min_powers(instance);
    let water = if beta > 0.0 {
        1.0 / (share * beta * LN_2)
    } else {
        f64::INFINITY
    };
    PowerVector::new(
        instance
            .gains()
            .iter()
            .zip(instance.max_powers())
            .zip(mins.iter())
            .map(|((h, cap), lo)| {
                let stationary = water - instance.noise_power() / (share * h);
                stationary.min(*cap).max(*lo)
            })
            .collect(),
    )
}

pub fn oma_maximize_ee(instance: &ClusterInstance) -> EeSolution {
    oma_maximize_ee_traced(instance).0
}

pub fn oma_maximize_ee_traced(instance: &ClusterInstance) -> (EeSolution, Vec<DinkelbachStep>) {
    if oma_min_powers(instance).1.is_some() {
        return (EeSolution::infeasible(instance.len()), Vec::new());
    }
    let mut beta = 0.0;
    let mut steps = Vec::new();
    loop {
        let powers = oma_inner(instance, beta);
        let rates = oma_rates(instance, &powers).expect("powers are valid");
        let rate: f64 = rates.iter().sum();
        let denom = instance.circuit_power() + powers.total();
        let objective = rate - beta * denom;
        steps.push(DinkelbachStep { beta, objective });
        let done = objective <= DINKELBACH_EPSILON || !(denom > 0.0);
        if done || steps.len() >= MAX_OUTER_ITERATIONS {
            let mut solution = EeSolution::from_parts(instance, powers, rates, rate);
            solution.dinkelbach_iterations = steps.len();
            solution.inner_iterations = steps.len();
            solution.converged = done;
            return (solution, steps);
        }
        beta = rate / denom;
    }
}
