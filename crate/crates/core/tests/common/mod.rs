#![allow(dead_code)]

use hma_ee::channel::{dbm_to_watt, large_scale_gain, noise_power, rayleigh_power};
use hma_ee::cluster::{min_powers, ClusterInstance};
use rand::Rng;

pub fn noise() -> f64 {
    noise_power(-174.0, 180e3).unwrap()
}

/// Descending gains of `len` users dropped uniformly in [20, 150] m.
pub fn random_gains<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut gains: Vec<f64> = (0..len)
        .map(|_| {
            let d = rng.random_range(20.0..150.0);
            large_scale_gain(d).unwrap() * rayleigh_power(rng).max(1e-3)
        })
        .collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    gains
}

/// Random instance with `len` users, QoS in [0, max_rate] and a cap drawn in
/// [0, 30] dBm; `None` when it happens to be infeasible.
pub fn random_instance<R: Rng>(rng: &mut R, len: usize, max_rate: f64) -> Option<ClusterInstance> {
    let gains = random_gains(rng, len);
    let rates = (0..len).map(|_| rng.random_range(0.0..=max_rate)).collect();
    let cap = dbm_to_watt(rng.random_range(0.0..30.0));
    let inst = ClusterInstance::new(gains, rates, vec![cap; len], 1e-3 * len as f64, noise()).unwrap();
    min_powers(&inst).is_feasible().then_some(inst)
}

/// Draws until a feasible instance comes up.
pub fn feasible_instance<R: Rng>(rng: &mut R, len: usize, max_rate: f64) -> ClusterInstance {
    loop {
        if let Some(inst) = random_instance(rng, len, max_rate) {
            return inst;
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
