//! Multi-cluster Monte Carlo comparison of association schemes.

use std::path::Path;

use hma_ee::channel::{dbm_to_watt, derive_seed, draw_scenario, Scenario, ScenarioConfig};
use hma_ee::matching::{
    dc_match, mwm_gain, oma_mwm, random_match, swap_match, system_ee, PaSolver, SystemSolution,
};
use rayon::prelude::*;

use crate::config::{EnsembleConfig, EnsembleScheme};
use crate::error::{CliError, Result};
use crate::output::{csv_writer, num};

pub const HEADER: [&str; 11] = [
    "kind",
    "pmax_dbm",
    "scheme",
    "seed",
    "trial",
    "trials",
    "ee",
    "std_err",
    "swap_count",
    "infeasible_clusters",
    "infeasible_rate",
];

/// Stream index for the random matching of a trial.
const RANDOM_MATCH_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub ee: f64,
    pub swap_count: usize,
    pub infeasible_clusters: usize,
}

pub fn run_scheme(scheme: EnsembleScheme, scenario: &Scenario, trial_seed: u64) -> Outcome {
    let sol: SystemSolution = match scheme {
        EnsembleScheme::HmaProp => swap_match(scenario, PaSolver::NomaMaxEe),
        EnsembleScheme::HmaMwm => system_ee(scenario, &mwm_gain(scenario), PaSolver::NomaMaxEe),
        EnsembleScheme::HmaDc => dc_match(scenario, PaSolver::NomaMaxEe),
        EnsembleScheme::HmaRand => {
            let seed = derive_seed(trial_seed, RANDOM_MATCH_STREAM);
            system_ee(scenario, &random_match(scenario, seed), PaSolver::NomaMaxEe)
        }
        EnsembleScheme::OmaSwap => swap_match(scenario, PaSolver::OmaMaxEe),
        EnsembleScheme::OmaMwm => oma_mwm(scenario),
    };
    Outcome {
        ee: sol.system_ee,
        swap_count: sol.swap_count,
        infeasible_clusters: sol.infeasible_rbs.len(),
    }
}

/// `outcomes[pmax][scheme]` for one trial; every scheme and pmax sees the
/// same drawn channels.
fn run_trial(cfg: &EnsembleConfig, pmax_dbm: &[f64], trial_seed: u64) -> Result<Vec<Vec<Outcome>>> {
    let base = draw_scenario(&ScenarioConfig {
        num_users: cfg.num_users,
        num_rbs: cfg.num_rbs,
        placement: cfg.placement.clone(),
        min_rate: cfg.link.min_rate,
        max_power: dbm_to_watt(pmax_dbm[0]),
        circuit_power_per_user: cfg.link.circuit_power_per_user,
        noise_psd: cfg.link.noise_psd,
        rb_bandwidth: cfg.link.rb_bandwidth,
        seed: trial_seed,
    })
    .map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(pmax_dbm
        .iter()
        .map(|&dbm| {
            let s = base.with_max_power(dbm_to_watt(dbm));
            cfg.schemes
                .iter()
                .map(|&scheme| run_scheme(scheme, &s, trial_seed))
                .collect()
        })
        .collect())
}

pub fn ensemble(cfg: &EnsembleConfig, out: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    let pmax = cfg.pmax_dbm_range.values()?;
    let seeds: Vec<u64> = (0..cfg.trials as u64)
        .map(|t| derive_seed(cfg.base_seed, t))
        .collect();
    let results = seeds
        .par_iter()
        .map(|&seed| run_trial(cfg, &pmax, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut w = csv_writer(out)?;
    w.write_record(HEADER)?;
    for (pi, &dbm) in pmax.iter().enumerate() {
        for (si, scheme) in cfg.schemes.iter().enumerate() {
            let outcomes: Vec<Outcome> = results.iter().map(|r| r[pi][si]).collect();
            for (t, (o, seed)) in outcomes.iter().zip(&seeds).enumerate() {
                w.write_record([
                    "trial".to_string(),
                    num(dbm),
                    scheme.label().to_string(),
                    seed.to_string(),
                    t.to_string(),
                    "1".to_string(),
                    num(o.ee),
                    String::new(),
                    o.swap_count.to_string(),
                    o.infeasible_clusters.to_string(),
                    if o.infeasible_clusters > 0 { "1" } else { "0" }.to_string(),
                ])?;
            }
            let s = Summary::of(&outcomes);
            eprintln!(
                "{:>6} dBm  {:<9} mean EE {} (se {}), mean swaps {:.2}, infeasible trials {:.1}%",
                num(dbm),
                scheme.label(),
                num(s.mean),
                num(s.std_err),
                s.mean_swaps,
                100.0 * s.infeasible_rate
            );
            w.write_record([
                "mean".to_string(),
                num(dbm),
                scheme.label().to_string(),
                cfg.base_seed.to_string(),
                String::new(),
                outcomes.len().to_string(),
                num(s.mean),
                num(s.std_err),
                num(s.mean_swaps),
                num(s.mean_infeasible_clusters),
                num(s.infeasible_rate),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_err: f64,
    pub mean_swaps: f64,
    pub mean_infeasible_clusters: f64,
    pub infeasible_rate: f64,
}

impl Summary {
    pub fn of(outcomes: &[Outcome]) -> Self {
        let n = outcomes.len() as f64;
        let mean = outcomes.iter().map(|o| o.ee).sum::<f64>() / n;
        let std_err = if outcomes.len() > 1 {
            let var = outcomes.iter().map(|o| (o.ee - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_err,
            mean_swaps: outcomes.iter().map(|o| o.swap_count as f64).sum::<f64>() / n,
            mean_infeasible_clusters: outcomes
                .iter()
                .map(|o| o.infeasible_clusters as f64)
                .sum::<f64>()
                / n,
            infeasible_rate: outcomes.iter().filter(|o| o.infeasible_clusters > 0).count() as f64
                / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let o = |ee, swaps, bad| Outcome {
            ee,
            swap_count: swaps,
            infeasible_clusters: bad,
        };
        let s = Summary::of(&[o(1.0, 2, 0), o(3.0, 4, 1)]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std_err - 1.0).abs() < 1e-15);
        assert_eq!(s.mean_swaps, 3.0);
        assert_eq!(s.infeasible_rate, 0.5);
        assert_eq!(Summary::of(&[o(5.0, 0, 0)]).std_err, 0.0);
    }
}
