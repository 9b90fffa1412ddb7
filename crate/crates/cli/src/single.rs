//! Single-cluster commands: feasibility report, power sweeps, two-user
//! phase analysis.

use std::path::Path;

use hma_ee::channel::{dbm_to_watt, draw_scenario, ScenarioConfig};
use hma_ee::cluster::{maximize_ee, maximize_se, min_powers, ClusterInstance, EeSolution};
use hma_ee::matching::cluster_instance;
use hma_ee::oma::{oma_maximize_ee, oma_min_powers};
use hma_ee::oracle::{grid_search_ee, GridSpec};
use hma_ee::two_user::{
    classify_phase_case1, classify_phase_case2, phase_derivatives, solve_case1, solve_case2,
};

use crate::config::{Link, PhaseConfig, SweepConfig, SweepScheme};
use crate::error::{CliError, Result};
use crate::output::{csv_writer, num};

pub fn feasibility(instance: &ClusterInstance, out: Option<&Path>) -> Result<()> {
    let report = min_powers(instance);
    println!("user  p_min_w  p_max_w  margin_w");
    let mut rows = Vec::new();
    for (l, (p_min, p_max)) in report.powers.iter().zip(instance.max_powers()).enumerate() {
        let margin = p_max - p_min;
        println!("{}  {}  {}  {}", l + 1, num(*p_min), num(*p_max), num(margin));
        rows.push(vec![(l + 1).to_string(), num(*p_min), num(*p_max), num(margin)]);
    }
    match report.first_violation {
        None => println!("verdict: feasible"),
        Some(l) => println!("verdict: infeasible (user {})", l + 1),
    }
    if let Some(path) = out {
        let mut w = csv_writer(Some(path))?;
        w.write_record(["user", "p_min_w", "p_max_w", "margin_w"])?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn sorted_desc(mut gains: Vec<f64>) -> Vec<f64> {
    gains.sort_by(|a, b| b.total_cmp(a));
    gains
}

fn uniform_instance(gains: &[f64], link: &Link, pmax_w: f64) -> Result<ClusterInstance> {
    Ok(ClusterInstance::uniform(
        gains.to_vec(),
        link.min_rate,
        pmax_w,
        link.circuit_power_per_user * gains.len() as f64,
        link.noise_power()?,
    )
    .map_err(|e| CliError::Parse(e.to_string()))?)
}

/// Gains of the swept cluster and the seed they were drawn with.
fn sweep_gains(cfg: &SweepConfig, seed_override: Option<u64>) -> Result<(Vec<f64>, u64)> {
    if let Some(g) = &cfg.gains {
        return Ok((sorted_desc(g.clone()), seed_override.unwrap_or(0)));
    }
    let drawn = cfg.scenario.as_ref().expect("validated");
    let seed = seed_override.unwrap_or(drawn.seed);
    let scenario = draw_scenario(&ScenarioConfig {
        num_users: drawn.num_users,
        num_rbs: 1,
        placement: drawn.placement.clone(),
        min_rate: cfg.link.min_rate,
        max_power: 1.0,
        circuit_power_per_user: cfg.link.circuit_power_per_user,
        noise_psd: cfg.link.noise_psd,
        rb_bandwidth: cfg.link.rb_bandwidth,
        seed,
    })
    .map_err(|e| CliError::Parse(e.to_string()))?;
    let users: Vec<usize> = (0..drawn.num_users).collect();
    let (inst, _) = cluster_instance(&scenario, 0, &users)?;
    Ok((inst.gains().to_vec(), seed))
}

fn scheme_solution(scheme: SweepScheme, inst: &ClusterInstance) -> Result<(EeSolution, Vec<f64>)> {
    let mins = min_powers(inst).powers.to_vec();
    Ok(match scheme {
        SweepScheme::MaxEeNoma => (maximize_ee(inst), mins),
        SweepScheme::MaxSeNoma => (maximize_se(inst), mins),
        SweepScheme::MaxEeOma => (oma_maximize_ee(inst), oma_min_powers(inst).0.to_vec()),
        SweepScheme::CaseI => (solve_case1(inst)?.solution, mins),
        SweepScheme::CaseII => {
            let reversed = inst.with_decode_order(&[1, 0])?;
            let m = min_powers(&reversed).powers;
            (solve_case2(inst)?.solution, vec![m[1], m[0]])
        }
    })
}

pub fn sweep(cfg: &SweepConfig, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    let (gains, seed) = sweep_gains(cfg, seed)?;
    let len = gains.len();
    let two_user_only = cfg
        .schemes
        .iter()
        .any(|s| matches!(s, SweepScheme::CaseI | SweepScheme::CaseII));
    if two_user_only && len != 2 {
        return Err(CliError::Parse(format!(
            "CaseI and CaseII need a 2-user cluster, got {len} users"
        )));
    }
    let mut w = csv_writer(out)?;
    let mut header: Vec<String> = [
        "pmax_dbm",
        "scheme",
        "seed",
        "feasible",
        "ee",
        "sum_rate",
        "total_power_w",
    ]
    .map(String::from)
    .to_vec();
    header.extend((1..=len).map(|l| format!("p{l}_w")));
    header.extend((1..=len).map(|l| format!("p{l}_min_w")));
    w.write_record(&header)?;
    for dbm in cfg.pmax_dbm_range.values()? {
        let inst = uniform_instance(&gains, &cfg.link, dbm_to_watt(dbm))?;
        for &scheme in &cfg.schemes {
            let (sol, mins) = scheme_solution(scheme, &inst)?;
            let mut row = vec![
                num(dbm),
                scheme.label().to_string(),
                seed.to_string(),
                sol.feasible.to_string(),
                num(sol.ee),
                num(sol.sum_rate),
                num(sol.total_power),
            ];
            row.extend(sol.powers.iter().map(|p| num(*p)));
            row.extend(mins.iter().map(|p| num(*p)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const PHASE_HEADER: [&str; 19] = [
    "pmax_dbm",
    "dp1",
    "dp2",
    "dp3",
    "d1_at_p2_min",
    "case1_phase",
    "case2_phase",
    "case1_p1_w",
    "case1_p2_w",
    "numeric1_p1_w",
    "numeric1_p2_w",
    "case2_p1_w",
    "case2_p2_w",
    "numeric2_p1_w",
    "numeric2_p2_w",
    "case1_ee",
    "case2_ee",
    "case1_gap_w",
    "case2_gap_w",
];

/// Per pmax: corner derivatives, phase labels for both decoding orders, and
/// closed-form powers next to numeric ones (the Dinkelbach solver for the
/// default order, the grid search for the reversed order).
pub fn phase(cfg: &PhaseConfig, out: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    let gains = sorted_desc(cfg.gains.clone());
    let mut w = csv_writer(out)?;
    w.write_record(PHASE_HEADER)?;
    for dbm in cfg.pmax_dbm_range.values()? {
        let inst = uniform_instance(&gains, &cfg.link, dbm_to_watt(dbm))?;
        let d = phase_derivatives(&inst)?;
        let label = |p: hma_ee::Result<hma_ee::two_user::Phase>| {
            p.map_or("infeasible".to_string(), |p| p.label().to_string())
        };
        let one = solve_case1(&inst)?.solution;
        let two = solve_case2(&inst)?.solution;
        let numeric_one = maximize_ee(&inst);
        let reversed = inst.with_decode_order(&[1, 0])?;
        let grid = grid_search_ee(&reversed, &GridSpec::default())?.solution;
        let numeric_two = [grid.powers[1], grid.powers[0]];
        let gap = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let row = vec![
            num(dbm),
            num(d.d1_at_max),
            num(d.d2_at_max),
            num(d.d2_at_p2_min),
            num(d.d1_at_p2_min),
            label(classify_phase_case1(&inst)),
            label(classify_phase_case2(&inst)),
            num(one.powers[0]),
            num(one.powers[1]),
            num(numeric_one.powers[0]),
            num(numeric_one.powers[1]),
            num(two.powers[0]),
            num(two.powers[1]),
            num(numeric_two[0]),
            num(numeric_two[1]),
            num(one.ee),
            num(two.ee),
            num(gap(&one.powers, &numeric_one.powers)),
            num(gap(&two.powers, &numeric_two)),
        ];
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
