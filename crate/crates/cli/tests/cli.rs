use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn hma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hma-ee"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

const NOISE: f64 = 7.165929069962951e-16;

fn instance_json(gains: &[f64], pmax: &[f64]) -> String {
    format!(
        r#"{{"gains": {gains:?}, "min_rates": {:?}, "max_powers": {pmax:?}, "circuit_power": 0.003, "noise_power": {NOISE:e}}}"#,
        vec![1.5; gains.len()]
    )
}

#[test]
fn feasibility_reports_margins() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "ok.json", &instance_json(&[1.1e-9, 1.34e-10, 4.25e-11], &[0.1; 3]));
    let out = dir.path().join("report.csv");
    let o = hma(&["feasibility", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("verdict: feasible"));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["user", "p_min_w", "p_max_w", "margin_w"]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| f(&r[3]) > 0.0));
}

#[test]
fn feasibility_names_the_first_violating_user() {
    let dir = TempDir::new().unwrap();
    // user 2 needs about 2.8e-5 W
    let cfg = write(&dir, "bad.json", &instance_json(&[1.1e-9, 1.34e-10, 4.25e-11], &[1.0, 1e-5, 1.0]));
    let o = hma(&["feasibility", "--config", &cfg]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("verdict: infeasible (user 2)"), "{}", stdout(&o));
}

#[test]
fn parse_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let broken = write(&dir, "broken.json", "{\n  \"gains\": [1.0,\n");
    let o = hma(&["feasibility", "--config", &broken]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let unsorted = write(&dir, "unsorted.json", &instance_json(&[1e-10, 1e-9], &[1.0; 2]));
    assert_eq!(hma(&["feasibility", "--config", &unsorted]).status.code(), Some(2));
    assert_eq!(hma(&["feasibility"]).status.code(), Some(2));
    assert_eq!(hma(&["sweep", "--bogus"]).status.code(), Some(2));
    assert_eq!(hma(&["nonsense"]).status.code(), Some(2));

    let three = write(
        &dir,
        "case.json",
        r#"{"gains": [1e-9, 1e-10, 1e-11], "pmax_dbm_range": {"start": 0, "stop": 1, "step": 1}, "schemes": ["CaseI"]}"#,
    );
    assert_eq!(hma(&["sweep", "--config", &three]).status.code(), Some(2));
}

#[test]
fn sweep_shows_saturation_and_full_power_regimes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "wide.json",
        r#"{"gains": [1.10e-9, 1.34e-10, 4.25e-11],
            "pmax_dbm_range": {"start": -15, "stop": 30, "step": 1},
            "schemes": ["MaxEE-NOMA", "MaxSE-NOMA"]}"#,
    );
    let out = dir.path().join("sweep.csv");
    assert!(hma(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let (h, rows) = read_csv(&out);
    assert_eq!(
        h[..7],
        ["pmax_dbm", "scheme", "seed", "feasible", "ee", "sum_rate", "total_power_w"]
    );
    let ee_rows: Vec<&Vec<String>> = rows.iter().filter(|r| r[1] == "MaxEE-NOMA").collect();
    assert_eq!(ee_rows.len(), 46);
    let watts = |dbm: f64| 10f64.powf(dbm / 10.0) / 1000.0;
    let low = ee_rows[0];
    assert!((f(&low[col(&h, "p1_w")]) - watts(-15.0)).abs() < 1e-15);
    let top = &ee_rows[ee_rows.len() - 11..];
    let ee0 = f(&top[0][col(&h, "ee")]);
    for r in top {
        assert!((f(&r[col(&h, "ee")]) - ee0).abs() <= 1e-6 * ee0);
        for l in 2..=3 {
            let p = f(&r[col(&h, &format!("p{l}_w"))]);
            let min = f(&r[col(&h, &format!("p{l}_min_w"))]);
            assert!((p - min).abs() <= 1e-9);
        }
    }
    assert!(rows.iter().all(|r| r[2] == "0"));
}

#[test]
fn sweep_with_drawn_gains_carries_the_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "drawn.json",
        r#"{"scenario": {"num_users": 2, "placement": {"kind": "uniform-disk", "radius": 150}, "seed": 4},
            "pmax_dbm_range": {"start": 0, "stop": 10, "step": 5},
            "schemes": ["CaseI", "CaseII", "MaxEE-OMA"]}"#,
    );
    let out = dir.path().join("s.csv");
    assert!(hma(&["sweep", "--config", &cfg, "--seed", "77", "--out", out.to_str().unwrap()])
        .status
        .success());
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r[2] == "77"));
}

#[test]
fn phase_labels_move_monotonically() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "pair.json",
        r#"{"gains": [1.10e-9, 1.34e-10], "pmax_dbm_range": {"start": -20, "stop": 30, "step": 1}}"#,
    );
    let out = dir.path().join("phase.csv");
    assert!(hma(&["phase", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let (h, rows) = read_csv(&out);
    let rank = |s: &str| match s {
        "I" => 1,
        "II" => 2,
        "III" => 3,
        "IV" => 4,
        _ => 0,
    };
    for name in ["case1_phase", "case2_phase"] {
        let labels: Vec<i32> = rows
            .iter()
            .map(|r| rank(&r[col(&h, name)]))
            .filter(|&r| r > 0)
            .collect();
        assert!(labels.windows(2).all(|w| w[0] <= w[1]), "{name}: {labels:?}");
        assert_eq!(labels[0], 1);
    }
    let last = rows.last().unwrap();
    assert_eq!(last[col(&h, "case1_phase")], "IV");
    assert_eq!(last[col(&h, "case2_phase")], "III");
    for r in &rows {
        assert!(f(&r[col(&h, "case1_gap_w")]) < 1e-5);
        assert!(f(&r[col(&h, "case2_gap_w")]) < 1e-5);
    }
}

#[test]
fn ensemble_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "ens.json",
        r#"{"num_users": 6, "num_rbs": 2, "placement": {"kind": "ringed", "radii": [50, 100, 150]},
            "schemes": ["HMA-prop", "HMA-MWM", "HMA-DC", "HMA-rand", "OMA-swap", "OMA-MWM"],
            "pmax_dbm_range": {"start": 10, "stop": 20, "step": 10}, "base_seed": 3}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = hma(&["ensemble", "--config", &cfg, "--trials", "4", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (h, rows) = read_csv(&a);
    assert_eq!(
        h,
        [
            "kind", "pmax_dbm", "scheme", "seed", "trial", "trials", "ee", "std_err",
            "swap_count", "infeasible_clusters", "infeasible_rate"
        ]
    );
    // 2 caps x 6 schemes x (4 trials + 1 mean)
    assert_eq!(rows.len(), 60);
    let means: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "mean").collect();
    assert_eq!(means.len(), 12);
    assert!(means.iter().all(|r| r[3] == "3" && r[5] == "4"));

    let c = dir.path().join("c.csv");
    hma(&["ensemble", "--config", &cfg, "--trials", "4", "--seed", "9", "--out", c.to_str().unwrap()]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn verify_is_reproducible_and_fails_with_three() {
    let args = ["verify", "--trials", "4", "--seed", "5"];
    let first = hma(&args);
    assert!(first.status.success(), "{}", stdout(&first));
    assert_eq!(stdout(&first), stdout(&hma(&args)));
    assert!(stdout(&first).contains("cluster: 4 instances"));
    assert!(stdout(&first).contains("matching trial 3"));

    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v.csv");
    let o = hma(&[
        "verify", "--scope", "cluster", "--trials", "2", "--tolerance", "-1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let (h, rows) = read_csv(&out);
    assert_eq!(h[0], "scope");
    assert_eq!(rows.len(), 2);
}
