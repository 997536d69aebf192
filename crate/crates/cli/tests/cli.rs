//! End-to-end tests of the `pulseopt` binary: output contents, exit codes,
//! and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pulseopt"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Parse a CSV written by the binary into a header and float rows.
fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

const SOLITON_CONFIG: &str = r#"
[system]
mu = 1.0

[grid]
t0 = -50.0
t1 = 50.0
n = 4001

[pulse]
kind = "soliton"
e0 = 2.0

[integrator]
dt_max = 0.01
"#;

#[test]
fn simulate_soliton_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SOLITON_CONFIG);
    let out = dir.path().join("out");
    let status = run(&["simulate", &config, "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let summary = read_json(&out.join("run_summary.json"));
    let q22 = summary["q22"].as_f64().unwrap();
    let area = summary["area"].as_f64().unwrap();
    let energy = summary["energy"].as_f64().unwrap();
    assert!((q22 - 2.0).abs() < 1e-6, "q22 = {q22}");
    assert!((area - std::f64::consts::PI).abs() < 1e-6, "area = {area}");
    assert!((energy - 2.0).abs() < 1e-6, "energy = {energy}");
    assert_eq!(summary["provenance"]["command"], "simulate");
    assert_eq!(summary["provenance"]["config_sha256"].as_str().unwrap().len(), 64);

    let (header, rows) = read_csv(&out.join("run_trajectory.csv"));
    assert_eq!(header, "t,rho11,rho22,re12,im12");
    assert_eq!(rows.len(), 4001);
    // midpoint of the run is the sech peak: full inversion
    let mid = &rows[2000];
    assert!((mid[0]).abs() < 1e-12);
    assert!((mid[2] - 1.0).abs() < 1e-6, "rho22(0) = {}", mid[2]);
    // trace stays one on every row
    for row in &rows {
        assert!((row[1] + row[2] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn simulate_zero_field_leaves_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[system]
mu = 1.0

[grid]
t0 = 0.0
t1 = 10.0
n = 101

[pulse]
kind = "zero"
"#,
    );
    let out = dir.path().join("out");
    assert!(run(&["simulate", &config, "--out", out.to_str().unwrap()]).status.success());
    let summary = read_json(&out.join("run_summary.json"));
    assert_eq!(summary["q22"].as_f64().unwrap(), 0.0);
    assert!(summary["adiabaticity_ratio"].is_null());
}

#[test]
fn simulate_square_pulse_quarter_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[system]
mu = 1.0

[grid]
t0 = -50.0
t1 = 50.0
n = 20001

[pulse]
kind = "square"
area = 3.14159265358979323846
e0 = 2.0

[integrator]
dt_max = 0.01
"#,
    );
    let out = dir.path().join("out");
    assert!(run(&["simulate", &config, "--out", out.to_str().unwrap()]).status.success());
    let summary = read_json(&out.join("run_summary.json"));
    let q22 = summary["q22"].as_f64().unwrap();
    let expected = std::f64::consts::PI * std::f64::consts::PI / 4.0;
    assert!((q22 - expected).abs() < 1e-4, "q22 = {q22}, expected {expected}");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!("{SOLITON_CONFIG}\n[typo_section]\nx = 1\n"),
    );
    let out = run(&["simulate", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration"));
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        dir.path().join("nope.toml").to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sampled_length_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[system]
mu = 1.0

[grid]
t0 = 0.0
t1 = 1.0
n = 11

[pulse]
kind = "sampled"
values = [0.0, 1.0, 0.0]
"#,
    );
    let out = run(&["simulate", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_finite_samples_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[system]
mu = 1.0

[grid]
t0 = 0.0
t1 = 1.0
n = 3

[pulse]
kind = "sampled"
values = [0.0, inf, 0.0]
"#,
    );
    let out = run(&["simulate", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical"));
}

const OPT_CONFIG: &str = r#"
[system]
mu = 1.0

[grid]
t0 = -15.0
t1 = 15.0
n = 301

[pulse]
kind = "zero"

[optimizer]
e0 = 2.0
seed = 1
max_iters = 300
tol_grad = 1e-7

[output]
prefix = "opt"
"#;

#[test]
fn optimize_is_deterministic_and_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), OPT_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = run(&["optimize", &config, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    // byte-identical artifacts across reruns
    for name in ["opt_report.json", "opt_optimized.csv"] {
        assert_eq!(
            fs::read(out_a.join(name)).unwrap(),
            fs::read(out_b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }

    let report = read_json(&out_a.join("opt_report.json"));
    assert_eq!(report["seed"].as_u64().unwrap(), 1);
    let history: Vec<f64> = report["fitness_history"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // the integrated objective is minimized, so accepted steps only decrease it
    assert!(history.windows(2).all(|w| w[1] <= w[0]), "fitness history not monotone");
    assert_eq!(
        report["final_fitness"].as_f64().unwrap(),
        *history.last().unwrap()
    );

    // the optimized envelope keeps the configured energy budget
    let (_, rows) = read_csv(&out_a.join("opt_optimized.csv"));
    assert_eq!(rows.len(), 301);
    let dt = 30.0 / 300.0;
    let energy: f64 = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let w = if i == 0 || i == 300 { 0.5 * dt } else { dt };
            w * r[1] * r[1]
        })
        .sum();
    assert!((energy - 2.0).abs() < 1e-9, "energy = {energy}");
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), OPT_CONFIG);
    let out = dir.path().join("o");
    assert!(run(&["optimize", &config, "--out", out.to_str().unwrap(), "--seed", "7"])
        .status
        .success());
    let report = read_json(&out.join("opt_report.json"));
    assert_eq!(report["seed"].as_u64().unwrap(), 7);
}

#[test]
fn unconverged_run_exits_4_when_required() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &OPT_CONFIG.replace("max_iters = 300", "max_iters = 3\nrequire_convergence = true"),
    );
    let out_dir = dir.path().join("o");
    let out = run(&["optimize", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    // the report is still written so the partial run can be inspected
    assert!(out_dir.join("opt_report.json").exists());
}

#[test]
fn optimize_without_budget_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SOLITON_CONFIG);
    let out = run(&["optimize", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("e0"));
}

#[test]
fn audit_reports_no_improvement_over_soliton() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), OPT_CONFIG);
    let out = dir.path().join("o");
    assert!(run(&["audit", &config, "--out", out.to_str().unwrap()]).status.success());
    let report = read_json(&out.join("opt_audit.json"));
    assert!(report["worst_improvement"].as_f64().unwrap() <= 1e-9);
    let (header, rows) = read_csv(&out.join("opt_audit.csv"));
    assert_eq!(header, "trial,delta");
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r[1] <= 1e-9));
}

#[test]
fn fig1_reproduces_sech_vs_square_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["fig1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let summary = read_json(&out.join("fig1_summary.json"));
    let ratio = summary["ratio"].as_f64().unwrap();
    let expected = 8.0 / (std::f64::consts::PI * std::f64::consts::PI);
    assert!((ratio - expected).abs() < 1e-3, "ratio = {ratio}");

    for name in ["fig1_soliton_occupation.csv", "fig1_square_occupation.csv"] {
        let (header, rows) = read_csv(&out.join(name));
        assert_eq!(header, "t,int_rho22");
        // cumulative occupation never decreases
        assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1] - 1e-12), "{name} not monotone");
    }
}

#[test]
fn fig2_identities_hold_for_hydrogen_like_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["fig2", "--mass", "918", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let s = read_json(&out.join("fig2_summary.json"));
    let mu = s["mu"].as_f64().unwrap();
    let amplitude = s["amplitude"].as_f64().unwrap();
    let e0 = s["e0"].as_f64().unwrap();
    let t_control = s["t_control"].as_f64().unwrap();
    let pi = std::f64::consts::PI;
    assert_eq!(t_control, 30000.0);
    assert!((amplitude * mu * t_control - pi / 2.0).abs() < 1e-12);
    assert!((e0 - pi * pi / (4.0 * mu * mu * t_control)).abs() < 1e-12 * e0);
    assert!(s["rho22_at_t_control"].as_f64().unwrap() >= 1.0 - 1e-6);
}

#[test]
fn morse_outputs_bound_states_and_dipole() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["morse", "--mass", "1836", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let s = read_json(&out.join("morse_summary.json"));
    let e0 = s["e0"].as_f64().unwrap();
    let e1 = s["e1"].as_f64().unwrap();
    let omega = s["omega"].as_f64().unwrap();
    assert!(e0 < e1 && e1 < 0.0, "bound-state ordering: e0 = {e0}, e1 = {e1}");
    assert!((omega - (e1 - e0)).abs() < 1e-15);
    assert!(s["mu_abs"].as_f64().unwrap() > 0.0);
    assert!(s["bound_states"].as_u64().unwrap() >= 2);

    let (header, rows) = read_csv(&out.join("morse_wavefunctions.csv"));
    assert_eq!(header, "r,psi0,psi1");
    assert!(rows.len() > 1000);
    // ground state is nodeless, first excited state changes sign once
    let sign_changes = |col: usize| {
        rows.windows(2)
            .filter(|w| {
                let (a, b) = (w[0][col], w[1][col]);
                a.abs() > 1e-8 && b.abs() > 1e-8 && a.signum() != b.signum()
            })
            .count()
    };
    assert_eq!(sign_changes(1), 0);
    assert_eq!(sign_changes(2), 1);
}
