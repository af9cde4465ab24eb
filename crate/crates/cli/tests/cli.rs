use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn write_config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn invdisc(sub: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invdisc"))
        .arg(sub)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Data rows of a CSV with a digest comment and a header line.
fn rows(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_digest="));
    lines.next().unwrap();
    lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

const MOBIUS: &str = r#"{
    "experiment": "solve",
    "scheme": {"kind": "inv_sl2", "forcing": {"kind": "zero"}, "abc": [0, 0, 0]},
    "initial": {"x0": 0.0, "y0": 0.3333333333333333, "y1": 0.5555555555555556, "y2": -0.37037037037037035},
    "eps": 0.02,
    "steps": 50
}"#;

const SIM2_COMPARE: &str = r#"{
    "experiment": "compare",
    "invariant": {"kind": "inv_sim2", "k": 1.0},
    "initial": {"x0": 0, "y0": 0, "y1": 0, "y2": 1},
    "eps": 0.01,
    "steps": 50
}"#;

#[test]
fn mobius_solve_matches_the_exact_solution() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", MOBIUS);
    let out = invdisc("solve", &cfg, &[]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "step,x,y,y_ref,abs_err,newton_iters,h");
    let rows = rows(&text);
    assert_eq!(rows.len(), 53);
    assert!(rows.iter().all(|r| r[4] <= 1e-10), "max abs_err above 1e-10");
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]));
}

#[test]
fn zero_steps_writes_seed_rows_only() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &MOBIUS.replace("\"steps\": 50", "\"steps\": 0"));
    let out = invdisc("solve", &cfg, &[]);
    assert_eq!(code(&out), 0);
    assert_eq!(rows(&String::from_utf8(out.stdout).unwrap()).len(), 3);
}

#[test]
fn zero_spacing_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &MOBIUS.replace("\"eps\": 0.02", "\"eps\": 0"));
    let out = invdisc("solve", &cfg, &[]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("invalid spacing"));
}

#[test]
fn malformed_and_mismatched_configs_exit_1() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(&dir, "bad.json", "{\"experiment\": \"diffapprox\", ");
    assert_eq!(code(&invdisc("diffapprox", &bad, &[])), 1);
    let solve = write_config(&dir, "solve.json", MOBIUS);
    let out = invdisc("compare", &solve, &[]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("solve experiment"));
    assert_eq!(code(&invdisc("solve", &dir.path().join("missing.json"), &[])), 1);
}

#[test]
fn early_halt_keeps_partial_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        &SIM2_COMPARE
            .replace("compare", "solve")
            .replace("\"invariant\"", "\"scheme\"")
            .replace("\"eps\": 0.01", "\"eps\": 0.02")
            .replace("\"steps\": 50", "\"steps\": 200"),
    );
    let csv = dir.path().join("run.csv");
    let out = invdisc("solve", &cfg, &["--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("halted at step"));
    let rows = rows(&std::fs::read_to_string(&csv).unwrap());
    assert!(rows.len() > 3 && rows.len() < 203);
}

#[test]
fn output_is_deterministic_and_carries_the_digest() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", SIM2_COMPARE);
    let run = |name: &str, extra: &[&str]| {
        let p = dir.path().join(name);
        let mut args = vec!["--out", p.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert_eq!(code(&invdisc("compare", &cfg, &args)), 0);
        std::fs::read_to_string(p).unwrap()
    };
    let a = run("a.csv", &[]);
    let b = run("b.csv", &[]);
    assert_eq!(a, b);
    let c = run("c.csv", &["--seed", "17"]);
    assert_ne!(a.lines().next(), c.lines().next());
    assert_eq!(
        a.lines().skip(1).collect::<Vec<_>>(),
        c.lines().skip(1).collect::<Vec<_>>()
    );
}

#[test]
fn invariant_schemes_beat_the_standard_scheme() {
    let dir = TempDir::new().unwrap();
    let gl2 = SIM2_COMPARE
        .replace(
            "\"kind\": \"inv_sim2\", \"k\": 1.0",
            "\"kind\": \"inv_gl2\", \"a\": -1.0",
        )
        .replace(
            "\"x0\": 0, \"y0\": 0, \"y1\": 0, \"y2\": 1",
            "\"x0\": 1, \"y0\": 0, \"y1\": 1, \"y2\": 0",
        );
    for json in [SIM2_COMPARE.to_string(), gl2] {
        let cfg = write_config(&dir, "c.json", &json);
        let out = invdisc("compare", &cfg, &[]);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "x,err_invariant,err_standard,ratio");
        let last = rows(&text).pop().unwrap();
        assert!(last[3] > 1.0, "final ratio {}", last[3]);
        assert!(String::from_utf8(out.stderr).unwrap().contains("final"));
    }
}

#[test]
fn identical_slots_give_unit_ratio() {
    let dir = TempDir::new().unwrap();
    let json = SIM2_COMPARE.replace(
        "\"eps\": 0.01",
        "\"standard\": {\"kind\": \"std\", \"ode\": {\"algebra\": \"sim2\", \"k\": 1.0}, \"h\": 0.01}, \"eps\": 0.01",
    );
    let json = json.replace(
        "\"invariant\": {\"kind\": \"inv_sim2\", \"k\": 1.0}",
        "\"invariant\": {\"kind\": \"std\", \"ode\": {\"algebra\": \"sim2\", \"k\": 1.0}, \"h\": 0.01}",
    );
    let cfg = write_config(&dir, "c.json", &json);
    let out = invdisc("compare", &cfg, &[]);
    assert_eq!(code(&out), 0);
    let rows = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r[3] == 1.0));
}

fn diffapprox(json: &str) -> serde_json::Value {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", json);
    let out = invdisc("diffapprox", &cfg, &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn second_order_parameters_cancel_c1() {
    let v = diffapprox(
        r#"{"experiment": "diffapprox",
            "form": {"id": "SL2_EQ", "forcing": {"kind": "sin"}, "abc": [-0.25, 0.5, 0.25]},
            "jet": {"x": 0.3, "y": 0.0, "y1": 1.0, "y2": 0.2}}"#,
    );
    assert_eq!(v["below_threshold"], true);
    for key in [
        "c0",
        "c1",
        "c2",
        "fit_residual",
        "eps_grid",
        "closed_form_c1",
        "rel_gap",
        "config_digest",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn closed_form_c1_at_the_origin() {
    let json = r#"{"experiment": "diffapprox",
        "form": {"id": "SL2_EQ", "forcing": {"kind": "sin"}, "abc": [0, 0, 0]},
        "jet": {"x": 0.0, "y": 0.0, "y1": 1.0, "y2": 0.0}VARIANT}"#;
    let printed = diffapprox(&json.replace("VARIANT", ", \"variant\": \"printed\""));
    assert!((printed["closed_form_c1"].as_f64().unwrap() + 2.0).abs() < 1e-12);
    let corrected = diffapprox(&json.replace("VARIANT", ""));
    assert!((corrected["closed_form_c1"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((corrected["c1"].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert!(corrected["rel_gap"].as_f64().unwrap() < 1e-4);
    assert_eq!(corrected["below_threshold"], false);
}

#[test]
fn default_invariance_run_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"experiment": "invariance"}"#);
    let out = invdisc("invariance", &cfg, &[]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(code(&out), 0, "{text}");
    assert!(text.starts_with("# config_digest="));
    assert!(text.trim_end().ends_with("overall PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn dilations_report_j1_as_equivariant() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"experiment": "invariance", "suites": ["invariants"],
            "sampler": {"algebra": "sim2", "generators": [[4, 0.5]], "length": 3}}"#,
    );
    let out = invdisc("invariance", &cfg, &[]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let j1 = text.lines().find(|l| l.contains("sim2 J1")).unwrap();
    assert!(j1.contains("weight lambda^-1"), "{j1}");
    assert!(!j1.contains("invariant ("));
}

#[test]
fn empty_element_count_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"experiment": "invariance", "elements": 0}"#);
    assert_eq!(code(&invdisc("invariance", &cfg, &[])), 1);
}
