use std::f64::consts::FRAC_PI_4;
use std::path::Path;
use std::process::{Command, Output};

use kslab::config::ExperimentConfig;
use kslab::simulate::run_kinetic;
use kslab::sweep::sweep;
use kslab_core::diagnostics::{equilibrium_r, Equilibrium};
use kslab_core::FrequencyDensity;
use serde_json::Value;

const IDENTICAL: &str = r#"{
    "frequency": {"kind": "dirac"},
    "initial": {"kind": "cosine", "amplitude": 0.2, "center": 0.0},
    "coupling": 1.0,
    "n_theta": 64,
    "n_omega": 1,
    "t_end": 2.0,
    "sample_every": 0.1,
    "diagnostics": {"intervals": [{"kind": "iplus", "delta": 0.2}], "lambda_delta": 0.5}
}"#;

fn kslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.in.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), IDENTICAL);
    let out = dir.path().join("out");
    let o = kslab(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "trajectory.csv",
        "checks.json",
        "summary.json",
        "plot.gp",
        "config.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary = read_json(&out.join("summary.json"));
    assert!(summary["kinetic"]["final_r"].as_f64().unwrap() > 0.2);
    let plot = std::fs::read_to_string(out.join("plot.gp")).unwrap();
    assert!(plot.contains("\"R\"") && plot.contains("mass_Iplus_0.2") && plot.contains("Lambda"));
    let header = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,R,phi,"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = IDENTICAL
        .replace("\"dirac\"}", "\"uniform\", \"halfwidth\": 0.1}")
        .replace("\"n_omega\": 1", "\"n_omega\": 4");
    let text = text.replacen(
        "{",
        "{\"model\": \"both\", \"n_particles\": 50, \"seed\": 3,",
        1,
    );
    let cfg = write_config(dir.path(), &text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = kslab(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["trajectory.csv", "particles.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let summary = read_json(&a.join("summary.json"));
    assert!(summary["particle"]["mean_field_gap"].as_f64().is_some());
}

#[test]
fn seed_flag_changes_particles() {
    let dir = tempfile::tempdir().unwrap();
    let text = IDENTICAL.replacen("{", "{\"model\": \"particle\", \"n_particles\": 20,", 1);
    let cfg = write_config(dir.path(), &text);
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = kslab(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
        std::fs::read(out.join("particles.csv")).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
}

#[test]
fn small_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &IDENTICAL.replace("\"n_theta\": 64", "\"n_theta\": 8"),
    );
    let out = dir.path().join("out");
    let o = kslab(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &IDENTICAL.replace("\"t_end\"", "\"gamma_0\": 1.1, \"t_end\""),
    );
    let o = kslab(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let o = kslab(&["verify", "--suite", "thm99"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("thm99"));
}

#[test]
fn echoed_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), IDENTICAL);
    let out = dir.path().join("out");
    assert!(
        kslab(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .success()
    );
    let echoed = std::fs::read_to_string(out.join("config.json")).unwrap();
    assert_eq!(echoed, IDENTICAL);
    assert_eq!(
        ExperimentConfig::parse(&echoed).unwrap(),
        ExperimentConfig::parse(IDENTICAL).unwrap()
    );
}

#[test]
fn single_coupling_sweep_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), IDENTICAL);
    let o = kslab(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().join("s").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn equilibrium_table_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"frequency": {"kind": "uniform", "halfwidth": 1.0}, "coupling": [1.0, 5.0]}"#,
    );
    let out = dir.path().join("eq");
    let o = kslab(&[
        "equilibrium",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = read_json(&out.join("equilibrium.json"));
    let k1 = &rows[0];
    assert_eq!(k1["status"], "no_solution");
    assert!((k1["h_at_one"].as_f64().unwrap() - FRAC_PI_4).abs() < 1e-10);
    let k5 = &rows[1];
    assert_eq!(k5["status"], "solution");
    assert!(k5["r"].as_f64().unwrap() >= 0.5);
    assert!(String::from_utf8_lossy(&o.stdout).contains("no_solution"));

    let cfg = write_config(
        dir.path(),
        r#"{"frequency": {"kind": "dirac"}, "coupling": [0.5, 2.0, 30.0]}"#,
    );
    let out = dir.path().join("dirac");
    assert!(kslab(&[
        "equilibrium",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let rows = read_json(&out.join("equilibrium.json"));
    for row in rows.as_array().unwrap() {
        assert_eq!(row["r"].as_f64(), Some(1.0));
    }
}

#[test]
fn characteristics_command_traces_paths() {
    let dir = tempfile::tempdir().unwrap();
    let text = IDENTICAL.replace(
        "\"diagnostics\"",
        "\"characteristics\": {\"starts\": [{\"theta\": 1.0, \"omega\": 0.0, \"t_start\": 0.0, \"t_stop\": 2.0}], \"step\": 0.01}, \"diagnostics\"",
    );
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("c");
    let o = kslab(&[
        "characteristics",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("characteristics.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 201);
    // attracted towards φ = 0
    let cos_first: f64 = rows[0][4].parse().unwrap();
    let cos_last: f64 = rows[200][4].parse().unwrap();
    assert!(cos_last > cos_first);
}

#[test]
fn equilibrium_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = kslab(&[
        "verify",
        "--suite",
        "equilibrium",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let report = read_json(&dir.path().join("verify.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(report["verdicts"].as_array().unwrap().len(), 1);
}

fn sweep_config(g: &str, ks: &str, t_end: f64) -> String {
    format!(
        r#"{{
        "frequency": {g},
        "initial": {{"kind": "cosine", "amplitude": 0.2, "center": 0.0}},
        "coupling": {ks},
        "n_theta": 64,
        "n_omega": 8,
        "t_end": {t_end},
        "sample_every": 0.5,
        "diagnostics": {{"intervals": [{{"kind": "iplus", "delta": 0.2}}]}}
    }}"#
    )
}

#[test]
fn sweep_final_r_tracks_equilibrium_and_increases() {
    let text = sweep_config(
        r#"{"kind": "uniform", "halfwidth": 0.05}"#,
        "[5, 10, 20, 40]",
        10.0,
    );
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = sweep(&cfg, &text, dir.path()).unwrap();
    assert_eq!(report.failed, 0);
    assert!(report.gap_finite);
    assert!(report.final_r_increasing, "{:?}", report.rows);
    let g = FrequencyDensity::uniform(0.05).unwrap();
    for row in &report.rows {
        let Equilibrium::Solution { r, .. } = equilibrium_r(&g, row.k).unwrap() else {
            panic!("K = {} has no fixed point", row.k);
        };
        let fr = row.final_r.unwrap();
        assert!((fr - r).abs() < 5e-3, "K = {}: {fr} vs {r}", row.k);
    }
    assert!(dir.path().join("sweep.csv").is_file());
    assert!(dir.path().join("K_003").join("summary.json").is_file());
}

#[test]
fn partially_locked_sweep_is_strictly_increasing() {
    let text = sweep_config(
        r#"{"kind": "uniform", "halfwidth": 0.05}"#,
        "[0.15, 0.2, 0.3]",
        150.0,
    )
    .replace("\"n_theta\": 64", "\"n_theta\": 128")
    .replace("\"n_omega\": 8", "\"n_omega\": 16");
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = sweep(&cfg, &text, dir.path()).unwrap();
    let g = FrequencyDensity::uniform(0.05).unwrap();
    for row in &report.rows {
        let Equilibrium::Solution { r, .. } = equilibrium_r(&g, row.k).unwrap() else {
            panic!("K = {} has no fixed point", row.k);
        };
        let fr = row.final_r.unwrap();
        assert!((fr - r).abs() < 5e-3, "K = {}: {fr} vs {r}", row.k);
    }
    assert!(report.final_r_strictly_increasing, "{:?}", report.rows);
}

#[test]
fn identical_sweep_synchronizes() {
    let text = sweep_config(r#"{"kind": "dirac"}"#, "[1, 2, 4]", 40.0);
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = sweep(&cfg, &text, dir.path()).unwrap();
    for row in &report.rows {
        assert!(row.final_r.unwrap() >= 0.99, "{row:?}");
        assert_eq!(row.r_infinity, 1.0);
    }
}

#[test]
fn sweep_isolates_failing_entries() {
    // every entry fails on the missing file; the sweep still reports both
    let text = sweep_config(r#"{"kind": "dirac"}"#, "[0, 1]", 2.0)
        .replace("\"n_omega\": 8", "\"n_omega\": 1");
    let mut cfg = ExperimentConfig::parse(&text).unwrap();
    cfg.initial_csv = Some("/nonexistent/cells.csv".into());
    let dir = tempfile::tempdir().unwrap();
    let report = sweep(&cfg, &text, dir.path()).unwrap();
    assert_eq!(report.failed, 2);
    assert!(report.rows.iter().all(|r| r.error.is_some()));
}

#[test]
fn kinetic_run_checks_pass_on_small_grid() {
    let cfg = ExperimentConfig::parse(IDENTICAL).unwrap();
    let run = run_kinetic(&cfg, 1.0).unwrap();
    let failing: Vec<_> = run.checks.iter().filter(|c| !c.pass).collect();
    assert!(failing.is_empty(), "{failing:?}");
    assert!(run.checks.iter().any(|c| c.name == "r_nondecreasing"));
}
