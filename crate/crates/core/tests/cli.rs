// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use ramopt::config::ExperimentConfig;
use ramopt::io::{parse_csv, parse_density, quadrature_csv};
use ramopt::tomography::simulate_homodyne;

fn ramopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn optimize_reaches_calibrated_plateau() {
    let dir = tempfile::tempdir().unwrap();
    let out = ramopt(&["optimize", "--out-dir", path(dir.path())]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("final_best_eta = "));

    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with(&format!("# ramopt {} seed=42\n", ramopt::VERSION)));
    let rows = parse_csv(&trace, &["generation", "best_eta", "mean_eta"]).unwrap();
    let best: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    assert!(*best.last().unwrap() >= 0.90);
    assert!(best.windows(2).all(|w| w[1] >= w[0]));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["pipeline"], "optimize");
    assert_eq!(manifest["seed"], 42);
    let files = manifest["files"].as_array().unwrap();
    for f in files {
        let bytes = std::fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = ramopt(&[
        "sam-qst",
        "--seed",
        "7",
        "--quiet",
        "--out-dir",
        path(dir.path()),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 7"));
    let rho = std::fs::read_to_string(dir.path().join("rho_R.csv")).unwrap();
    assert!(rho.contains("seed=7"));
    parse_density(&rho).unwrap();
}

#[test]
fn tomo_reads_quadrature_file() {
    let dir = tempfile::tempdir().unwrap();
    let alpha = num_complex::Complex64::new(0.9f64.sqrt(), 0.0);
    let samples = simulate_homodyne(alpha, 2000, 1.0, 3).unwrap();
    let q = dir.path().join("q.csv");
    std::fs::write(&q, quadrature_csv(&samples, 3)).unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.tomography.quadrature_path = Some(path(&q).to_string());
    cfg.tomography.iterations = 100;
    let config = dir.path().join("c.json");
    std::fs::write(&config, cfg.to_json()).unwrap();
    let out_dir = dir.path().join("out");
    let out = ramopt(&[
        "tomo",
        "--config",
        path(&config),
        "--out-dir",
        path(&out_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let f_smg: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("f_smg = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(f_smg > 0.97, "{f_smg}");
    assert!(stdout.contains("above_no_cloning_limit = true"));
}

#[test]
fn config_errors_list_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{"seed": 1, "de": {"population_size": 2, "bogus": 1}, "tomography": {"n_max": 0}}"#,
    )
    .unwrap();
    let out = ramopt(&[
        "optimize",
        "--config",
        path(&config),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    assert!(
        line.starts_with("error kind=config code=2 message=\""),
        "{line}"
    );
    for needle in [
        "de.population_size",
        "NP >= 4",
        "de.bogus: unknown key",
        "tomography.n_max",
    ] {
        assert!(line.contains(needle), "{needle} missing from {line}");
    }
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn missing_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ramopt(&[
        "modes",
        "--config",
        "/nonexistent/ramopt.json",
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let mut cfg = ExperimentConfig::default();
    cfg.tomography.quadrature_path = Some("/nonexistent/q.csv".into());
    let config = dir.path().join("c.json");
    std::fs::write(&config, cfg.to_json()).unwrap();
    let out = ramopt(&[
        "tomo",
        "--config",
        path(&config),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=io"));

    let out = ramopt(&["plot"]);
    assert!(!out.status.success());
}

#[test]
fn config_round_trip_and_defaults() {
    let shipped = Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/default.json"
    ));
    let cfg = ExperimentConfig::load(shipped).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(
        std::fs::read_to_string(shipped).unwrap().trim_end(),
        cfg.to_json().trim_end()
    );

    let minimal = ExperimentConfig::from_json(r#"{"seed": 5}"#).unwrap();
    assert_eq!(minimal.seed, 5);
    assert_eq!(minimal.de, cfg.de);
}
