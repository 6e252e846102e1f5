use std::path::Path;
use std::process::{Command, Output};

fn polaron(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polaron"))
        .args(args)
        .current_dir(dir)
        .env_remove("POLARON_WORKERS")
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn device_config_echoes_lambda() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.toml"),
        "[lattice]\nn_sites = 4\nn_ph_max = 2\n[device]\nphi_dc_over_pi = 0.97\ndelta_omega_over_2pi = 200.0\n[kpm]\nmoments = 500\n",
    )
    .unwrap();
    let out = polaron(&["spectral", "--config", "run.toml", "--out", "res", "--workers", "1"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&tmp.path().join("res"));
    let l = m["coupling"]["lambda_eff"].as_f64().unwrap();
    assert!((l - 1.41).abs() < 0.01, "{l}");
    assert_eq!(m["config"]["workers"], 1);
    assert!(m["wall_time_s"].as_f64().is_some());
}

#[test]
fn missing_sites_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("run.toml"), "[model]\nt0 = 1.0\ng = 0.5\n").unwrap();
    let out = polaron(&["spectral", "--config", "run.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lattice.n_sites"));
}

#[test]
fn both_parametrizations_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.toml"),
        "[lattice]\nn_sites = 4\n[model]\nt0 = 1.0\ng = 0.5\n[device]\nphi_dc_over_pi = 0.97\n",
    )
    .unwrap();
    let out = polaron(&["spectral", "--config", "run.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[device] or [model]"));
}

#[test]
fn compute_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    // beyond the dense budget of the oracle
    let out = polaron(
        &["oracle-compare", "--sites", "10", "--phonons", "8", "--t0", "1", "--g", "1", "--k", "0"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn single_worker_output_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |o: &'static str| {
        vec!["spectral", "--sites", "6", "--phonons", "3", "--phi", "0.98", "--moments", "800", "--workers", "1", "--out", o]
    };
    assert!(polaron(&args("a"), tmp.path()).status.success());
    assert!(polaron(&args("b"), tmp.path()).status.success());
    for j in 0..=3 {
        let f = format!("spectral_k{j}.csv");
        let a = std::fs::read(tmp.path().join("a").join(&f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(&f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let strip = |d: &str| {
        let mut m = manifest(&tmp.path().join(d));
        m.as_object_mut().unwrap().remove("wall_time_s");
        m["config"].as_object_mut().unwrap().remove("out");
        m
    };
    assert_eq!(strip("a"), strip("b"));
}

#[test]
fn loschmidt_k0_is_trivial() {
    let tmp = tempfile::tempdir().unwrap();
    let out = polaron(
        &["loschmidt", "--sites", "6", "--phonons", "3", "--phi", "0.98", "--k", "0", "--out", "l"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = rows(&tmp.path().join("l/loschmidt_k0.csv"));
    assert_eq!(data.len(), 400);
    for r in &data {
        assert!((r[1] - 1.0).abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn spectral_k0_sum_rule_and_single_peak() {
    let tmp = tempfile::tempdir().unwrap();
    let out = polaron(
        &["spectral", "--sites", "6", "--phonons", "3", "--phi", "0.98", "--k", "0", "--moments", "4000", "--out", "s"],
        tmp.path(),
    );
    assert!(out.status.success());
    let data = rows(&tmp.path().join("s/spectral_k0.csv"));
    let total: f64 = data.iter().map(|r| r[2]).sum();
    assert!((total - 1.0).abs() < 1e-3);
    let m = manifest(&tmp.path().join("s"));
    let peaks = m["results"]["spectra"][0]["peaks"].as_array().unwrap();
    assert_eq!(peaks.len(), 1);
    let t0 = m["config"]["model"]["t0"].as_f64().unwrap();
    assert!((peaks[0]["center"].as_f64().unwrap() + 2.0 * t0).abs() < 1e-2);
}

#[test]
fn gs_scan_switches_momentum() {
    let tmp = tempfile::tempdir().unwrap();
    let out = polaron(&["gs-scan", "--sites", "4", "--phonons", "3", "--phi", "0.95", "--out", "g"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = rows(&tmp.path().join("g/gs_scan.csv"));
    assert_eq!(data.first().unwrap()[3], 0.0);
    assert_eq!(data.last().unwrap()[3], 1.0);
    assert!(manifest(&tmp.path().join("g"))["results"]["critical_lambda"].as_f64().is_some());
}

#[test]
fn ramsey_check_agrees_with_direct() {
    let tmp = tempfile::tempdir().unwrap();
    let out = polaron(
        &["ramsey-check", "--sites", "3", "--phonons", "2", "--phi", "0.97", "--eta", "0.1", "--out", "r"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&tmp.path().join("r"));
    assert!(m["results"]["max_greens_deviation"].as_f64().unwrap() < 1e-8);
    assert_eq!(m["config"]["model"]["boundary"], "open");
}

#[test]
fn workers_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_polaron"))
        .args(["spectral", "--sites", "4", "--phonons", "1", "--t0", "1", "--g", "0.5", "--moments", "64", "--out", "w"])
        .current_dir(tmp.path())
        .env("POLARON_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let m = manifest(&tmp.path().join("w"));
    assert_eq!(m["config"]["workers"], 2);
    assert_eq!(m["config"]["workers_from"], "env");
}
