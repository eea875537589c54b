use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rydgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydgate")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = rydgate(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn storage_efficiency_example() {
    let r = report(&["sr-efficiency", "--C", "21", "--kin-ratio", "0.9825", "--gamma-rg-inv-us", "7", "--t-us", "2"]);
    assert!((r["result"]["eta_sr"].as_f64().unwrap() - 0.661).abs() < 5e-4);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "sr-efficiency");
    assert_eq!(r["units"]["time"], "us");
    assert_eq!(r["config"]["t_us"], 2.0);
}

#[test]
fn report_is_reproducible_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |p: &str| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timestamp_unix");
        v
    };
    let (a, b) = (path(dir.path(), "a.json"), path(dir.path(), "b.json"));
    for out in [&a, &b] {
        assert!(rydgate(&["--out", out, "ghz-model", "--mc-samples", "500", "--seed", "9"]).status.success());
    }
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let counts = path(dir.path(), "truth.csv");
    let r = report(&["sim-run", "--plan", "cphase-truth", "--shots", "2e4", "--seed", "2", "--counts-out", &counts]);
    assert_eq!(r["seed"], 2);
    assert!(dir.path().join("truth.sidecar.json").is_file());
    let tomo = path(dir.path(), "tomo.csv");
    report(&["sim-run", "--plan", "tomography", "--shots", "4000", "--seed", "3", "--counts-out", &tomo]);
    let p = report(&["tomo-process", "--counts", &tomo]);
    let f = p["result"]["fidelity_ps"].as_f64().unwrap();
    assert!((f - 0.786).abs() < 0.03, "{f}");
    let e = report(&["tomo-efficiency", "--counts", &tomo]);
    assert!((e["result"]["eta_bar"].as_f64().unwrap() - 0.417).abs() < 0.02);
    let s = report(&["tomo-state", "--counts", &tomo, "--input", "HH"]);
    assert!((s["result"]["trace"].as_f64().unwrap() - 0.351).abs() < 0.03);
}

#[test]
fn parity_simulation_feeds_ghz_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let counts = path(dir.path(), "par.csv");
    let csv = path(dir.path(), "parity.csv");
    report(&["sim-run", "--plan", "parity", "--n", "3", "--shots", "2e4", "--physical", "true", "--counts-out", &counts]);
    let r = report(&["--csv", &csv, "ghz-analyze", "--counts", &counts, "--n", "3"]);
    let model = report(&["ghz-model", "--n-min", "3", "--n-max", "3", "--v-c-eff", "0.86"]);
    let (sim, cf) = (
        r["result"]["summary"]["fidelity"].as_f64().unwrap(),
        model["result"]["predictions"][0]["fidelity"].as_f64().unwrap(),
    );
    assert!((sim - cf).abs() < 0.03, "{sim} vs {cf}");
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("theta_rad,S,S_err,N"));
}

#[test]
fn spectrum_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "spectrum.csv");
    report(&["--csv", &csv, "spectrum-gen", "--stage", "absorption", "--seed", "4"]);
    let r = report(&["spectrum-fit", "--input", &csv, "--stage", "absorption", "--C", "15"]);
    let c = &r["result"]["fitted"]["C"];
    assert!((c["value"].as_f64().unwrap() - 21.4).abs() < 4.0 * c["error"].as_f64().unwrap());
}

#[test]
fn tables_and_rates() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "tt.csv");
    let g = report(&["--csv", &csv, "gate-model"]);
    assert!((g["result"]["eta_bar"].as_f64().unwrap() - 0.417).abs() < 1e-3);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 33);
    let flat = report(&["gate-model", "--eta", "0.5,0.5,0.5,0.5"]);
    assert_eq!(flat["result"]["eta_bar"], 0.5);
    assert_eq!(rydgate(&["gate-model", "--eta", "0.5,0.5"]).status.code(), Some(2));
    let r = report(&["rates"]);
    assert_eq!(r["result"]["coincidences"].as_array().unwrap().len(), 5);
    let b = report(&["blockade"]);
    assert!((b["result"]["blockade_radius_um"].as_f64().unwrap() - 6.3).abs() < 0.1);
    report(&["coupling"]);
}

#[test]
fn infinite_coherence_time() {
    let r = report(&["sr-efficiency", "--gamma-rg-inv-us", "inf"]);
    assert_eq!(r["config"]["gamma_rg_inv_us"], "inf");
    assert!((r["result"]["eta_sr"].as_f64().unwrap() - 0.880).abs() < 5e-4);
}

#[test]
fn config_file_needs_units() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "c.json");
    std::fs::write(&cfg, r#"{"params": {"t_us": 2}}"#).unwrap();
    assert_eq!(rydgate(&["--config", &cfg, "sr-efficiency"]).status.code(), Some(2));
    std::fs::write(&cfg, r#"{"units": {"time": "us"}, "params": {"t_us": 0}}"#).unwrap();
    let r = report(&["--config", &cfg, "sr-efficiency"]);
    assert!((r["result"]["eta_sr"].as_f64().unwrap() - 0.880).abs() < 5e-4);
}

#[test]
fn exit_codes() {
    let bad = rydgate(&["sr-efficiency", "--kin-ratio", "1.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("invalid_parameter"));
    assert!(bad.stdout.is_empty());
    assert_eq!(rydgate(&["tomo-state", "--counts", "/nonexistent.csv", "--input", "HH"]).status.code(), Some(2));
    assert_eq!(rydgate(&["--out", "/nonexistent/dir/r.json", "rates"]).status.code(), Some(2));
    assert_eq!(rydgate(&["spectrum-gen", "--C", "inf"]).status.code(), Some(2));
    // Four computational inputs cannot span the efficiency-matrix space.
    let dir = tempfile::tempdir().unwrap();
    let counts = path(dir.path(), "truth.csv");
    report(&["sim-run", "--plan", "cphase-truth", "--shots", "1000", "--counts-out", &counts]);
    let singular = rydgate(&["tomo-efficiency", "--counts", &counts]);
    assert_eq!(singular.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&singular.stderr).contains("singular_input_set"));
}
