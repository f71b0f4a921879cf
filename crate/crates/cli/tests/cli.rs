use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MESH: &str = r#""mesh": {"L": 1.0, "x0": 0.5, "c1": 1.0, "c2": 2.0, "N": 41}"#;

fn plate_lab(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_plate-lab"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn summary(dir: &Path, sub: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(format!("{sub}.json"))).unwrap()).unwrap()
}

#[test]
fn missing_mesh_size_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plate_lab(
        "simulate",
        r#"{"mesh": {"L": 1.0, "x0": 0.5, "c1": 1.0, "c2": 2.0}}"#,
        tmp.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh.N"));
}

#[test]
fn misaligned_interface_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plate_lab(
        "spectrum",
        r#"{"mesh": {"L": 1.0, "x0": 0.333, "c1": 1.0, "c2": 2.0, "N": 41}}"#,
        tmp.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh.x0"));
}

#[test]
fn zero_threads_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plate_lab("spectrum", &format!("{{{MESH}}}"), tmp.path(), &["--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn undamped_simulation_conserves_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{{MESH}, "damping": {{"a": 0.0, "b": 0.0}}, "evolution": {{"dt": 1e-3, "T": 1.0}}}}"#);
    let out = plate_lab("simulate", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(tmp.path(), "simulate");
    assert!(s["results"]["energy_drift"].as_f64().unwrap() <= 1e-10);
    assert_eq!(s["results"]["damped"], serde_json::json!(false));
    let csv = fs::read_to_string(tmp.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,E,dE_boundary,u_trace_L,v_trace_L\n"));
    assert_eq!(csv.lines().count(), 1 + 1001);
}

#[test]
fn damped_spectrum_lies_in_the_left_half_plane() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plate_lab("spectrum", &format!("{{{MESH}}}"), tmp.path(), &["--format", "csv,json,svg"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(tmp.path(), "spectrum");
    assert!(s["results"]["spectral_abscissa"].as_f64().unwrap() < 0.0);
    assert!(tmp.path().join("out/spectrum.csv").exists());
    assert!(tmp.path().join("out/spectrum.svg").exists());
}

#[test]
fn wrong_expectation_exits_with_assertion_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"carleman": {"psi": [{"i": 2, "j": 0, "c": 1.0}, {"i": 1, "j": 0, "c": -0.9},
        {"i": 0, "j": 2, "c": -1.0}, {"i": 0, "j": 1, "c": 0.8}], "lambda_c": 4.0,
        "region": {"bounds": [[0.0, 1.0], [0.0, 1.0]], "n": [32, 32]}, "bracket_samples": 100,
        "expect": "certified"}}"#;
    let out = plate_lab("subellipticity", cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(summary(tmp.path(), "subellipticity")["passed"] == serde_json::json!(false));
}

#[test]
fn seed_override_changes_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{{MESH}, "resolvent": {{"samples": 3}}}}"#);
    plate_lab("factorized-check", &cfg, tmp.path(), &["--seed", "1"]);
    let a = fs::read_to_string(tmp.path().join("out/factorized.csv")).unwrap();
    plate_lab("factorized-check", &cfg, tmp.path(), &["--seed", "2"]);
    let b = fs::read_to_string(tmp.path().join("out/factorized.csv")).unwrap();
    assert_ne!(a, b);
}
