//! End-to-end runs of the `ptcs` binary.

use std::path::Path;
use std::process::{Command, Output};

fn ptcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptcs"))
        .args(args)
        .env("PTCS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn electron_config(dir: &Path) -> String {
    let path = dir.join("electron.json");
    std::fs::write(&path, r#"{"L": 2e-9, "particle": "electron", "nu": 0}"#).unwrap();
    path.display().to_string()
}

#[test]
fn energies_in_reduced_and_si_units() {
    let rows = data_rows(&stdout(&ptcs(&["eigen", "--nu", "1", "--nmax", "3"])));
    assert_eq!(rows.iter().map(|r| r[1]).collect::<Vec<_>>(), [4.0, 9.0, 16.0, 25.0]);

    let dir = tempfile::tempdir().unwrap();
    let cfg = electron_config(dir.path());
    let rows = data_rows(&stdout(&ptcs(&["--config", &cfg, "eigen", "--nmax", "1"])));
    let ev = rows[0][1] / 1.602_176_634e-19;
    assert!((ev - 0.094008).abs() < 1e-5, "{ev}");
}

#[test]
fn si_units_need_a_config() {
    let out = ptcs(&["--units", "SI", "eigen"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn coherent_state_summary() {
    let text = stdout(&ptcs(&["--nu", "1", "cs", "--q", "1.2", "--p", "-3"]));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((doc["norm"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((doc["mean_p"].as_f64().unwrap() + 3.0).abs() < 1e-10);
    assert!(doc["truncation_mass"].as_f64().unwrap() < 1e-8);
}

#[test]
fn wavefunction_file_in_si_units_is_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = electron_config(dir.path());
    let file = dir.path().join("psi.csv");
    let p_si = (4.0 * std::f64::consts::PI * 1.054_571_817e-34 / 2e-9).to_string();
    ptcs(&[
        "--config",
        &cfg,
        "cs",
        "--q",
        "4e-10",
        "--p",
        &p_si,
        "--points",
        "2001",
        "-o",
        file.to_str().unwrap(),
    ]);
    let rows = data_rows(&std::fs::read_to_string(&file).unwrap());
    let h = rows[1][0] - rows[0][0];
    let norm: f64 = rows.iter().map(|r| r[3] * r[3]).sum::<f64>() * h;
    assert!((norm - 1.0).abs() < 1e-6, "{norm}");
}

#[test]
fn quantized_potential_and_hamiltonian() {
    let rows = data_rows(&stdout(&ptcs(&["quantize", "--symbol", "potential", "--points", "7"])));
    for r in &rows {
        assert!((r[1] * r[0].sin().powi(2) - 1.5).abs() < 1e-10);
    }
    let text = stdout(&ptcs(&[
        "--nu",
        "0.5",
        "--nmax",
        "6",
        "quantize",
        "--symbol",
        "hamiltonian",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["nmax"], 6);
    for n in 0..=6 {
        let e = doc["re"][n][n].as_f64().unwrap();
        assert!((e / ((n as f64 + 1.5).powi(2)) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn expression_symbols() {
    let rows = data_rows(&stdout(&ptcs(&[
        "quantize",
        "--symbol",
        "-(nu+1)*cot(x):0",
        "--points",
        "5",
    ])));
    for r in &rows {
        assert!((r[1] + 1.0 / r[0].tan()).abs() < 1e-10 * (1.0 / r[0].tan()).abs().max(1.0));
    }
    let out = ptcs(&["quantize", "--symbol", "sin(x):3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lower_symbols() {
    let text = stdout(&ptcs(&[
        "symbols",
        "--observable",
        "momentum",
        "--q",
        "1",
        "--p",
        "2.5",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((doc["value"][0].as_f64().unwrap() - 2.5).abs() < 1e-10);
    let text = stdout(&ptcs(&[
        "--nmax",
        "24",
        "symbols",
        "--observable",
        "x:0",
        "--q",
        "1",
        "--p",
        "0",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(doc["value"][0].as_f64().unwrap() > 0.5);
}

#[test]
fn husimi_trajectory_and_render_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("rho.csv");
    let orbit = dir.path().join("orbit.csv");
    let png = dir.path().join("rho.png");
    let q0 = (std::f64::consts::PI / 5.0).to_string();
    stdout(&ptcs(&[
        "husimi",
        "--q",
        &q0,
        "--p",
        "4",
        "--t",
        "avg",
        "--grid-q",
        "32",
        "--grid-p",
        "32",
        "-o",
        grid.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&grid).unwrap();
    assert!(text.contains("# t = avg"));
    assert_eq!(data_rows(&text).len(), 32 * 32);
    stdout(&ptcs(&[
        "trajectory",
        "--q",
        &q0,
        "--p",
        "4",
        "-o",
        orbit.to_str().unwrap(),
    ]));
    stdout(&ptcs(&[
        "render",
        "--input",
        grid.to_str().unwrap(),
        "--overlay",
        orbit.to_str().unwrap(),
        "-o",
        png.to_str().unwrap(),
        "--title",
        "time average",
    ]));
    let bytes = std::fs::read(&png).unwrap();
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
}

#[test]
fn husimi_at_a_time_and_bad_time() {
    let text = stdout(&ptcs(&[
        "--nu", "1", "husimi", "--q", "1", "--p", "0", "--t", "0.3", "--grid-q", "8", "--grid-p", "8",
    ]));
    assert!(data_rows(&text).iter().all(|r| r[2] >= 0.0));
    let out = ptcs(&["husimi", "--q", "1", "--p", "0", "--t", "later"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evolution_revives() {
    let rows = data_rows(&stdout(&ptcs(&[
        "--nu", "1", "evolve", "--q", "1", "--p", "2", "--steps", "8",
    ])));
    let last = rows.last().unwrap();
    assert!((last[0] - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!((last[1] - last[5]).abs() < 1e-10);
    let e0 = rows[0][4];
    assert!(rows.iter().all(|r| (r[4] / e0 - 1.0).abs() < 1e-12));
}

#[test]
fn check_exit_codes() {
    let out = ptcs(&["check", "--suite", "susy"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 of"));
    let out = ptcs(&["check", "--suite", "susy", "--tol", "susy.factorization.nu=1=1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(ptcs(&["check", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(
        ptcs(&["check", "--suite", "susy", "--tol", "loose"]).status.code(),
        Some(2)
    );
}

#[test]
fn thread_count_must_parse() {
    let out = Command::new(env!("CARGO_BIN_EXE_ptcs"))
        .args(["eigen", "--nmax", "1"])
        .env("PTCS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
