use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qsr_core::cli::config::extract_config;
use tempfile::TempDir;

const SMALL: &str = "\
[noise]
intensity_d = 1e-6
coupling_lambda = 60.0

[run]
t_transient = 10.0
t_total = 50.95
n_realizations = 4
stepper = \"heun\"
components = [\"X\", \"Z\"]
";

fn qsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsr")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn ensemble_files_reproduce_from_their_own_echo() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let out = qsr(&["ensemble", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let x = read(&a, "run_X.csv");
    assert!(x.lines().any(|l| l == "omega,value"));
    assert!(a.join("run_Z.csv").exists());

    let b = tmp.path().join("b");
    let echo = a.join("run_X.csv");
    let out = qsr(&["ensemble", "--config", echo.to_str().unwrap(), "--out", b.to_str().unwrap(), "--threads", "3"]);
    assert!(out.status.success());
    assert_eq!(read(&b, "run_X.csv"), x);
    assert_eq!(read(&b, "run_Z.csv"), read(&a, "run_Z.csv"));
}

#[test]
fn data_rows_match_power_of_two_length() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = qsr(&["ensemble", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let rows = read(tmp.path(), "run_X.csv").lines().filter(|l| !l.starts_with('#')).count();
    // 4096 samples → 2049 one-sided bins plus the header
    assert_eq!(rows, 2049 + 1);
}

#[test]
fn sweep_writes_spectra_and_curve() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let dir = tmp.path().join("s");
    let out = qsr(&[
        "sweep", "--config", &cfg, "--axis", "D", "--values", "1e-7,1e-6,1e-5", "--out", dir.to_str().unwrap(), "--name", "sw",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for v in ["1e-7", "1e-6", "1e-5"] {
        assert!(dir.join(format!("sw_X_{v}.csv")).exists());
        assert!(dir.join(format!("sw_Z_{v}.csv")).exists());
    }
    let curve = read(&dir, "sr_curve.csv");
    let body: Vec<&str> = curve.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "value,height,frequency,fwhm,status");
    assert_eq!(body.len(), 4);
    assert!(curve.contains("# axis = noise_intensity_d"));
}

#[test]
fn structured_sweep_reproduces_from_embedded_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let args = |cfg: &str, dir: &Path| {
        qsr(&[
            "sweep", "--config", cfg, "--axis", "tau", "--values", "0,2,5", "--band", "0.7,2.1", "--format",
            "structured", "--out", dir.to_str().unwrap(),
        ])
    };
    assert!(args(&cfg, &a).status.success());
    let doc = read(&a, "run.json");
    let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
    assert_eq!(v["kind"], "sweep");
    assert_eq!(v["sr_curve"].as_array().unwrap().len(), 3);
    assert_eq!(v["spectra"].as_array().unwrap().len(), 6);

    let b = tmp.path().join("b");
    let json_path = a.join("run.json");
    assert!(args(json_path.to_str().unwrap(), &b).status.success());
    assert_eq!(read(&b, "run.json"), doc);
    assert!(extract_config(&doc).unwrap().contains("[noise]"));
}

#[test]
fn trajectory_dump_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = qsr(&["simulate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = read(tmp.path(), "run_trajectory.csv");
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "t,X,Y,Z,I");
    assert_eq!(body.len(), 4096 + 1);
    // at the optimal point the current column equals X
    for row in &body[1..] {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[4], cols[1]);
    }
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(tmp.path(), "[run]\ndt = 0.0\n");
    let out = qsr(&["ensemble", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.dt"));

    let syntax = write_config(tmp.path(), "[run]\ndt = \n");
    let out = qsr(&["ensemble", "--config", &syntax]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    // raw Itô steps at λ = 200, D = 1e-4 leave the norm bound
    let unstable = write_config(tmp.path(), "[noise]\nintensity_d = 1e-4\n[run]\nn_realizations = 2\n");
    let out = qsr(&["ensemble", "--config", &unstable, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let out = qsr(&["ensemble", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    assert_eq!(qsr(&["preset", "fig7"]).status.code(), Some(2));
}

#[test]
fn config_subcommand_echo_is_a_fixed_point() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let first = qsr(&["config", "--config", &cfg, "--seed", "77"]);
    assert!(first.status.success());
    let echo = String::from_utf8(first.stdout).unwrap();
    assert!(echo.contains("master_seed = 77"));
    let again = write_config(tmp.path(), &echo);
    let second = qsr(&["config", "--config", &again]);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), echo);
}

#[test]
fn seed_override_changes_values() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(qsr(&["ensemble", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(qsr(&["ensemble", "--config", &cfg, "--seed", "5", "--out", b.to_str().unwrap()]).status.success());
    assert_ne!(read(&a, "run_X.csv"), read(&b, "run_X.csv"));
}
