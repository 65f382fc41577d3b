use std::path::Path;
use std::process::Command;

use baro_attitude::harness::{io, CampaignConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_baro-att"))
}

fn config_path() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.toml")
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_owned).collect()
}

#[test]
fn simulate_writes_runs_summary_and_gramian() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "simulate",
            "--config",
            config_path(),
            "--runs",
            "2",
            "--seed",
            "11",
            "--duration",
            "3",
        ])
        .arg("--out")
        .arg(&out)
        .args([
            "--gramian",
            "--window",
            "1",
            "--window-step",
            "1",
            "--export-streams",
        ])
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert_eq!(header(&out.join("run_000.csv")), io::RUN_HEADER);
    assert_eq!(header(&out.join("run_001.csv")), io::RUN_HEADER);
    assert_eq!(header(&out.join("summary.csv")), io::SUMMARY_HEADER);
    assert_eq!(header(&out.join("gramian.csv")), io::GRAMIAN_HEADER);
    let windows = csv::Reader::from_path(out.join("gramian.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(windows, 3);
    for f in [
        "run_000_truth.csv",
        "run_000_imu.csv",
        "run_000_baro.csv",
        "run_000_mag.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rows = csv::Reader::from_path(out.join("summary.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(rows, 601);

    let written = CampaignConfig::from_file(&out.join("config.toml")).unwrap();
    assert_eq!(
        (written.n_runs, written.seed, written.duration),
        (2, 11, 3.0)
    );
}

#[test]
fn noise_free_flag_reaches_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nf");
    let status = bin()
        .args([
            "simulate",
            "--config",
            config_path(),
            "--runs",
            "1",
            "--duration",
            "1",
            "--noise-free",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let cfg = CampaignConfig::from_file(&out.join("config.toml")).unwrap();
    assert_eq!(cfg.noise, cfg.noise.noise_free());
}

#[test]
fn config_errors_exit_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "n_runs = 2\n[riccati]\nmeasurement_variance = -1.0\n").unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("measurement noise"));

    let missing = bin()
        .args(["simulate", "--config", "/nonexistent.toml", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "n_run = 2\n").unwrap();
    let out = bin()
        .args(["gramian", "--config"])
        .arg(&unknown)
        .args(["--out", "x.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

#[test]
fn default_config_matches_committed_file() {
    let out = bin().arg("default-config").output().unwrap();
    assert!(out.status.success());
    let printed = CampaignConfig::from_toml_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(
        printed,
        CampaignConfig::from_file(Path::new(config_path())).unwrap()
    );
}
