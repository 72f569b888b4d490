use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qmetro(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmetro"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("failed to spawn qmetro")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn verify_on_defaults_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmetro(dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("reports/verify.json")).unwrap()).unwrap();
    assert_eq!(report["version"], qmetro::config::VERSION);
    assert_eq!(report["data"]["all_passed"], true);
    for check in report["data"]["checks"].as_array().unwrap() {
        for key in ["name", "anchor", "measured", "bound", "tol", "pass", "seconds"] {
            assert!(check.get(key).is_some(), "missing {key} in {check}");
        }
    }
}

#[test]
fn trajectory_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "trajectory", "--chains", "20", "--iterations", "30"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(qmetro(&a, &args).status.success());
    assert!(qmetro(&b, &args).status.success());
    let csv_a = fs::read_to_string(a.join("states/trajectory.csv")).unwrap();
    let csv_b = fs::read_to_string(b.join("states/trajectory.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert!(csv_a.starts_with(&format!("# {}", qmetro::config::VERSION)));
    // header plus one row per iteration
    assert_eq!(csv_a.lines().count(), 2 + 20 * 30);

    let c = dir.path().join("c");
    assert!(qmetro(&c, &["--seed", "8", "trajectory", "--chains", "20", "--iterations", "30"]).status.success());
    assert_ne!(csv_a, fs::read_to_string(c.join("states/trajectory.csv")).unwrap());
}

#[test]
fn sweep_residual_decreases_with_precision() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n": 2, "sweep": {"r": [2, 3, 4]}}"#);
    let out = qmetro(dir.path(), &["--config", &cfg, "sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.path().join("sweeps/sweep.csv"))
        .unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["r", "g", "tau", "beta", "residual", "gap", "tmix_est", "dist"]
    );
    let col = headers.iter().position(|h| h == "residual").unwrap();
    let residuals: Vec<f64> = reader.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(residuals.len(), 3);
    assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qmetro(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(qmetro(dir.path(), &[]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"g": 4}"#);
    let out = qmetro(dir.path(), &["--config", &cfg, "model"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd"));
}

#[test]
fn every_artifact_carries_the_version() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [&["model"][..], &["qpe-table"], &["channel-build", "--tau", "0.2"], &["gap"], &["evolve", "--times", "0,1"]] {
        let out = qmetro(dir.path(), cmd);
        assert!(out.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for (sub, file) in [
        ("reports", "model.json"),
        ("reports", "qpe_table.json"),
        ("reports", "channel.json"),
        ("reports", "gap.json"),
        ("states", "evolve.json"),
    ] {
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(sub).join(file)).unwrap()).unwrap();
        assert_eq!(v["version"], qmetro::config::VERSION, "{file}");
    }
    let channel: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("reports/channel.json")).unwrap()).unwrap();
    let dump = &channel["data"]["channel"];
    assert_eq!(dump["rows"], 16);
    assert_eq!(dump["re"].as_array().unwrap().len(), 256);
    assert!(channel["data"]["trace_preservation_defect"].as_f64().unwrap() < 1e-10);
}
