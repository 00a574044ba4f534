use std::fs;
use std::process::Command;

fn polydisc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polydisc"))
}

#[test]
fn unknown_subcommand_exits_with_usage() {
    let out = polydisc().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_config_is_rejected() {
    for args in [&["tusnady", "--n", "64..8"][..], &["bracket", "--d", "7"], &["geodisc", "--trials", "0"]] {
        let out = polydisc().args(args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
    }
}

#[test]
fn identical_configs_give_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let ok = polydisc()
            .args(["tusnady", "--d", "2", "--n", "16..64", "--seed", "3", "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(ok.success());
    }
    let read = |i: usize, f: &str| fs::read(dirs[i].path().join(f)).unwrap();
    assert_eq!(read(0, "tusnady.csv"), read(1, "tusnady.csv"));
    let table = String::from_utf8(read(0, "tusnady.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let summary: serde_json::Value = serde_json::from_slice(&read(0, "tusnady.json")).unwrap();
    assert_eq!(summary["config"]["seed"], 3);
}

#[test]
fn spectrum_reads_a_polytope_and_exports_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let body = dir.path().join("square.json");
    fs::write(&body, r#"{"vertices": [[0.25,0.25],[0.75,0.25],[0.75,0.75],[0.25,0.75]]}"#).unwrap();
    let ok = polydisc()
        .args(["spectrum", "--n", "4..8", "--trials", "4", "--polytope"])
        .arg(&body)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(ok.success());
    let coeffs = fs::read_to_string(dir.path().join("spectrum_n8.csv")).unwrap();
    assert!(coeffs.starts_with("xi_1,xi_2,re,im\n"));
    assert_eq!(coeffs.lines().count(), 1 + 17 * 17);
}

#[test]
fn fit_recovers_a_squared_log() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let mut text = String::from("n,y\n");
    for k in 3..10 {
        let n = 2f64.powi(k);
        text.push_str(&format!("{n},{}\n", n.ln().powi(2)));
    }
    fs::write(&table, text).unwrap();
    let out = polydisc().arg("fit").arg(&table).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let exponent: f64 = stdout.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((exponent - 2.0).abs() < 0.01);
}
