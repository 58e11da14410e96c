use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = "epsilon=1e-2\nc=1\nkappa=0.05\nxi0=2\nT=0.5\ngamma=0.1\nc0=1\n";

fn acl(dir: &Path, config: &str, mode: &str, extra: &[&str], env: &[(&str, &str)]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_acl"));
    cmd.args(["run", "--config"]).arg(&cfg).args(["--mode", mode, "--out"]).arg(dir.join("out")).args(extra);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).trim().to_string()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# epsilon="));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn missing_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = acl(dir.path(), &BASE.replace("xi0=2\n", ""), "full", &[], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o), "missing key: xi0");
}

#[test]
fn environment_supplies_missing_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASE.replace("xi0=2\n", "") + "eta=1\n";
    let o = acl(dir.path(), &cfg, "lz-table", &[], &[("ACL_XI0", "2")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn coarse_grid_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = acl(dir.path(), &format!("{BASE}n_points=64\n"), "outer", &[], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("resolution:"));
}

#[test]
fn lz_table_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = acl(dir.path(), &format!("{BASE}eta=1,1.5\n"), "lz-table", &["--plots"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/lz_table.csv")).unwrap();
    let eta = column(&text, "eta");
    let a2 = column(&text, "a2");
    let num = column(&text, "numeric_m11");
    for k in 0..eta.len() {
        assert!((a2[k] - (-std::f64::consts::PI * eta[k] * eta[k]).exp()).abs() < 1e-14);
        assert!((num[k] - a2[k]).abs() < 1e-3);
    }
    assert!(dir.path().join("out/lz_table.svg").exists());
}

#[test]
fn lz_table_reports_tolerance_failure() {
    // at S = 200 the η = 0.5 entry misses 1e-3 by the finite-horizon remainder
    let dir = tempfile::tempdir().unwrap();
    let o = acl(dir.path(), &format!("{BASE}eta=0.5,1\n"), "lz-table", &[], &[]);
    assert_eq!(o.status.code(), Some(1));
    let reason = stderr(&o);
    assert!(reason.starts_with("tolerance: lz-table eta=0.5"), "{reason}");
    assert_eq!(reason.lines().count(), 1);
    assert!(dir.path().join("out/lz_table.csv").exists());
}

#[test]
fn full_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{BASE}n_points=16384\n");
    let o = acl(dir.path(), &cfg, "full", &["--plots"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["report.csv", "report.txt", "snapshot_start.csv", "snapshot_before.csv", "snapshot_after.csv", "snapshot_after.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let p = column(&report, "p_measured")[0];
    assert!((p - 0.2079).abs() / 0.2079 < 0.1, "{p}");
    let first = fs::read(out.join("snapshot_after.csv")).unwrap();
    let o = acl(dir.path(), &cfg, "full", &[], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(out.join("snapshot_after.csv")).unwrap(), first);
}

#[test]
fn convergence_requires_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = acl(dir.path(), &format!("{BASE}sweep=1e-2,1e-3\n"), "convergence", &[], &[]);
    assert_eq!(o.status.code(), Some(2));
}
