use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fwdrates_core::csv_io::{read_estimates, NumericTable};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwdrates"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str], out: &Path) -> String {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn identical_runs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("disability.toml");
    for dir in [a.path(), b.path()] {
        for cmd in ["rates", "cashflow", "verify", "repair", "compare"] {
            run_ok(&[cmd, "--config", &cfg, "--horizon", "3"], dir);
        }
        run_ok(&["simulate", "--config", &cfg, "--horizon", "3", "--paths", "20000"], dir);
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10, "{names:?}");
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs between runs");
    }
}

#[test]
fn curve_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("free_policy.toml");
    run_ok(&["rates", "--config", &cfg, "--horizon", "2"], dir.path());
    run_ok(&["cashflow", "--config", &cfg, "--horizon", "2"], dir.path());
    let mut checked = 0;
    for entry in fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let bytes = fs::read(&path).unwrap();
        assert!(!bytes.contains(&b'\r'));
        let table = NumericTable::read(bytes.as_slice()).unwrap();
        let mut again = Vec::new();
        table.write(&mut again).unwrap();
        assert_eq!(again, bytes, "{}", path.display());
        checked += 1;
    }
    assert_eq!(checked, 6);
}

#[test]
fn verify_reports_disability_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["verify", "--config", &config("disability.toml"), "--horizon", "3"], dir.path());
    let marks = |def: &str| -> Vec<bool> {
        let line = out.lines().find(|l| l.starts_with(def)).unwrap();
        line.split_whitespace().skip(1).step_by(2).map(|w| w == "pass").collect()
    };
    assert_eq!(marks("marginal"), [true, true, false, false]);
    assert_eq!(marks("equations"), [false, true, true, false]);
    assert_eq!(marks("statewise"), [false, false, true, true]);
    assert!(dir.path().join("verify.txt").exists());
}

#[test]
fn deterministic_law_passes_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("det.toml");
    fs::write(&cfg, "[model]\npreset = \"disability\"\nlaw = \"deterministic\"\n[grid]\nhorizon = 2.0\n").unwrap();
    let out = run_ok(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.matches("FAIL").count(), 0, "{out}");
    assert_eq!(out.matches("pass").count(), 12, "{out}");
}

#[test]
fn free_policy_cash_flow_matches_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("free_policy.toml");
    run_ok(
        &["cashflow", "--config", &cfg, "--definition", "statewise", "--horizon", "3"],
        dir.path(),
    );
    run_ok(&["simulate", "--config", &cfg, "--horizon", "3", "--paths", "200000"], dir.path());
    let cf = NumericTable::read(fs::read(dir.path().join("cashflow_statewise.csv")).unwrap().as_slice()).unwrap();
    let a = cf.rows.last().unwrap()[cf.column("A").unwrap()].unwrap();
    let est = read_estimates(fs::read(dir.path().join("estimates.csv")).unwrap().as_slice()).unwrap();
    let payments = est.rows.iter().find(|e| e.target.starts_with("payments")).unwrap();
    assert!(payments.z_score(a) < 4.0, "{a} vs {payments:?}");
}

#[test]
fn repair_writes_augmented_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["repair", "--config", &config("disability.toml"), "--horizon", "3"], dir.path());
    assert!(out.contains("repaired model"));
    let text = fs::read_to_string(dir.path().join("repaired_model.toml")).unwrap();
    assert!(text.contains("dead from active"));
    let cf = NumericTable::read(fs::read(dir.path().join("cashflow_repaired.csv")).unwrap().as_slice()).unwrap();
    let last = cf.rows.last().unwrap();
    let (a, exact) = (last[1].unwrap(), last[3].unwrap());
    assert!((a - exact).abs() < 1e-6, "{a} vs {exact}");
}

#[test]
fn violated_preconditions_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("disability.toml");
    let cases: [(&[&str], &str); 4] = [
        (&["rates", "--config", &cfg, "--state", "7"], "state 7"),
        (&["rates", "--config", &cfg, "--step=-0.1"], "step"),
        (&["rates", "--config", "/nonexistent.toml"], "reading config"),
        (&["simulate", "--config", &cfg, "--paths", "1"], "paths"),
    ];
    for (args, needle) in cases {
        let o = run(args, dir.path());
        assert!(!o.status.success(), "{args:?} succeeded");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}
