use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ns_torus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ns-torus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lists_and_prints_scenarios() {
    let o = ns_torus(&["scenarios"]);
    assert!(o.status.success());
    let names = stdout(&o);
    assert_eq!(names.lines().count(), 5);
    assert!(names.contains("stability-theorem"));
    let o = ns_torus(&["scenarios", "forced-2d"]);
    assert!(stdout(&o).contains("name = \"forced-2d\""));
}

#[test]
fn run_report_and_verify_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smoke");
    let o = ns_torus(&[
        "run",
        "--scenario",
        "stability-smoke",
        "--out",
        path(&out),
        "--dt-halving",
        "false",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("PASS"));
    assert!(fs::read_to_string(out.join("spec.toml"))
        .unwrap()
        .contains("seed = 3"));

    let report = ns_torus(&["report", path(&out)]);
    assert_eq!(report.status.code(), Some(0));
    let verify = ns_torus(&["verify", path(&out)]);
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(stdout(&report), stdout(&verify));
    assert!(text.starts_with(&stdout(&report)));
}

#[test]
fn exit_codes_distinguish_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ns_torus(&["report", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing artifacts"));

    let cfg = dir.path().join("bad.toml");
    fs::write(
        &cfg,
        "name = \"x\"\nnu = 1.0\ndt = 0.1\nviscosity = 2\n[grid]\nn = 8\n",
    )
    .unwrap();
    let o = ns_torus(&["run", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("viscosity") && stderr(&o).contains("line 4"));

    fs::write(
        &cfg,
        "name = \"x\"\nnu = 1.0\ndt = 0.1\n[grid]\nn = 8\n[perturbation]\n[stability]\nc3 = 0.02\ngamma = 5.0\n",
    )
    .unwrap();
    let o = ns_torus(&["run", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("exceeds γ*"));
}

#[test]
fn calibrate_prints_constants() {
    let o = ns_torus(&["calibrate", "--n", "8", "--samples", "4", "--seed", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["c1 =", "c3 =", "c4 =", "c5 =", "gamma_star =", "window ="] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn sweep_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = ns_torus(&[
        "sweep",
        "--scenario",
        "stability-smoke",
        "--out",
        path(dir.path()),
        "--dt-halving",
        "false",
        "--gamma-fractions",
        "0.5,1.0",
        "--parallel",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
