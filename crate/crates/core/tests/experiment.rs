use std::fs;

use ns_torus::estimates::{InequalityReport, ReportSet, Status};
use ns_torus::experiment::{
    emit_report, format_report, parse_config, run::config_hash, run_experiment, scenarios, sweep,
    verify, ExperimentError, SweepGrid, EXIT_ERROR, EXIT_FAIL, EXIT_PASS,
};

fn quick(name: &str) -> ns_torus::experiment::ExperimentSpec {
    let mut spec = scenarios::load(name).unwrap();
    spec.dt_halving = false;
    spec
}

#[test]
fn smoke_run_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&quick("stability-smoke"), dir.path()).unwrap();
    assert_eq!(a.summary.exit_code, EXIT_PASS, "{}", a.summary.text);
    for f in [
        "spec.toml",
        "inequalities.json",
        "budgets.json",
        "windows.csv",
        "report.txt",
        "run.json",
        "base/diagnostics.csv",
        "perturbation/summary.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("FAILED").exists());
    let spec_text = fs::read_to_string(dir.path().join("spec.toml")).unwrap();
    assert_eq!(config_hash(&spec_text), a.config_hash);
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["config_hash"], a.config_hash.as_str());

    let windows = fs::read_to_string(dir.path().join("windows.csv")).unwrap();
    assert_eq!(windows.lines().count(), 1 + 3);
    assert!(windows.starts_with("window,t0,t1,"));

    let before = fs::read(dir.path().join("inequalities.json")).unwrap();
    let again = verify(dir.path()).unwrap();
    assert_eq!(again, a.summary);
    assert_eq!(
        fs::read(dir.path().join("inequalities.json")).unwrap(),
        before
    );
    assert_eq!(emit_report(dir.path()).unwrap(), a.summary);
}

#[test]
fn violated_hypotheses_give_vacuous_conclusions() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&quick("hypothesis-violation"), dir.path()).unwrap();
    assert_eq!(a.summary.exit_code, EXIT_PASS);
    assert_eq!(a.reports.get("4.12.2").unwrap().status, Status::Unmet);
    for id in ["4.13", "4.25.gamma"] {
        let r = a.reports.get(id).unwrap();
        assert_eq!(r.status, Status::Vacuous, "{id}");
        assert!(r.note.as_deref().unwrap().contains("4.12.2"));
    }
    assert!(a.summary.text.starts_with("PASS"));
}

#[test]
fn direct_run_matches_the_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = quick("stability-smoke");
    spec.direct = true;
    spec.windows = 1;
    let a = run_experiment(&spec, dir.path()).unwrap();
    let r = a.reports.get("split").unwrap();
    assert!(r.informational);
    assert_eq!(r.status, Status::Pass, "{}", r.worst_margin);
    assert!(dir.path().join("direct/diagnostics.csv").exists());
}

#[test]
fn blow_up_leaves_a_marker_and_partial_output() {
    let text = "name = \"boom\"\nnu = 0.001\ndt = 0.2\nwindow = 40.0\ndt_halving = false\n\
                [grid]\nn = 16\n[base]\ninitial = { kind = \"random\", decay = 0.5, h1_sq = 1e12 }\n";
    let spec = parse_config(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&spec, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_ERROR);
    assert!(dir.path().join("FAILED").exists());
    assert!(dir.path().join("partial/diagnostics.csv").exists());
    let s = emit_report(dir.path()).unwrap();
    assert_eq!(s.exit_code, EXIT_ERROR);
    assert!(s.text.starts_with("ERROR"));
}

#[test]
fn missing_artifacts_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let err = emit_report(dir.path()).unwrap_err();
    assert!(matches!(err, ExperimentError::MissingArtifacts(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(matches!(
        verify(dir.path()),
        Err(ExperimentError::MissingArtifacts(_))
    ));
}

#[test]
fn failing_inequality_is_named_first() {
    let mut set = ReportSet::new();
    set.push(InequalityReport::scalar("ok", "fine", 1.0, 0.0));
    set.push(InequalityReport::scalar("bad", "broken", -1.0, 1e-9));
    set.push(InequalityReport::scalar("info", "monitor", -1.0, 0.0).informational());
    let s = format_report(&set);
    assert_eq!(s.exit_code, EXIT_FAIL);
    assert!(s
        .text
        .lines()
        .next()
        .unwrap()
        .starts_with("FAIL: bad (1 failing)"));
}

#[test]
fn sweep_runs_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = quick("stability-smoke");
    spec.windows = 1;
    let grid = SweepGrid {
        gamma_fractions: vec![0.25, 1.0],
        windows: vec![],
        forcing_scales: vec![1.0, 200.0],
    };
    let members = sweep(&spec, &grid, dir.path(), 2).unwrap();
    assert_eq!(members.len(), 4);
    assert!(
        members.iter().all(|m| m.exit_code == EXIT_PASS),
        "{members:?}"
    );
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    for m in &members {
        assert!(m.dir.join("inequalities.json").exists());
    }
    let big = members.iter().find(|m| m.forcing_scale == 200.0).unwrap();
    let reports = emit_report(&big.dir).unwrap();
    assert!(reports.text.contains("vacuous"));
}
