use swapsim::config::{validate, RunConfig, Scenario};
use swapsim::output::{read_manifest, verify_manifest, MANIFEST_NAME};
use swapsim::runner::{exit_code, run};
use swapsim::Error;

fn config(text: &str) -> RunConfig {
    RunConfig::parse(text).unwrap()
}

#[test]
fn fisher_report_writes_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::new(Scenario::FisherReport);
    let out = run(&cfg, Some(dir.path())).unwrap();
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
    let (entries, notes) = read_manifest(&dir.path().join(MANIFEST_NAME)).unwrap();
    assert_eq!(entries.len(), out.manifest.len());
    assert!(entries.iter().any(|e| e.path == "fisher_report.csv"));
    assert!(notes.iter().any(|n| n.contains("fisher_report")));
    let report = std::fs::read_to_string(dir.path().join("fisher_report.csv")).unwrap();
    assert!(report.lines().count() >= 2);
}

#[test]
fn tampered_output_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    run(&RunConfig::new(Scenario::FisherReport), Some(dir.path())).unwrap();
    std::fs::write(dir.path().join("gates.txt"), "changed").unwrap();
    assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["gates.txt".to_string()]);
}

#[test]
fn eigensolve_reports_singlet_below_triplet() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"
scenario = "eigensolve"
[tunneling]
barrier_height = 2.0
[numerics]
nk_x = 5
nk_y = 4
"#,
    );
    run(&cfg, Some(dir.path())).unwrap();
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let (es, et): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
    assert!(et > es);
    assert!(dir.path().join("singlet.wfld").exists());
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("scenario = \"eigensolve\"\n[coulomb]\ndelta_z = 500.0\n");
    assert!(validate(&cfg).has("out_of_range"));
    let err = run(&cfg, Some(&dir.path().join("never"))).unwrap_err();
    assert_eq!(exit_code(&err), 2);
    assert!(!dir.path().join("never").exists());
}

#[test]
fn parse_errors_carry_a_position() {
    match RunConfig::parse("scenario = \"eigensolve\"\nbogus = 1\n") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}
