mod common;

use dlgibbs_cli::execute;

#[test]
fn mix_on_davies_zz3() {
    let report = execute(&common::load("mix_zz3"), false).unwrap();
    assert!(report.passed(), "{:?}", report.violations);
    assert_eq!(report.exit_code(), 0);
    common::assert_csv_matches(&report.csv_text(0), &common::golden("mix_zz3.csv"));
}

#[test]
fn project_sweep_on_random_ff4() {
    let report = execute(&common::load("project_ff4"), false).unwrap();
    assert!(report.passed(), "{:?}", report.violations);
    let text = report.csv_text(0);
    assert_eq!(text.lines().count(), 2 + 40);
    common::assert_csv_matches(&text, &common::golden("project_ff4.csv"));
}

#[test]
fn anneal_zz2() {
    let report = execute(&common::load("anneal_zz2"), false).unwrap();
    assert!(report.passed(), "{:?}", report.violations);
    common::assert_csv_matches(&report.csv_text(0), &common::golden("anneal_zz2.csv"));
    let expected: serde_json::Value = serde_json::from_str(&common::golden("anneal_zz2_summary.json")).unwrap();
    let summary = report.summary();
    assert!(summary["results"]["final_fidelity"].as_f64().unwrap() >= 0.95);
    assert_eq!(summary["schema_version"], expected["schema_version"]);
    assert_eq!(summary["config_sha256"], expected["config_sha256"]);
    common::assert_json_matches(&summary["results"], &expected["results"], "results");
}
