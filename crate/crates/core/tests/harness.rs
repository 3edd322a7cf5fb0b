use kmrate_core::harness::{
    default_matrix, emit_report, recheck_report, run_experiment, soundness_suite, Format, RowStatus, RESIDUALS_CSV,
};
use kmrate_core::iteration::read_csv_rows;
use serde_json::Value;
use std::fs;
use std::time::Instant;

fn strip_metadata(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("metadata");
    v
}

#[test]
fn default_matrix_is_sound_and_rechecks_from_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let summary = soundness_suite(&default_matrix(), Some(dir.path()));
    let took = start.elapsed();
    assert!(summary.pass, "{:#?}", summary.rows);
    // 6 configs × 2 ε × 2 g
    assert_eq!(summary.rows.len(), 24);
    assert!(summary.rows.iter().all(|r| r.status == RowStatus::Pass));
    assert!(took.as_secs() < 60, "suite took {took:?}");

    for cfg in default_matrix() {
        let sub = dir.path().join(cfg.id.as_deref().unwrap());
        let report: Value = serde_json::from_str(&fs::read_to_string(sub.join("report.json")).unwrap()).unwrap();
        let rows = read_csv_rows(fs::File::open(sub.join(RESIDUALS_CSV)).unwrap()).unwrap();
        let re = recheck_report(&report, &rows).unwrap();
        assert!(re.ok(), "{}: {:?}", cfg.id.unwrap(), re.mismatches);
        assert_eq!(re.rows_checked, 4);
    }
}

#[test]
fn json_emission_is_lossless_and_reproducible() {
    let mut cfg = default_matrix().remove(0);
    cfg.steps = 100;
    cfg.eps = vec![1.0];
    cfg.g = vec!["zero".into()];
    // K = 0 and b = 1 make the worked example bound
    cfg.mapping.k = kmrate_core::iteration::KSequence::Zero;
    cfg.mapping.cap = Some(0.0);
    cfg.start = Some(serde_json::json!([0.6, 0.8]));
    cfg.anchor = kmrate_core::harness::AnchorSpec::Point {
        point: serde_json::json!([0.0, 0.0]),
        b: Some(1.0),
    };
    let a = run_experiment(&cfg, None).unwrap();
    let b = run_experiment(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = emit_report(&a, Format::Json, dir.path()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let parsed: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, serde_json::to_value(&a).unwrap());
    assert_eq!(
        strip_metadata(serde_json::to_value(&a).unwrap()),
        strip_metadata(serde_json::to_value(&b).unwrap())
    );
    let paper = &parsed["rows"][0]["variants"][0]["bound"];
    assert_eq!(paper["Phi"], Value::String("5640192".into()));
    assert_eq!(paper["M"], Value::String("2820096".into()));

    let csv_path = emit_report(&a, Format::Csv, dir.path()).unwrap();
    let csv_text = fs::read_to_string(csv_path).unwrap();
    assert!(csv_text.starts_with("id,eps,g,n_emp,variant,M,Phi,within_bound,candidate_shape,pass\n"));
    assert!(csv_text.contains(",paper,2820096,5640192,"));
}

#[test]
fn tampered_report_is_caught_by_recheck() {
    let mut cfg = default_matrix().remove(1);
    cfg.steps = 150;
    let dir = tempfile::tempdir().unwrap();
    let rep = run_experiment(&cfg, Some(dir.path())).unwrap();
    let mut json = serde_json::to_value(&rep).unwrap();
    let rows = read_csv_rows(fs::File::open(dir.path().join(RESIDUALS_CSV)).unwrap()).unwrap();
    assert!(recheck_report(&json, &rows).unwrap().ok());
    let n = json["rows"][0]["window"]["n"].as_u64().unwrap();
    json["rows"][0]["window"]["n"] = Value::from(n + 1);
    assert!(!recheck_report(&json, &rows).unwrap().ok());
}
