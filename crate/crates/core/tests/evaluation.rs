mod common;

use sentinel_core::evaluation::{emit_report, head_sweep, ReportFormat, CSV_HEADER};
use sentinel_core::Error;

use common::{quick_train, small_config, small_dataset};

#[test]
fn sweep_is_deterministic_and_reports_every_count() {
    let ds = small_dataset(4);
    let base = small_config(ds.encoder.dim(), 1);
    let tc = quick_train(3);
    let a = head_sweep(&ds, &base, &tc, &[8, 1, 4, 2, 4]).unwrap();
    let b = head_sweep(&ds, &base, &tc, &[1, 2, 4, 8]).unwrap();
    assert_eq!(a, b);

    let heads: Vec<_> = a.entries.iter().map(|e| e.heads).collect();
    assert_eq!(heads, [1, 2, 4, 8]);
    let best = a
        .entries
        .iter()
        .fold(None::<(usize, f64)>, |acc, e| match acc {
            Some((_, auc)) if auc >= e.metrics.auc => acc,
            _ => Some((e.heads, e.metrics.auc)),
        })
        .unwrap();
    assert_eq!(a.best_heads, best.0);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    emit_report(&a.to_report(), ReportFormat::Csv, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("heads=1,"));

    let json = dir.path().join("sweep.json");
    emit_report(&a.to_report(), ReportFormat::Json, &json).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["best_heads"], a.best_heads);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn non_dividing_head_count_fails_before_training() {
    let ds = small_dataset(4);
    let base = small_config(ds.encoder.dim(), 1);
    let err = head_sweep(&ds, &base, &quick_train(50), &[2, 3]).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}
