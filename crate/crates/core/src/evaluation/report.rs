use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::MetricsReport;

/// CSV column order; downstream plotting depends on it.
pub const CSV_HEADER: [&str; 6] = ["model", "auc", "f1", "precision", "recall", "threshold"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Param(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    /// Head count with the highest AUC, for sweep reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_heads: Option<usize>,
}

impl Report {
    pub fn single(model: impl Into<String>, metrics: MetricsReport) -> Self {
        Report {
            rows: vec![ReportRow {
                model: model.into(),
                metrics,
            }],
            best_heads: None,
        }
    }
}

/// One CSV line per row with six-decimal floats, in [`CSV_HEADER`] order.
pub fn render_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in &report.rows {
        let m = &row.metrics;
        let cells = [m.auc, m.f1, m.precision, m.recall, m.threshold].map(|v| format!("{v:.6}"));
        w.write_record(std::iter::once(row.model.as_str()).chain(cells.iter().map(String::as_str)))
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Pretty JSON carrying every field at full precision, so it parses back
/// to an equal [`Report`].
pub fn render_json(report: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    let body = match format {
        ReportFormat::Json => render_json(report)? + "\n",
        ReportFormat::Csv => render_csv(report)?,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(body.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::metrics::from_counts;

    fn metrics(auc: f64, f1: f64, precision: f64, recall: f64, threshold: f64) -> MetricsReport {
        MetricsReport {
            auc,
            f1,
            precision,
            recall,
            ..from_counts(0, 0, 0, 0, threshold)
        }
    }

    #[test]
    fn table_row_rendering() {
        // Values of the published comparison table's "Ours" row.
        let r = Report::single("Ours", metrics(0.927, 0.864, 0.871, 0.857, 0.5));
        let csv = render_csv(&r).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "model,auc,f1,precision,recall,threshold");
        assert_eq!(
            lines[1],
            "Ours,0.927000,0.864000,0.871000,0.857000,0.500000"
        );
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = render_csv(&Report::default()).unwrap();
        assert_eq!(csv, "model,auc,f1,precision,recall,threshold\n");
    }

    #[test]
    fn json_round_trip() {
        let r = Report {
            rows: vec![
                ReportRow {
                    model: "heads=2".into(),
                    metrics: metrics(0.91234567891, 0.8, 0.75, 1.0 / 3.0, 0.123456789),
                },
                ReportRow {
                    model: "heads=4".into(),
                    metrics: from_counts(3, 1, 5, 2, 0.4),
                },
            ],
            best_heads: Some(2),
        };
        let back: Report = serde_json::from_str(&render_json(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn emit_writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let r = Report::single("m", metrics(0.5, 0.5, 0.5, 0.5, 0.5));
        emit_report(&r, ReportFormat::Csv, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            render_csv(&r).unwrap()
        );
        let bad = dir.path().join("missing-dir").join("r.json");
        assert!(matches!(
            emit_report(&r, ReportFormat::Json, &bad),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn format_parse() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
