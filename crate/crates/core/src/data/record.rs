use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Debit,
    Credit,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Debit => "debit",
            Direction::Credit => "credit",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "debit" => Some(Direction::Debit),
            "credit" => Some(Direction::Credit),
            _ => None,
        }
    }
}

/// One ledger entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub account_id: String,
    pub amount: f64,
    pub direction: Direction,
    pub channel: String,
    pub counterparty: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

impl TransactionRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.account_id.is_empty() {
            return Err("account_id is empty".into());
        }
        if !(self.amount.is_finite() && self.amount > 0.0) {
            return Err(format!("amount must be positive, got {}", self.amount));
        }
        if self.timestamp < 0 {
            return Err(format!("timestamp must be >= 0, got {}", self.timestamp));
        }
        if let Some(l) = self.label {
            if l > 1 {
                return Err(format!("label must be 0 or 1, got {l}"));
            }
        }
        Ok(())
    }

    pub fn is_anomalous(&self) -> bool {
        self.label == Some(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Jsonl,
}

impl RecordFormat {
    /// `.csv` is CSV; `.jsonl`, `.ndjson` and `.json` are JSON lines.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => Ok(RecordFormat::Csv),
            Some("jsonl" | "ndjson" | "json") => Ok(RecordFormat::Jsonl),
            _ => Err(Error::Param(format!(
                "cannot infer record format from {}",
                path.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowIssue {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    /// Sorted by `(account_id, timestamp)`.
    pub records: Vec<TransactionRecord>,
    /// Rows dropped under `skip_bad`.
    pub rejected: Vec<RowIssue>,
}

pub const CSV_COLUMNS: [&str; 7] = [
    "timestamp",
    "account_id",
    "amount",
    "direction",
    "channel",
    "counterparty",
    "label",
];

/// Reads records from `path`. With `skip_bad` off, the first bad row aborts
/// with a row error; with it on, bad rows are collected in
/// [`Ingested::rejected`].
pub fn ingest(path: &Path, format: RecordFormat, skip_bad: bool) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let parsed = match format {
        RecordFormat::Csv => parse_csv(reader)?,
        RecordFormat::Jsonl => parse_jsonl(reader)?,
    };
    let out = finish(parsed, skip_bad)?;
    if out.records.is_empty() && out.rejected.is_empty() {
        log::warn!("{} contains no records", path.display());
    }
    Ok(out)
}

type Parsed = Vec<(usize, std::result::Result<TransactionRecord, String>)>;

fn finish(parsed: Parsed, skip_bad: bool) -> Result<Ingested> {
    let mut rejected = Vec::new();
    let mut good = Vec::with_capacity(parsed.len());
    for (line, row) in parsed {
        match row.and_then(|r| r.validate().map(|_| r)) {
            Ok(r) => good.push((line, r)),
            Err(message) => rejected.push(RowIssue { line, message }),
        }
    }
    good.sort_by(|(la, a), (lb, b)| {
        a.account_id
            .cmp(&b.account_id)
            .then(a.timestamp.cmp(&b.timestamp))
            .then(la.cmp(lb))
    });
    let mut records: Vec<TransactionRecord> = Vec::with_capacity(good.len());
    for (line, r) in good {
        if let Some(prev) = records.last() {
            if prev.account_id == r.account_id && prev.timestamp == r.timestamp {
                rejected.push(RowIssue {
                    line,
                    message: format!(
                        "duplicate timestamp {} for account {}",
                        r.timestamp, r.account_id
                    ),
                });
                continue;
            }
        }
        records.push(r);
    }
    rejected.sort_by_key(|i| i.line);
    if !skip_bad {
        if let Some(first) = rejected.into_iter().next() {
            return Err(Error::Row {
                line: first.line,
                message: first.message,
            });
        }
        return Ok(Ingested {
            records,
            rejected: Vec::new(),
        });
    }
    for issue in &rejected {
        log::warn!("skipping row {}: {}", issue.line, issue.message);
    }
    Ok(Ingested { records, rejected })
}

fn parse_csv<R: BufRead>(reader: R) -> Result<Parsed> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(Error::Schema(format!("unreadable CSV header: {e}"))),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let index = |name: &str| headers.iter().position(|h| h == name);
    let mut cols = [0usize; 6];
    for (slot, name) in cols.iter_mut().zip(&CSV_COLUMNS[..6]) {
        *slot = index(name)
            .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))?;
    }
    let label_col = index("label");

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                out.push((line, Err(format!("malformed CSV: {e}"))));
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(i).unwrap_or("");
        let parsed = (|| {
            if row.len() < headers.len() {
                return Err(format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    row.len()
                ));
            }
            let label = match label_col.map(field) {
                None | Some("") => None,
                Some(s) => Some(s.parse::<u8>().map_err(|_| format!("bad label `{s}`"))?),
            };
            Ok(TransactionRecord {
                timestamp: field(cols[0])
                    .parse()
                    .map_err(|_| format!("bad timestamp `{}`", field(cols[0])))?,
                account_id: field(cols[1]).to_string(),
                amount: field(cols[2])
                    .parse()
                    .map_err(|_| format!("bad amount `{}`", field(cols[2])))?,
                direction: Direction::parse(field(cols[3]))
                    .ok_or_else(|| format!("bad direction `{}`", field(cols[3])))?,
                channel: field(cols[4]).to_string(),
                counterparty: field(cols[5]).to_string(),
                label,
            })
        })();
        out.push((line, parsed));
    }
    Ok(out)
}

fn parse_jsonl<R: BufRead>(reader: R) -> Result<Parsed> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<TransactionRecord>(&line).map_err(|e| e.to_string());
        out.push((i + 1, parsed));
    }
    Ok(out)
}

/// Parses one JSON-lines record and checks its invariants.
pub fn parse_record_json(line: &str) -> std::result::Result<TransactionRecord, String> {
    let r: TransactionRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    r.validate()?;
    Ok(r)
}

/// Writes records in either format. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_records(
    path: &Path,
    records: &[TransactionRecord],
    format: RecordFormat,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        RecordFormat::Csv => {
            let mut cw = csv::Writer::from_writer(&mut w);
            cw.write_record(CSV_COLUMNS)
                .map_err(|e| Error::Data(e.to_string()))?;
            for r in records {
                let label = r.label.map(|l| l.to_string()).unwrap_or_default();
                cw.write_record([
                    r.timestamp.to_string().as_str(),
                    &r.account_id,
                    &format!("{:?}", r.amount),
                    r.direction.as_str(),
                    &r.channel,
                    &r.counterparty,
                    &label,
                ])
                .map_err(|e| Error::Data(e.to_string()))?;
            }
            cw.flush().map_err(|e| Error::io(path, e))?;
        }
        RecordFormat::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    const HEADER: &str = "timestamp,account_id,amount,direction,channel,counterparty,label\n";

    #[test]
    fn empty_file_gives_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [
            ("e.csv", RecordFormat::Csv),
            ("e.jsonl", RecordFormat::Jsonl),
        ] {
            let p = write(&dir, name, "");
            let out = ingest(&p, fmt, false).unwrap();
            assert!(out.records.is_empty());
        }
    }

    #[test]
    fn records_come_back_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{HEADER}200,a,5.0,debit,card,x,0\n100,a,7.5,credit,wire,y,1\n50,0b,1.0,debit,card,z,\n"
        );
        let p = write(&dir, "r.csv", &body);
        let out = ingest(&p, RecordFormat::Csv, false).unwrap();
        let keys: Vec<(&str, i64)> = out
            .records
            .iter()
            .map(|r| (r.account_id.as_str(), r.timestamp))
            .collect();
        assert_eq!(keys, vec![("0b", 50), ("a", 100), ("a", 200)]);
        assert_eq!(out.records[0].label, None);
        assert_eq!(out.records[1].label, Some(1));
    }

    #[test]
    fn negative_amount_is_row_error() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{HEADER}100,a,-5,debit,card,x,0\n");
        let p = write(&dir, "neg.csv", &body);
        match ingest(&p, RecordFormat::Csv, false) {
            Err(Error::Row { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("amount"), "{message}");
            }
            other => panic!("expected row error, got {other:?}"),
        }
        let skipped = ingest(&p, RecordFormat::Csv, true).unwrap();
        assert!(skipped.records.is_empty());
        assert_eq!(skipped.rejected.len(), 1);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "timestamp,account_id,amount\n1,a,2\n");
        assert!(matches!(
            ingest(&p, RecordFormat::Csv, true),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn label_column_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "nl.csv",
            "timestamp,account_id,amount,direction,channel,counterparty\n1,a,2.5,debit,card,x\n",
        );
        let out = ingest(&p, RecordFormat::Csv, false).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].label, None);
    }

    #[test]
    fn jsonl_bad_lines_are_collected() {
        let dir = tempfile::tempdir().unwrap();
        let body = concat!(
            r#"{"timestamp":5,"account_id":"a","amount":1.5,"direction":"debit","channel":"card","counterparty":"x"}"#,
            "\n{not json\n",
            r#"{"timestamp":6,"account_id":"a","amount":2.0,"direction":"sideways","channel":"card","counterparty":"x"}"#,
            "\n"
        );
        let p = write(&dir, "b.jsonl", body);
        let out = ingest(&p, RecordFormat::Jsonl, true).unwrap();
        assert_eq!(out.records.len(), 1);
        let lines: Vec<usize> = out.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3]);
    }

    #[test]
    fn duplicate_timestamps_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{HEADER}100,a,5.0,debit,card,x,0\n100,a,6.0,debit,card,x,0\n");
        let p = write(&dir, "d.csv", &body);
        assert!(matches!(
            ingest(&p, RecordFormat::Csv, false),
            Err(Error::Row { line: 3, .. })
        ));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            RecordFormat::from_path(Path::new("x.CSV")).unwrap(),
            RecordFormat::Csv
        );
        assert_eq!(
            RecordFormat::from_path(Path::new("x.jsonl")).unwrap(),
            RecordFormat::Jsonl
        );
        assert!(RecordFormat::from_path(Path::new("x.parquet")).is_err());
    }
}
