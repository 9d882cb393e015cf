use std::io::{self, BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::data::parse_record_json;
use crate::error::{Error, Result};
use crate::training::load_model;

use super::{ScoreEvent, StreamState};

/// Result of handling one input line.
#[derive(Debug)]
pub enum LineOutcome {
    Event(ScoreEvent),
    /// Machine-readable error object for the error channel.
    Rejected(String),
    Blank,
}

#[derive(Debug, Serialize)]
struct ErrorEvent<'a> {
    error: &'a str,
    line: u64,
    message: String,
}

fn error_line(kind: &str, line: u64, message: String) -> String {
    serde_json::to_string(&ErrorEvent {
        error: kind,
        line,
        message,
    })
    .expect("error event serializes")
}

/// Parses and scores one JSON-lines record. `line_no` is 1-based and only
/// used in error reports.
pub fn process_line(state: &StreamState, line: &str, line_no: u64) -> LineOutcome {
    if line.trim().is_empty() {
        return LineOutcome::Blank;
    }
    let record = match parse_record_json(line) {
        Ok(r) => r,
        Err(msg) => {
            state.note_malformed();
            return LineOutcome::Rejected(error_line("malformed", line_no, msg));
        }
    };
    match state.score_record(&record) {
        Ok(ev) => LineOutcome::Event(ev),
        Err(e @ Error::Ordering { .. }) => {
            LineOutcome::Rejected(error_line("out_of_order", line_no, e.to_string()))
        }
        Err(e) => {
            state.note_malformed();
            LineOutcome::Rejected(error_line("invalid", line_no, e.to_string()))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoopSummary {
    pub lines: u64,
    pub scored: u64,
    pub warmup: u64,
    pub rejected: u64,
}

/// Reads JSON-lines records from `input`, writes one event line per accepted
/// record to `output` (flushed per line) and one error object per rejected
/// line to `errors`.
pub fn run_lines<R: BufRead, W: Write, E: Write>(
    state: &StreamState,
    input: R,
    mut output: W,
    mut errors: E,
) -> io::Result<LoopSummary> {
    let mut summary = LoopSummary::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        summary.lines += 1;
        match process_line(state, &line, i as u64 + 1) {
            LineOutcome::Event(ev) => {
                match ev.status {
                    super::ScoreStatus::Scored => summary.scored += 1,
                    super::ScoreStatus::Warmup => summary.warmup += 1,
                }
                writeln!(output, "{}", ev.to_json_line())?;
                output.flush()?;
            }
            LineOutcome::Rejected(msg) => {
                summary.rejected += 1;
                writeln!(errors, "{msg}")?;
                errors.flush()?;
            }
            LineOutcome::Blank => {}
        }
    }
    Ok(summary)
}

/// Scores standard input against the model at `model_path`. The summary goes
/// to standard error at end of input.
pub fn run_stdin_loop(model_path: &Path, threshold: Option<f64>) -> Result<i32> {
    let model = load_model(model_path)?;
    let state = StreamState::new(Arc::new(model), threshold);
    let stdin = io::stdin();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let summary = run_lines(&state, stdin.lock(), stdout.lock(), stderr.lock())?;
    let mut err = stderr.lock();
    writeln!(err, "{}", serde_json::to_string(&summary)?)?;
    Ok(0)
}
