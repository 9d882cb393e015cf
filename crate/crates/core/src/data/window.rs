use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

use super::{with_predecessors, FeatureEncoder, TransactionRecord};

/// How a window's binary label is derived from its member records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowLabel {
    /// 1 iff any record in the window is labeled 1.
    #[default]
    Any,
    /// The label of the newest record.
    Last,
}

/// Encoded history of one account, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub account_id: String,
    pub timestamps: Vec<i64>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Records `start..end` as their own sequence.
    pub fn slice(&self, start: usize, end: usize) -> EncodedSequence {
        EncodedSequence {
            account_id: self.account_id.clone(),
            timestamps: self.timestamps[start..end].to_vec(),
            rows: self.rows[start..end].to_vec(),
            labels: self.labels[start..end].to_vec(),
        }
    }
}

/// Model input: `T` consecutive encoded records of one account.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    pub features: Matrix,
    pub label: u8,
    pub account_id: String,
    pub end_timestamp: i64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowReport {
    pub windows: usize,
    /// Accounts with fewer records than the window length.
    pub short_accounts: Vec<String>,
}

/// Groups sorted records by account and encodes them. Unlabeled records
/// count as normal.
pub fn encode_accounts(
    records: &[TransactionRecord],
    encoder: &FeatureEncoder,
) -> Vec<EncodedSequence> {
    let mut out: Vec<EncodedSequence> = Vec::new();
    for (r, prev) in with_predecessors(records) {
        if prev.is_none() || out.last().is_none_or(|s| s.account_id != r.account_id) {
            out.push(EncodedSequence {
                account_id: r.account_id.clone(),
                timestamps: Vec::new(),
                rows: Vec::new(),
                labels: Vec::new(),
            });
        }
        let seq = out.last_mut().expect("pushed above");
        seq.timestamps.push(r.timestamp);
        seq.rows.push(encoder.encode_one(r, prev));
        seq.labels.push(r.label.unwrap_or(0));
    }
    out
}

/// Number of windows a sequence of `n` records yields.
pub fn window_count(n: usize, window: usize, stride: usize) -> usize {
    if n < window {
        0
    } else {
        (n - window) / stride + 1
    }
}

/// Slides a `window`-record frame over each account with the given stride.
pub fn windowize(
    sequences: &[EncodedSequence],
    window: usize,
    stride: usize,
    rule: WindowLabel,
) -> Result<(Vec<SequenceWindow>, WindowReport)> {
    if window == 0 || stride == 0 {
        return Err(Error::Param(format!(
            "window ({window}) and stride ({stride}) must be >= 1"
        )));
    }
    let mut out = Vec::new();
    let mut report = WindowReport::default();
    for seq in sequences {
        let n = seq.len();
        if n < window {
            report.short_accounts.push(seq.account_id.clone());
            continue;
        }
        let d = seq.rows[0].len();
        for w in 0..window_count(n, window, stride) {
            let start = w * stride;
            let end = start + window;
            let mut data = Vec::with_capacity(window * d);
            for row in &seq.rows[start..end] {
                data.extend_from_slice(row);
            }
            let labels = &seq.labels[start..end];
            let label = match rule {
                WindowLabel::Any => u8::from(labels.contains(&1)),
                WindowLabel::Last => labels[window - 1],
            };
            out.push(SequenceWindow {
                features: Matrix::from_vec(window, d, data)?,
                label,
                account_id: seq.account_id.clone(),
                end_timestamp: seq.timestamps[end - 1],
            });
        }
    }
    report.windows = out.len();
    Ok((out, report))
}
