use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::data::TransactionRecord;
use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::training::TrainedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStatus {
    Warmup,
    Scored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEvent {
    pub account_id: String,
    pub end_timestamp: i64,
    pub status: ScoreStatus,
    /// Present iff `status` is `Scored`.
    pub probability: Option<f64>,
    pub alert: bool,
}

impl ScoreEvent {
    /// The wire form: one JSON object, probability rounded to 6 decimals and
    /// omitted during warmup.
    pub fn to_json_line(&self) -> String {
        let id = serde_json::to_string(&self.account_id).expect("string serializes");
        let status = match self.status {
            ScoreStatus::Warmup => "warmup",
            ScoreStatus::Scored => "scored",
        };
        match self.probability {
            Some(p) => format!(
                "{{\"account_id\":{id},\"end_timestamp\":{},\"status\":\"{status}\",\"probability\":{p:.6},\"alert\":{}}}",
                self.end_timestamp, self.alert
            ),
            None => format!(
                "{{\"account_id\":{id},\"end_timestamp\":{},\"status\":\"{status}\",\"alert\":{}}}",
                self.end_timestamp, self.alert
            ),
        }
    }
}

#[derive(Debug, Default)]
struct AccountBuffer {
    rows: VecDeque<Vec<f64>>,
    last_timestamp: Option<i64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StreamCounters {
    pub scored: u64,
    pub warmup: u64,
    pub out_of_order: u64,
    pub malformed: u64,
}

/// Shared scoring state: the frozen model plus one bounded buffer of encoded
/// records per account. Updates to one account are serialized by that
/// account's lock; distinct accounts proceed concurrently.
#[derive(Debug)]
pub struct StreamState {
    model: Arc<TrainedModel>,
    threshold: f64,
    accounts: Mutex<HashMap<String, Arc<Mutex<AccountBuffer>>>>,
    scored: AtomicU64,
    warmup: AtomicU64,
    out_of_order: AtomicU64,
    malformed: AtomicU64,
}

impl StreamState {
    /// `threshold` defaults to the one stored with the model.
    pub fn new(model: Arc<TrainedModel>, threshold: Option<f64>) -> Self {
        let threshold = threshold.unwrap_or(model.threshold);
        Self {
            model,
            threshold,
            accounts: Mutex::new(HashMap::new()),
            scored: AtomicU64::new(0),
            warmup: AtomicU64::new(0),
            out_of_order: AtomicU64::new(0),
            malformed: AtomicU64::new(0),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    pub fn counters(&self) -> StreamCounters {
        StreamCounters {
            scored: self.scored.load(AtomicOrdering::Relaxed),
            warmup: self.warmup.load(AtomicOrdering::Relaxed),
            out_of_order: self.out_of_order.load(AtomicOrdering::Relaxed),
            malformed: self.malformed.load(AtomicOrdering::Relaxed),
        }
    }

    pub fn account_count(&self) -> usize {
        self.accounts.lock().expect("account map poisoned").len()
    }

    /// Number of feature values held across all buffers.
    pub fn buffered_values(&self) -> usize {
        let map = self.accounts.lock().expect("account map poisoned");
        map.values()
            .map(|b| {
                let b = b.lock().expect("account buffer poisoned");
                b.rows.iter().map(Vec::len).sum::<usize>()
            })
            .sum()
    }

    pub(crate) fn note_malformed(&self) {
        self.malformed.fetch_add(1, AtomicOrdering::Relaxed);
    }

    fn buffer_for(&self, account: &str) -> Arc<Mutex<AccountBuffer>> {
        let mut map = self.accounts.lock().expect("account map poisoned");
        map.entry(account.to_string()).or_default().clone()
    }

    /// Appends one record to its account's window and scores the window once
    /// it holds `T` records. Records not strictly after the account's last
    /// accepted timestamp are rejected and leave the state unchanged.
    pub fn score_record(&self, record: &TransactionRecord) -> Result<ScoreEvent> {
        record.validate().map_err(Error::Data)?;
        let window = self.model.config.window;
        let buffer = self.buffer_for(&record.account_id);
        let mut buf = buffer.lock().expect("account buffer poisoned");
        if let Some(last) = buf.last_timestamp {
            if record.timestamp <= last {
                self.out_of_order.fetch_add(1, AtomicOrdering::Relaxed);
                return Err(Error::Ordering {
                    account: record.account_id.clone(),
                    timestamp: record.timestamp,
                    last,
                });
            }
        }
        let row = self.model.encoder.encode_one(record, buf.last_timestamp);
        buf.last_timestamp = Some(record.timestamp);
        if buf.rows.len() == window {
            buf.rows.pop_front();
        }
        buf.rows.push_back(row);

        if buf.rows.len() < window {
            self.warmup.fetch_add(1, AtomicOrdering::Relaxed);
            return Ok(ScoreEvent {
                account_id: record.account_id.clone(),
                end_timestamp: record.timestamp,
                status: ScoreStatus::Warmup,
                probability: None,
                alert: false,
            });
        }
        let d = self.model.config.input_dim;
        let mut data = Vec::with_capacity(window * d);
        for r in &buf.rows {
            data.extend_from_slice(r);
        }
        let features = Matrix::from_vec(window, d, data)?;
        let p = self.model.score(&features)?;
        drop(buf);
        self.scored.fetch_add(1, AtomicOrdering::Relaxed);
        Ok(ScoreEvent {
            account_id: record.account_id.clone(),
            end_timestamp: record.timestamp,
            status: ScoreStatus::Scored,
            probability: Some(p),
            alert: p >= self.threshold,
        })
    }
}
