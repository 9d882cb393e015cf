use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Direction, TransactionRecord};

const SECONDS_PER_DAY: i64 = 86_400;

/// Mean/std pair for one standardized feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Maps a transaction (plus its predecessor's timestamp) to a fixed-width
/// feature vector.
///
/// Layout, in order:
/// - standardized `log_amount` and `log_gap` (`ln(1 + seconds since the
///   account's previous record)`, 0 for an account's first record), minus
///   any that had zero variance at fit time
/// - `direction` (1 for credit, 0 for debit)
/// - `hour_sin`, `hour_cos` of the UTC hour of day
/// - one-hot channel over the fitted vocabulary, last slot out-of-vocabulary
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub standardized: Vec<Standardizer>,
    /// Standardized features removed for zero variance on the fit set.
    pub dropped: Vec<String>,
    /// Channel vocabulary, name → one-hot slot.
    pub channels: BTreeMap<String, usize>,
}

const STANDARDIZED: [&str; 2] = ["log_amount", "log_gap"];

/// Raw values of the standardized features, in [`STANDARDIZED`] order.
fn raw_numeric(record: &TransactionRecord, prev_timestamp: Option<i64>) -> [f64; 2] {
    let gap = prev_timestamp.map_or(0, |p| (record.timestamp - p).max(0));
    [record.amount.ln(), (gap as f64).ln_1p()]
}

/// Pairs each record with its predecessor's timestamp within the same
/// account. `records` must be sorted by `(account_id, timestamp)`.
pub fn with_predecessors(
    records: &[TransactionRecord],
) -> impl Iterator<Item = (&TransactionRecord, Option<i64>)> {
    records.iter().enumerate().map(move |(i, r)| {
        let prev = i
            .checked_sub(1)
            .map(|j| &records[j])
            .filter(|p| p.account_id == r.account_id)
            .map(|p| p.timestamp);
        (r, prev)
    })
}

impl FeatureEncoder {
    /// Fits statistics on `records`, which must be sorted by
    /// `(account_id, timestamp)` as [`super::ingest`] returns them.
    pub fn fit(records: &[TransactionRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Data("cannot fit an encoder on zero records".into()));
        }
        let n = records.len() as f64;
        let mut sums = [0.0f64; 2];
        for (r, prev) in with_predecessors(records) {
            for (s, v) in sums.iter_mut().zip(raw_numeric(r, prev)) {
                *s += v;
            }
        }
        let means = sums.map(|s| s / n);
        let mut sq = [0.0f64; 2];
        for (r, prev) in with_predecessors(records) {
            for ((s, v), m) in sq.iter_mut().zip(raw_numeric(r, prev)).zip(means) {
                *s += (v - m) * (v - m);
            }
        }
        let mut standardized = Vec::new();
        let mut dropped = Vec::new();
        for ((name, mean), ss) in STANDARDIZED.iter().zip(means).zip(sq) {
            let std = (ss / n).sqrt();
            if std > 1e-12 * mean.abs().max(1.0) {
                standardized.push(Standardizer {
                    name: name.to_string(),
                    mean,
                    std,
                });
            } else {
                log::warn!("dropping zero-variance feature {name}");
                dropped.push(name.to_string());
            }
        }
        let mut vocab: Vec<&str> = records.iter().map(|r| r.channel.as_str()).collect();
        vocab.sort_unstable();
        vocab.dedup();
        let channels = vocab
            .into_iter()
            .enumerate()
            .map(|(i, c)| (c.to_string(), i))
            .collect();
        Ok(FeatureEncoder {
            standardized,
            dropped,
            channels,
        })
    }

    /// Width `d` of every encoded vector.
    pub fn dim(&self) -> usize {
        self.standardized.len() + 3 + self.channels.len() + 1
    }

    pub fn oov_slot(&self) -> usize {
        self.channels.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.standardized.iter().map(|s| s.name.clone()).collect();
        names.extend(["direction", "hour_sin", "hour_cos"].map(String::from));
        names.extend(self.channels.keys().map(|c| format!("channel={c}")));
        names.push("channel=<oov>".into());
        names
    }

    pub fn encode_one(&self, record: &TransactionRecord, prev_timestamp: Option<i64>) -> Vec<f64> {
        let raw = raw_numeric(record, prev_timestamp);
        let mut out = Vec::with_capacity(self.dim());
        for s in &self.standardized {
            let idx = STANDARDIZED.iter().position(|n| *n == s.name).unwrap_or(0);
            out.push((raw[idx] - s.mean) / s.std);
        }
        out.push(match record.direction {
            Direction::Credit => 1.0,
            Direction::Debit => 0.0,
        });
        let seconds = record.timestamp.rem_euclid(SECONDS_PER_DAY) as f64;
        let angle = 2.0 * PI * seconds / SECONDS_PER_DAY as f64;
        out.push(angle.sin());
        out.push(angle.cos());
        let slot = self
            .channels
            .get(&record.channel)
            .copied()
            .unwrap_or(self.oov_slot());
        let start = out.len();
        out.resize(start + self.channels.len() + 1, 0.0);
        out[start + slot] = 1.0;
        out
    }

    /// Encodes sorted records, one vector per record.
    pub fn encode(&self, records: &[TransactionRecord]) -> Vec<Vec<f64>> {
        with_predecessors(records)
            .map(|(r, prev)| self.encode_one(r, prev))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ts: i64, amount: f64, channel: &str) -> TransactionRecord {
        TransactionRecord {
            timestamp: ts,
            account_id: "a".into(),
            amount,
            direction: Direction::Debit,
            channel: channel.into(),
            counterparty: "x".into(),
            label: None,
        }
    }

    #[test]
    fn log_amounts_standardize_to_unit() {
        let e = std::f64::consts::E;
        let recs = vec![rec(0, e, "card"), rec(10, e.powi(3), "card")];
        let enc = FeatureEncoder::fit(&recs).unwrap();
        let la = &enc.standardized[0];
        assert_eq!(la.name, "log_amount");
        assert!((la.mean - 2.0).abs() < 1e-15);
        assert!((la.std - 1.0).abs() < 1e-15);
        let rows = enc.encode(&recs);
        assert!((rows[0][0] + 1.0).abs() < 1e-15);
        assert!((rows[1][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_channel_goes_to_oov() {
        let recs = vec![rec(0, 3.0, "card"), rec(5, 4.0, "wire")];
        let enc = FeatureEncoder::fit(&recs).unwrap();
        let v = enc.encode_one(&rec(9, 2.0, "crypto"), Some(5));
        assert_eq!(v.len(), enc.dim());
        let onehot = &v[v.len() - 3..];
        assert_eq!(onehot, &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn single_record_drops_zero_variance() {
        let enc = FeatureEncoder::fit(&[rec(0, 3.0, "card")]).unwrap();
        assert!(enc.standardized.is_empty());
        assert_eq!(enc.dropped, vec!["log_amount", "log_gap"]);
        assert_eq!(enc.dim(), 3 + 2);
    }

    #[test]
    fn empty_fit_is_data_error() {
        assert!(matches!(FeatureEncoder::fit(&[]), Err(Error::Data(_))));
    }

    #[test]
    fn fit_set_is_standardized() {
        let recs: Vec<_> = (0..50)
            .map(|i| {
                rec(
                    i * 977 + (i * i) % 13,
                    1.0 + (i as f64 * 1.37).sin().abs() * 90.0,
                    "card",
                )
            })
            .collect();
        let enc = FeatureEncoder::fit(&recs).unwrap();
        let rows = enc.encode(&recs);
        for k in 0..enc.standardized.len() {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-9, "mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-9, "std {}", var.sqrt());
        }
    }

    #[test]
    fn gap_resets_between_accounts() {
        let mut b = rec(1_000, 2.0, "card");
        b.account_id = "b".into();
        let recs = vec![rec(0, 1.0, "card"), rec(500, 1.5, "card"), b];
        let prevs: Vec<Option<i64>> = with_predecessors(&recs).map(|(_, p)| p).collect();
        assert_eq!(prevs, vec![None, Some(0), None]);
    }

    #[test]
    fn hour_features_follow_clock() {
        let enc = FeatureEncoder::fit(&[rec(0, 3.0, "card"), rec(10, 4.0, "card")]).unwrap();
        let k = enc.standardized.len() + 1;
        let six_am = enc.encode_one(&rec(6 * 3600, 3.0, "card"), None);
        assert!((six_am[k] - 1.0).abs() < 1e-15);
        assert!(six_am[k + 1].abs() < 1e-15);
    }

    #[test]
    fn fit_is_deterministic() {
        let recs = vec![
            rec(0, 3.0, "wire"),
            rec(7, 9.0, "card"),
            rec(99, 1.5, "atm"),
        ];
        assert_eq!(
            FeatureEncoder::fit(&recs).unwrap(),
            FeatureEncoder::fit(&recs).unwrap()
        );
    }
}
