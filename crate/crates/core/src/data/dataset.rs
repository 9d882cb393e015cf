use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{
    encode_accounts, windowize, FeatureEncoder, SequenceWindow, TransactionRecord, WindowLabel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitOptions {
    pub window: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub label_rule: WindowLabel,
    #[serde(default = "default_train")]
    pub train_fraction: f64,
    #[serde(default = "default_val")]
    pub val_fraction: f64,
}

fn default_stride() -> usize {
    1
}
fn default_train() -> f64 {
    0.70
}
fn default_val() -> f64 {
    0.15
}

impl SplitOptions {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            stride: default_stride(),
            label_rule: WindowLabel::Any,
            train_fraction: default_train(),
            val_fraction: default_val(),
        }
    }
}

/// Windows for training, model selection and final scoring, plus the encoder
/// fitted on the training records.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub encoder: FeatureEncoder,
    pub train: Vec<SequenceWindow>,
    pub validation: Vec<SequenceWindow>,
    pub test: Vec<SequenceWindow>,
}

impl Dataset {
    /// Splits each account chronologically by record index into
    /// train/validation/test segments, fits the encoder on the training
    /// segments only and windowizes each segment separately, so no window
    /// crosses a split boundary. `records` must be sorted by
    /// `(account_id, timestamp)`.
    pub fn prepare(records: &[TransactionRecord], opts: &SplitOptions) -> Result<Self> {
        let (tf, vf) = (opts.train_fraction, opts.val_fraction);
        if !(tf > 0.0 && vf >= 0.0 && tf + vf <= 1.0) {
            return Err(Error::Param(format!(
                "invalid split fractions train={tf} validation={vf}"
            )));
        }
        let bounds = |n: usize| {
            let a = (n as f64 * tf).floor() as usize;
            let b = a + (n as f64 * vf).floor() as usize;
            (a, b.min(n))
        };

        let mut train_records = Vec::new();
        let mut start = 0;
        while start < records.len() {
            let id = &records[start].account_id;
            let end = start
                + records[start..]
                    .iter()
                    .take_while(|r| &r.account_id == id)
                    .count();
            let (a, _) = bounds(end - start);
            train_records.extend_from_slice(&records[start..start + a]);
            start = end;
        }
        if train_records.is_empty() {
            return Err(Error::Data("training split is empty".into()));
        }
        let encoder = FeatureEncoder::fit(&train_records)?;

        let (mut train, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for seq in encode_accounts(records, &encoder) {
            let (a, b) = bounds(seq.len());
            train.push(seq.slice(0, a));
            validation.push(seq.slice(a, b));
            test.push(seq.slice(b, seq.len()));
        }
        let w = |s: &[_]| windowize(s, opts.window, opts.stride, opts.label_rule).map(|(w, _)| w);
        Ok(Dataset {
            train: w(&train)?,
            validation: w(&validation)?,
            test: w(&test)?,
            encoder,
        })
    }
}
