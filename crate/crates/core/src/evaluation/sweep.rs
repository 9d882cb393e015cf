use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::training::{fit, TrainConfig};

use super::{MetricsReport, Report, ReportRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub heads: usize,
    /// Test-split metrics at the validation-selected threshold.
    pub metrics: MetricsReport,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Strictly increasing head counts.
    pub entries: Vec<SweepEntry>,
    /// Head count with the highest test AUC; the smaller count wins ties.
    pub best_heads: usize,
}

impl SweepResult {
    pub fn to_report(&self) -> Report {
        Report {
            rows: self
                .entries
                .iter()
                .map(|e| ReportRow {
                    model: format!("heads={}", e.heads),
                    metrics: e.metrics.clone(),
                })
                .collect(),
            best_heads: Some(self.best_heads),
        }
    }
}

/// Trains one model per head count on identical data splits and seeds.
/// Every count is checked against `base.latent_dim` before any training.
pub fn head_sweep(
    ds: &Dataset,
    base: &ModelConfig,
    train_cfg: &TrainConfig,
    heads: &[usize],
) -> Result<SweepResult> {
    let mut heads = heads.to_vec();
    heads.sort_unstable();
    heads.dedup();
    if heads.is_empty() {
        return Err(Error::Config(
            "head sweep needs at least one head count".into(),
        ));
    }
    for &h in &heads {
        ModelConfig {
            heads: h,
            input_dim: base.input_dim.max(1),
            ..base.clone()
        }
        .validate()?;
    }

    let entries = heads
        .par_iter()
        .map(|&h| {
            let cfg = ModelConfig {
                heads: h,
                ..base.clone()
            };
            let outcome = fit(ds, &cfg, train_cfg)?;
            let metrics = outcome.test.ok_or_else(|| {
                Error::Metric("test split needs windows of both classes for the sweep".into())
            })?;
            Ok(SweepEntry {
                heads: h,
                metrics,
                best_epoch: outcome.report.history.best_epoch,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best_heads = entries
        .iter()
        .fold(None::<&SweepEntry>, |best, e| match best {
            Some(b) if b.metrics.auc >= e.metrics.auc => Some(b),
            _ => Some(e),
        })
        .map(|e| e.heads)
        .expect("at least one entry");
    Ok(SweepResult {
        entries,
        best_heads,
    })
}
