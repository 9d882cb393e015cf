//! Weighted BCE training with an adaptive-moment optimizer, early stopping
//! on validation AUC, and the `LSNT` model file.

mod adam;
pub mod loss;
mod serialize;
mod trainer;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureEncoder};
use crate::error::{Error, Result};
use crate::evaluation::{best_f1_threshold, evaluate, MetricsReport};
use crate::model::{predict, ModelConfig, ModelParams};
use crate::numeric::Matrix;

pub use adam::{adam_step, AdamState};
pub use loss::{bce_logit_grad, bce_loss, PROB_CLAMP};
pub use serialize::{from_bytes, load_model, save_model, to_bytes, FORMAT_VERSION, MAGIC};
pub use trainer::{score_windows, train, TrainHistory, TrainReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation-AUC improvement before stopping.
    pub patience: usize,
    /// Positive-class loss multiplier; `N_neg / N_pos` of the training
    /// windows when unset.
    pub pos_weight: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 50,
            batch_size: 32,
            patience: 5,
            pos_weight: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Param(m));
        if !(self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must be in [0, 1), got {b}"));
            }
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be > 0, got {}", self.eps));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if let Some(w) = self.pos_weight {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("pos_weight must be positive, got {w}"));
            }
        }
        Ok(())
    }
}

/// Everything needed to score raw records: weights, architecture, the frozen
/// feature encoder and the alert threshold chosen at training time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub encoder: FeatureEncoder,
    pub threshold: f64,
}

impl TrainedModel {
    pub fn score(&self, window: &Matrix) -> Result<f64> {
        predict(window, &self.params, &self.config)
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: TrainedModel,
    pub report: TrainReport,
    pub validation: MetricsReport,
    pub test: Option<MetricsReport>,
}

/// Trains on `ds.train`, selects the best-F1 threshold on `ds.validation`,
/// and reports test metrics at that threshold when the test split has both
/// classes. `model_cfg.input_dim` and `window` are taken from the dataset.
pub fn fit(ds: &Dataset, model_cfg: &ModelConfig, train_cfg: &TrainConfig) -> Result<FitOutcome> {
    let window = ds
        .train
        .first()
        .map(|w| w.features.rows())
        .ok_or_else(|| Error::Data("training split has no windows".into()))?;
    let cfg = ModelConfig {
        input_dim: ds.encoder.dim(),
        window,
        ..model_cfg.clone()
    };
    let (params, report) = train(&ds.train, &ds.validation, &cfg, train_cfg)?;
    let val_scores = score_windows(&ds.validation, &params, &cfg)?;
    let threshold = best_f1_threshold(&val_scores)?;
    let validation = evaluate(&val_scores, threshold)?;
    let test = if ds.test.is_empty() {
        None
    } else {
        evaluate(&score_windows(&ds.test, &params, &cfg)?, threshold).ok()
    };
    Ok(FitOutcome {
        model: TrainedModel {
            config: cfg,
            params,
            encoder: ds.encoder.clone(),
            threshold,
        },
        report,
        validation,
        test,
    })
}
