use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SequenceWindow;
use crate::error::{Error, Result};
use crate::evaluation::auc;
use crate::model::{backward, forward, predict, ModelConfig, ModelParams, Weights};
use crate::numeric::SeededRng;

use super::{adam_step, AdamState, TrainConfig};

/// The reproducible part of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean weighted loss over each epoch's training windows.
    pub epoch_losses: Vec<f64>,
    pub val_aucs: Vec<f64>,
    /// 1-based; 0 when no epoch ran.
    pub best_epoch: usize,
    pub best_val_auc: Option<f64>,
    pub pos_weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    #[serde(flatten)]
    pub history: TrainHistory,
    pub wall_clock_secs: f64,
}

/// Scores windows in inference mode, preserving input order.
pub fn score_windows(
    windows: &[SequenceWindow],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<Vec<(f64, u8)>> {
    windows
        .par_iter()
        .map(|w| predict(&w.features, params, cfg).map(|p| (p, w.label)))
        .collect()
}

fn default_pos_weight(train: &[SequenceWindow]) -> f64 {
    let pos = train.iter().filter(|w| w.label == 1).count();
    let neg = train.len() - pos;
    if pos == 0 || neg == 0 {
        1.0
    } else {
        neg as f64 / pos as f64
    }
}

/// Mini-batch training with early stopping on validation AUC. Returns the
/// parameters of the best validation epoch.
///
/// Per-example forward/backward passes of a batch run in parallel; their
/// gradients are summed in example order so results do not depend on
/// scheduling.
pub fn train(
    train: &[SequenceWindow],
    validation: &[SequenceWindow],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    let started = Instant::now();
    train_cfg.validate()?;
    let mut params = ModelParams::init(model_cfg)?;
    if train.is_empty() {
        return Err(Error::Data("training split has no windows".into()));
    }
    if validation.is_empty() {
        return Err(Error::Data("validation split has no windows".into()));
    }
    let pos_weight = train_cfg
        .pos_weight
        .unwrap_or_else(|| default_pos_weight(train));
    let mut history = TrainHistory {
        epoch_losses: Vec::new(),
        val_aucs: Vec::new(),
        best_epoch: 0,
        best_val_auc: None,
        pos_weight,
    };
    if train_cfg.epochs == 0 {
        return Ok((
            params,
            TrainReport {
                history,
                wall_clock_secs: started.elapsed().as_secs_f64(),
            },
        ));
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = SeededRng::new(train_cfg.seed);
    let mut state = AdamState::new(model_cfg);
    let mut best = params.clone();
    let mut stale = 0;

    for epoch in 1..=train_cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(train_cfg.batch_size) {
            let results: Vec<(f64, Weights)> = batch
                .par_iter()
                .map(|&i| {
                    let lane = ((epoch as u64) << 32) | i as u64;
                    let mut rng = SeededRng::derive(train_cfg.seed, lane);
                    let w = &train[i];
                    let (_, trace) = forward(&w.features, &params, model_cfg, true, &mut rng)?;
                    backward(&trace, &params, w.label, pos_weight)
                })
                .collect::<Result<_>>()?;
            let mut total = Weights::zeros(model_cfg);
            for (loss, g) in &results {
                loss_sum += loss;
                total.add_assign(g)?;
            }
            total.scale_in_place(1.0 / batch.len() as f64);
            adam_step(&mut params.weights, &total, &mut state, train_cfg)?;
        }
        let epoch_loss = loss_sum / train.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Data(format!(
                "training loss diverged at epoch {epoch}"
            )));
        }
        history.epoch_losses.push(epoch_loss);

        let val_auc = auc(&score_windows(validation, &params, model_cfg)?)?;
        history.val_aucs.push(val_auc);
        log::info!("epoch {epoch}: loss {epoch_loss:.6} val_auc {val_auc:.6}");
        if history.best_val_auc.is_none_or(|b| val_auc > b) {
            history.best_val_auc = Some(val_auc);
            history.best_epoch = epoch;
            best = params.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= train_cfg.patience {
                log::info!(
                    "early stop after epoch {epoch}, best epoch {}",
                    history.best_epoch
                );
                break;
            }
        }
    }
    Ok((
        best,
        TrainReport {
            history,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        },
    ))
}
