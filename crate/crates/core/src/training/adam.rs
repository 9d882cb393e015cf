use crate::error::{Error, Result};
use crate::model::{ModelConfig, Weights};

use super::TrainConfig;

/// First and second moment estimates, one per learnable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Weights,
    pub v: Weights,
    /// Number of updates applied so far.
    pub step: u64,
}

impl AdamState {
    pub fn new(cfg: &ModelConfig) -> Self {
        Self {
            m: Weights::zeros(cfg),
            v: Weights::zeros(cfg),
            step: 0,
        }
    }
}

/// One bias-corrected adaptive-moment update of every learnable tensor.
/// The positional table is not a [`Weights`] member and is never touched.
pub fn adam_step(
    weights: &mut Weights,
    grads: &Weights,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);

    let params = weights.tensors_mut();
    let grads = grads.tensors();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    if params.len() != grads.len() || params.len() != ms.len() {
        return Err(Error::Internal("optimizer tensor count mismatch".into()));
    }
    for (((p, g), m), v) in params.into_iter().zip(grads).zip(ms).zip(vs) {
        if p.shape() != g.shape() || p.shape() != m.shape() {
            return Err(Error::Internal(format!(
                "optimizer shape mismatch: param {:?}, grad {:?}",
                p.shape(),
                g.shape()
            )));
        }
        let it = p
            .as_mut_slice()
            .iter_mut()
            .zip(g.as_slice())
            .zip(m.as_mut_slice().iter_mut().zip(v.as_mut_slice()));
        for ((p, &g), (m, v)) in it {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
