//! Compares the analytic backward pass against central finite differences
//! of the forward loss. Used by the test suites and the `gradcheck` command.

use serde::Serialize;

use crate::error::Result;
use crate::numeric::{finite_diff_grad, relative_error, Matrix, SeededRng, DEFAULT_EPS};
use crate::training::loss::bce_loss;

use super::{backward, forward, ModelConfig, ModelParams, Pooling};

/// Denominator floor for the per-coordinate relative error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub seed: u64,
    pub label: u8,
    pub parameters: usize,
    pub max_rel_error: f64,
    /// Tensor holding the worst coordinate.
    pub worst_tensor: String,
    pub max_abs_error: f64,
}

/// The configuration the gradient suite runs on.
pub fn small_config(seed: u64) -> ModelConfig {
    ModelConfig {
        input_dim: 6,
        latent_dim: 16,
        heads: 4,
        window: 8,
        blocks: 1,
        ff_dim: None,
        dropout_rate: 0.0,
        pooling: Pooling::Mean,
        seed,
    }
}

/// Runs one check: random params from `cfg.seed`, a Gaussian input window and
/// the given label. Dropout must be disabled in `cfg` for the comparison to be
/// meaningful.
pub fn check_gradients(cfg: &ModelConfig, label: u8, pos_weight: f64) -> Result<GradCheckReport> {
    let params = ModelParams::init(cfg)?;
    let mut data_rng = SeededRng::derive(cfg.seed, 0xDA7A);
    let x = Matrix::from_vec(
        cfg.window,
        cfg.input_dim,
        (0..cfg.window * cfg.input_dim)
            .map(|_| data_rng.gaussian())
            .collect(),
    )?;

    let mut rng = SeededRng::new(cfg.seed);
    let (_, trace) = forward(&x, &params, cfg, true, &mut rng)?;
    let (_, analytic) = backward(&trace, &params, label, pos_weight)?;
    let analytic_flat = analytic.flatten();

    let mut probe = params.clone();
    let numeric = finite_diff_grad(
        |theta| {
            probe
                .weights
                .assign_flat(theta)
                .expect("flat vector has the parameter layout");
            let mut rng = SeededRng::new(cfg.seed);
            match forward(&x, &probe, cfg, true, &mut rng) {
                Ok((p, _)) => bce_loss(p, f64::from(label), pos_weight),
                Err(_) => f64::NAN,
            }
        },
        &params.weights.flatten(),
        DEFAULT_EPS,
    )?;

    let names: Vec<(String, usize)> = params
        .weights
        .named()
        .into_iter()
        .map(|(n, m)| (n, m.len()))
        .collect();
    let mut worst = (0.0f64, 0usize);
    let mut max_abs = 0.0f64;
    for (i, (a, n)) in analytic_flat.iter().zip(&numeric).enumerate() {
        let rel = relative_error(*a, *n, REL_ERROR_FLOOR);
        if rel > worst.0 {
            worst = (rel, i);
        }
        max_abs = max_abs.max((a - n).abs());
    }
    let mut offset = 0;
    let mut worst_tensor = String::new();
    for (name, len) in names {
        if worst.1 < offset + len {
            worst_tensor = name;
            break;
        }
        offset += len;
    }
    Ok(GradCheckReport {
        seed: cfg.seed,
        label,
        parameters: analytic_flat.len(),
        max_rel_error: worst.0,
        worst_tensor,
        max_abs_error: max_abs,
    })
}

/// The standard suite: the small config for each seed, label alternating
/// with the seed.
pub fn run_suite(seeds: &[u64]) -> Result<Vec<GradCheckReport>> {
    seeds
        .iter()
        .map(|&s| check_gradients(&small_config(s), (s % 2) as u8, 1.0))
        .collect()
}
