//! Fixtures shared by the latency benchmarks.

use sentinel_core::data::{generate_synthetic, SynthConfig};
use sentinel_core::{
    FeatureEncoder, Matrix, ModelConfig, ModelParams, SeededRng, TrainedModel, TransactionRecord,
};

/// The configuration the per-line latency target is stated for.
pub fn latency_config(input_dim: usize) -> ModelConfig {
    ModelConfig {
        latent_dim: 32,
        heads: 4,
        window: 32,
        blocks: 2,
        ..ModelConfig::new(input_dim)
    }
}

pub fn ledger(accounts: usize, per_account: usize) -> Vec<TransactionRecord> {
    generate_synthetic(&SynthConfig::new(accounts, per_account, 0.05, 1)).expect("valid config")
}

/// An untrained model; latency does not depend on the weight values.
pub fn model_for(records: &[TransactionRecord]) -> TrainedModel {
    let encoder = FeatureEncoder::fit(records).expect("non-empty ledger");
    let config = latency_config(encoder.dim());
    TrainedModel {
        params: ModelParams::init(&config).expect("valid config"),
        config,
        encoder,
        threshold: 0.5,
    }
}

pub fn random_window(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = SeededRng::new(seed);
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gaussian()).collect(),
    )
    .expect("length matches")
}

pub fn random_scores(n: usize, seed: u64) -> Vec<(f64, u8)> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|_| {
            let label = u8::from(rng.bernoulli(0.1));
            (rng.gaussian() + f64::from(label), label)
        })
        .collect()
}
