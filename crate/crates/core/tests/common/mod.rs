#![allow(dead_code)]

use sentinel_core::data::{generate_synthetic, AnomalyKind, SynthConfig};
use sentinel_core::{
    Dataset, FeatureEncoder, ModelConfig, ModelParams, SplitOptions, TrainConfig, TrainedModel,
    TransactionRecord,
};

pub const WINDOW: usize = 6;

pub fn records(accounts: usize, per_account: usize, seed: u64) -> Vec<TransactionRecord> {
    generate_synthetic(&SynthConfig::new(accounts, per_account, 0.05, seed)).unwrap()
}

pub fn spike_records(accounts: usize, per_account: usize, seed: u64) -> Vec<TransactionRecord> {
    generate_synthetic(
        &SynthConfig::new(accounts, per_account, 0.05, seed)
            .with_patterns(&[AnomalyKind::AmountSpike, AnomalyKind::Burst]),
    )
    .unwrap()
}

pub fn small_config(input_dim: usize, seed: u64) -> ModelConfig {
    ModelConfig {
        latent_dim: 8,
        heads: 2,
        window: WINDOW,
        blocks: 1,
        seed,
        ..ModelConfig::new(input_dim)
    }
}

pub fn quick_train(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 16,
        ..TrainConfig::default()
    }
}

pub fn small_dataset(seed: u64) -> Dataset {
    Dataset::prepare(&spike_records(6, 120, seed), &SplitOptions::new(WINDOW)).unwrap()
}

/// A freshly initialised model; good enough wherever only determinism of
/// scoring matters.
pub fn untrained_model(records: &[TransactionRecord], seed: u64) -> TrainedModel {
    let encoder = FeatureEncoder::fit(records).unwrap();
    let config = small_config(encoder.dim(), seed);
    TrainedModel {
        params: ModelParams::init(&config).unwrap(),
        config,
        encoder,
        threshold: 0.5,
    }
}

/// Interleaves accounts the way a live feed would deliver them.
pub fn arrival_order(records: &[TransactionRecord]) -> Vec<TransactionRecord> {
    let mut out = records.to_vec();
    out.sort_by(|a, b| (a.timestamp, &a.account_id).cmp(&(b.timestamp, &b.account_id)));
    out
}
