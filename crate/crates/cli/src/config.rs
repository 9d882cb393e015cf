//! The TOML run configuration shared by `train` and `sweep`.
//!
//! ```toml
//! [model]
//! latent_dim = 32
//! heads = 4
//! window = 32
//!
//! [train]
//! epochs = 50
//! seed = 7
//!
//! [split]
//! stride = 1
//! label_rule = "any"
//! ```
//!
//! Every key is optional. `input_dim` is never read from the file; it comes
//! from the fitted feature encoder.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use sentinel_core::data::WindowLabel;
use sentinel_core::{ModelConfig, Pooling, SplitOptions, TrainConfig};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub train: TrainConfig,
    pub split: SplitSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub latent_dim: Option<usize>,
    pub heads: Option<usize>,
    pub window: Option<usize>,
    pub blocks: Option<usize>,
    pub ff_dim: Option<usize>,
    pub dropout_rate: Option<f64>,
    pub pooling: Option<Pooling>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub stride: Option<usize>,
    pub label_rule: Option<WindowLabel>,
    pub train_fraction: Option<f64>,
    pub val_fraction: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn model(&self) -> ModelConfig {
        let m = &self.model;
        let d = ModelConfig::default();
        ModelConfig {
            input_dim: d.input_dim,
            latent_dim: m.latent_dim.unwrap_or(d.latent_dim),
            heads: m.heads.unwrap_or(d.heads),
            window: m.window.unwrap_or(d.window),
            blocks: m.blocks.unwrap_or(d.blocks),
            ff_dim: m.ff_dim.or(d.ff_dim),
            dropout_rate: m.dropout_rate.unwrap_or(d.dropout_rate),
            pooling: m.pooling.unwrap_or(d.pooling),
            seed: m.seed.unwrap_or(d.seed),
        }
    }

    pub fn split(&self) -> SplitOptions {
        let s = &self.split;
        let d = SplitOptions::new(self.model().window);
        SplitOptions {
            stride: s.stride.unwrap_or(d.stride),
            label_rule: s.label_rule.unwrap_or(d.label_rule),
            train_fraction: s.train_fraction.unwrap_or(d.train_fraction),
            val_fraction: s.val_fraction.unwrap_or(d.val_fraction),
            ..d
        }
    }
}
