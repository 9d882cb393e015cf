use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the `T` rows of the last attention block collapse to one vector
/// before the classification head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Mean,
    Last,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Per-timestep feature width `d`.
    pub input_dim: usize,
    /// Latent width `d_h`.
    pub latent_dim: usize,
    pub heads: usize,
    /// Window length `T`.
    pub window: usize,
    pub blocks: usize,
    /// Hidden width of the classification head; `4 * latent_dim` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ff_dim: Option<usize>,
    pub dropout_rate: f64,
    #[serde(default)]
    pub pooling: Pooling,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            ..Self::default()
        }
    }

    pub fn ff_width(&self) -> usize {
        self.ff_dim.unwrap_or(4 * self.latent_dim)
    }

    /// Width of one head's subspace, `d_h / h`.
    pub fn head_dim(&self) -> usize {
        self.latent_dim / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.input_dim == 0 {
            return fail("input_dim must be >= 1".into());
        }
        if self.latent_dim == 0 {
            return fail("latent_dim must be >= 1".into());
        }
        if self.heads == 0 {
            return fail("heads must be >= 1".into());
        }
        if !self.latent_dim.is_multiple_of(self.heads) {
            return fail(format!(
                "heads ({}) must divide latent_dim ({})",
                self.heads, self.latent_dim
            ));
        }
        if self.window == 0 {
            return fail("window must be >= 1".into());
        }
        if self.blocks == 0 {
            return fail("blocks must be >= 1".into());
        }
        if self.ff_width() == 0 {
            return fail("ff_dim must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 1,
            latent_dim: 32,
            heads: 4,
            window: 32,
            blocks: 2,
            ff_dim: None,
            dropout_rate: 0.1,
            pooling: Pooling::Mean,
            seed: 0,
        }
    }
}
