//! Transformer window classifier: linear embedding plus sinusoidal positions,
//! stacked multi-head self-attention blocks with residuals, and a two-layer
//! sigmoid head. Forward passes record a [`ForwardTrace`] that
//! [`backward`] consumes.

mod backward;
mod config;
mod forward;
pub mod gradcheck;
mod params;

pub use backward::backward;
pub use config::{ModelConfig, Pooling};
pub use forward::{
    attention_head, classify_head, embed, forward, multi_head, pool, predict, BlockTrace,
    ClassifierTrace, ForwardTrace, HeadTrace,
};
pub use params::{positional_table, BlockWeights, HeadWeights, ModelParams, Weights};
