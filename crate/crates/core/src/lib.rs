//! Transformer-based anomaly scoring for accounting transaction sequences.
//!
//! Records are encoded into per-account feature windows, classified by a
//! multi-head self-attention network, and scored either in batch or one
//! record at a time as they arrive.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod numeric;
pub mod serving;
pub mod training;

pub use data::{Dataset, FeatureEncoder, SequenceWindow, SplitOptions, TransactionRecord};
pub use error::{Error, Result};
pub use evaluation::{MetricsReport, Report, SweepResult};
pub use model::{ModelConfig, ModelParams, Pooling};
pub use numeric::{Matrix, SeededRng};
pub use serving::{ScoreEvent, StreamState};
pub use training::{TrainConfig, TrainReport, TrainedModel};
