//! Transaction records, feature encoding, per-account windowing and the
//! synthetic ledger generator.

mod dataset;
mod encoder;
mod record;
mod synth;
mod window;

pub use dataset::{Dataset, SplitOptions};
pub use encoder::{with_predecessors, FeatureEncoder, Standardizer};
pub use record::{
    ingest, parse_record_json, write_records, Direction, Ingested, RecordFormat, RowIssue,
    TransactionRecord, CSV_COLUMNS,
};
pub use synth::{generate_synthetic, AnomalyKind, SynthConfig, STRUCTURING_THRESHOLD};
pub use window::{
    encode_accounts, window_count, windowize, EncodedSequence, SequenceWindow, WindowLabel,
    WindowReport,
};
