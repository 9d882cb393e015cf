//! Real-time scoring: per-account sliding windows fed one record at a time,
//! over standard input or a line-delimited TCP socket.

mod lines;
mod state;
mod tcp;

pub use lines::{process_line, run_lines, run_stdin_loop, LineOutcome, LoopSummary};
pub use state::{ScoreEvent, ScoreStatus, StreamCounters, StreamState};
pub use tcp::{Server, ShutdownHandle};
