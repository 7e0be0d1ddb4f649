//! Live sessions over a framed JSON protocol.
//!
//! A client sends `hello`, then `click` and `period_changed` messages; the
//! server answers with `config`, `state`, `winner`, `undo_applied`,
//! `period_changed` and `error`. [`Session`] holds the logic and never
//! touches a socket; [`serve`] runs it over any byte stream.

pub mod log;
pub mod protocol;
mod service;
mod transport;

pub use self::log::{read_log, replay, ClickLog, LogEntry, LogHeader, RecordedLog, ReplayOutcome};
pub use protocol::{Body, Envelope, PROTOCOL_VERSION};
pub use service::{Session, SessionOptions, DEFAULT_AUTOSAVE_EVERY};
pub use transport::{serve, ServeStats};
