//! Wire format: each message is a 4-byte big-endian length followed by that
//! many bytes of UTF-8 JSON.
//!
//! ```json
//! {"v":1,"seq":3,"ts_ms":1520,"kind":"click","payload":{"t_ms":1498.5}}
//! ```

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::selector::ClockId;

pub const PROTOCOL_VERSION: u32 = 1;
pub const MAX_FRAME_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub v: u32,
    /// Strictly increasing per direction.
    pub seq: u64,
    /// Sender's session clock, milliseconds.
    pub ts_ms: u64,
    #[serde(flatten)]
    pub body: Body,
}

impl Envelope {
    pub fn new(seq: u64, ts_ms: u64, body: Body) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            seq,
            ts_ms,
            body,
        }
    }

    pub fn kind(&self) -> &'static str {
        self.body.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Body {
    Hello(Hello),
    Config(ConfigInfo),
    State(StateView),
    Click(Click),
    Winner(WinnerInfo),
    UndoApplied(UndoApplied),
    PeriodChanged(PeriodChange),
    Error(ErrorInfo),
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Hello(_) => "hello",
            Body::Config(_) => "config",
            Body::State(_) => "state",
            Body::Click(_) => "click",
            Body::Winner(_) => "winner",
            Body::UndoApplied(_) => "undo_applied",
            Body::PeriodChanged(_) => "period_changed",
            Body::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    #[serde(default)]
    pub client: String,
    /// Client clock when the hello was sent, echoed back for offset estimation.
    #[serde(default)]
    pub client_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigInfo {
    pub protocol_version: u32,
    pub period_index: i32,
    pub period_s: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub bin_count: usize,
    pub n_delay: usize,
    pub server_time_ms: u64,
    pub echo_client_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockView {
    pub id: ClockId,
    pub label: String,
    /// Session-clock offset, in seconds, at which the hand points at noon.
    pub phase_s: f64,
    pub posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub round: u64,
    pub clicks: usize,
    pub text: String,
    pub period_index: i32,
    pub period_s: f64,
    pub clocks: Vec<ClockView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Click {
    /// Capture time on the session clock.
    pub t_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinnerInfo {
    pub round: u64,
    pub clock_id: ClockId,
    pub label: String,
    pub clicks: usize,
    /// Output text after the selection took effect.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndoApplied {
    pub text: String,
    /// Whether a pending selection was withheld from learning.
    pub discarded: bool,
}

/// Sent by the client as a request (only `period_index`), and by the server
/// once the change is accepted or applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodChange {
    pub period_index: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_s: Option<f64>,
    /// `false` while deferred to the end of the current selection.
    #[serde(default)]
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

pub fn encode(envelope: &Envelope) -> serde_json::Result<Vec<u8>> {
    serde_json::to_vec(envelope)
}

pub fn decode(bytes: &[u8]) -> serde_json::Result<Envelope> {
    serde_json::from_slice(bytes)
}

pub fn write_frame(writer: &mut impl Write, envelope: &Envelope) -> io::Result<()> {
    let body = encode(envelope).map_err(io::Error::other)?;
    let len = u32::try_from(body.len()).map_err(|_| io::Error::other("frame too large"))?;
    writer.write_all(&len.to_be_bytes())?;
    writer.write_all(&body)?;
    writer.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream between frames.
pub fn read_frame(reader: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match reader.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame of {len} bytes exceeds {MAX_FRAME_BYTES}"),
        ));
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body)?;
    Ok(Some(body))
}
