//! Click logs: one JSON object per line. The first line is a header with the
//! engine and prior configuration and the density the session started from;
//! every later line is a click or a period request, tagged with its round.
//!
//! ```text
//! {"header":{"format":"nomon-click-log","version":1,...}}
//! {"t_ms":1532.0,"round":0}
//! {"period_index":3,"round":1}
//! ```

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::protocol::{Body, Click, Envelope, Hello, PeriodChange, WinnerInfo};
use super::service::{Session, SessionOptions};
use crate::click_model::{ClickDensity, DensityBlob};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::language_prior::{CorpusIndex, PriorConfig};

pub const CLICK_LOG_FORMAT: &str = "nomon-click-log";
pub const CLICK_LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub engine: EngineConfig,
    pub prior: PriorConfig,
    pub density: DensityBlob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogEntry {
    Header { header: Box<LogHeader> },
    Click { t_ms: f64, round: u64 },
    Period { period_index: i32, round: u64 },
}

impl LogEntry {
    pub fn round(&self) -> Option<u64> {
        match self {
            LogEntry::Header { .. } => None,
            LogEntry::Click { round, .. } | LogEntry::Period { round, .. } => Some(*round),
        }
    }
}

/// Append-only writer for a click log.
#[derive(Debug)]
pub struct ClickLog<W: Write> {
    sink: W,
}

impl<W: Write> ClickLog<W> {
    /// Writes the header line.
    pub fn start(mut sink: W, engine: &EngineConfig, prior: &PriorConfig, density: &ClickDensity) -> Result<Self> {
        let header = LogEntry::Header {
            header: Box::new(LogHeader {
                format: CLICK_LOG_FORMAT.to_string(),
                version: CLICK_LOG_VERSION,
                engine: engine.clone(),
                prior: prior.clone(),
                density: density.to_blob(),
            }),
        };
        write_line(&mut sink, &header)?;
        Ok(Self { sink })
    }

    pub fn append(&mut self, entry: &LogEntry) -> Result<()> {
        write_line(&mut self.sink, entry)
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.sink.flush()?)
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

fn write_line(sink: &mut impl Write, entry: &LogEntry) -> Result<()> {
    serde_json::to_writer(&mut *sink, entry)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// A parsed log: its header and the entries after it.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedLog {
    pub header: LogHeader,
    pub entries: Vec<LogEntry>,
}

pub fn read_log(reader: impl BufRead) -> Result<RecordedLog> {
    let mut header = None;
    let mut entries = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: LogEntry = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("click log line {}: {e}", n + 1)))?;
        match (entry, header.is_some()) {
            (LogEntry::Header { header: h }, false) => header = Some(*h),
            (LogEntry::Header { .. }, true) => {
                return Err(Error::Format(format!("click log line {}: second header", n + 1)))
            }
            (_, false) => return Err(Error::Format("click log must start with a header".into())),
            (entry, true) => entries.push(entry),
        }
    }
    let header = header.ok_or_else(|| Error::Format("click log has no header".into()))?;
    if header.format != CLICK_LOG_FORMAT {
        return Err(Error::Format(format!("click log format {:?}", header.format)));
    }
    if header.version != CLICK_LOG_VERSION {
        return Err(Error::Version {
            format: CLICK_LOG_FORMAT,
            found: header.version,
            expected: CLICK_LOG_VERSION,
        });
    }
    Ok(RecordedLog { header, entries })
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub winners: Vec<WinnerInfo>,
    pub text: String,
    pub density: ClickDensity,
    /// Every envelope the session sent, in order.
    pub transcript: Vec<Envelope>,
}

/// Feeds a recorded log through a fresh session built from its header.
/// Fails if an entry's round does not match the round the replay is in,
/// which means the log was produced with a different corpus or engine.
pub fn replay(log: &RecordedLog, index: Arc<CorpusIndex>) -> Result<ReplayOutcome> {
    let options = SessionOptions {
        engine: log.header.engine.clone(),
        prior: log.header.prior.clone(),
        density_path: None,
        autosave_every: 0,
    };
    let density = ClickDensity::from_blob(log.header.density.clone())?;
    let mut session = Session::with_density(options, index, density)?;
    session.set_clock(|| 0);
    let mut transcript = session.handle(Envelope::new(
        0,
        0,
        Body::Hello(Hello {
            client: "replay".into(),
            client_time_ms: 0.0,
        }),
    ));
    for (i, entry) in log.entries.iter().enumerate() {
        let expected = entry.round().expect("headers are split off");
        if expected != session.round_id() {
            return Err(Error::Format(format!(
                "click log entry {} is for round {expected}, replay is in round {}",
                i + 1,
                session.round_id()
            )));
        }
        let body = match *entry {
            LogEntry::Click { t_ms, .. } => Body::Click(Click { t_ms }),
            LogEntry::Period { period_index, .. } => Body::PeriodChanged(PeriodChange {
                period_index,
                period_s: None,
                applied: false,
            }),
            LogEntry::Header { .. } => unreachable!(),
        };
        transcript.extend(session.handle(Envelope::new(i as u64 + 1, 0, body)));
    }
    let text = session.text().to_string();
    let winners = session.winners().to_vec();
    let density = session.learner().density().clone();
    Ok(ReplayOutcome {
        winners,
        text,
        density,
        transcript,
    })
}
