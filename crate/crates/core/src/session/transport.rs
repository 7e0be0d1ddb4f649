use std::io::{self, Read, Write};

use log::{debug, warn};

use super::protocol::{read_frame, write_frame};
use super::service::Session;
use crate::error::Result;

/// Message counts for one connection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub received: usize,
    pub sent: usize,
}

/// Runs `session` over a framed byte stream until the peer closes it, then
/// persists the session with [`Session::finish`]. Replies are written in
/// the order they are produced; messages are handled strictly in arrival
/// order, so a click sent during winner feedback lands in the next round.
pub fn serve(session: &mut Session, mut reader: impl Read, mut writer: impl Write) -> Result<ServeStats> {
    let mut stats = ServeStats::default();
    let outcome = loop {
        let frame = match read_frame(&mut reader) {
            Ok(Some(frame)) => frame,
            Ok(None) => break Ok(()),
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                warn!("connection closed mid-frame");
                break Ok(());
            }
            Err(e) => break Err(e),
        };
        stats.received += 1;
        let mut write_result = Ok(());
        for env in session.handle_bytes(&frame) {
            if let Err(e) = write_frame(&mut writer, &env) {
                write_result = Err(e);
                break;
            }
            stats.sent += 1;
        }
        if let Err(e) = write_result {
            break Err(e);
        }
    };
    debug!("transport ended: {stats:?}");
    session.finish()?;
    outcome?;
    Ok(stats)
}
