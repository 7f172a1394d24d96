use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Command, CommandError, EventMsg, Session, SessionId};
use crate::config::{ConfigError, SessionConfig};

/// A command accepted at iteration `at`, i.e. before iteration `at + 1` ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogEntry {
    pub at: u64,
    pub command: Command,
}

/// Everything needed to rebuild a session: creation inputs plus the
/// accepted commands in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandLog {
    #[serde(default)]
    pub seed: Option<u64>,
    pub config: SessionConfig,
    pub entries: Vec<LogEntry>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("entry {index} ({command}) at iteration {at}: session is paused at iteration {reached}")]
    Stalled {
        index: usize,
        command: String,
        at: u64,
        reached: u64,
    },
    #[error("entry {index} ({command}) was rejected on replay: {source}")]
    Rejected {
        index: usize,
        command: String,
        source: CommandError,
    },
}

/// Rebuilds a session from its log. Between entries the session ticks while
/// running, exactly as a live session would; after the last entry it keeps
/// ticking up to `until` (if given) or until it pauses or finishes.
pub fn replay(log: &CommandLog, base_dir: &Path, until: Option<u64>) -> Result<Session, ReplayError> {
    replay_with(log, base_dir, until, |_| {})
}

/// [`replay`], handing every event the session emits to `sink` in order.
pub fn replay_with(
    log: &CommandLog,
    base_dir: &Path,
    until: Option<u64>,
    mut sink: impl FnMut(EventMsg),
) -> Result<Session, ReplayError> {
    let mut session = Session::create(SessionId("replay".into()), log.config.clone(), log.seed, base_dir)?;
    for (index, entry) in log.entries.iter().enumerate() {
        while session.iteration() < entry.at {
            if !session.is_running() {
                return Err(ReplayError::Stalled {
                    index,
                    command: entry.command.name().into(),
                    at: entry.at,
                    reached: session.iteration(),
                });
            }
            session.tick().into_iter().for_each(&mut sink);
        }
        let (_, events) = session
            .apply(entry.command.clone())
            .map_err(|source| ReplayError::Rejected {
                index,
                command: entry.command.name().into(),
                source,
            })?;
        events.into_iter().for_each(&mut sink);
    }
    while session.is_running() && until.is_none_or(|u| session.iteration() < u) {
        session.tick().into_iter().for_each(&mut sink);
    }
    Ok(session)
}
