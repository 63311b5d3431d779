//! Append-only game logs: one JSON record per line. A log holds everything
//! needed to re-run the game headlessly.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SCHEMA_VERSION;
use crate::env::{AtomicAction, EnvError, GameConfig, GameState, MapSpec};
use crate::runtime::{AgentEvent, AgentKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ReplayRecord {
    Header {
        schema_version: u32,
        config: GameConfig,
        map: MapSpec,
        agent: AgentKind,
        #[serde(default)]
        human: String,
        #[serde(default)]
        backend: String,
    },
    Command {
        tick: u64,
        game_s: f64,
        text: String,
    },
    Tick {
        tick: u64,
        actions: [AtomicAction; 2],
    },
    /// Timers ran without player input (a pause that does not freeze orders).
    Advance {
        dt: f64,
    },
    Agent {
        event: AgentEvent,
    },
    Final {
        tick: u64,
        score: i32,
        state_hash: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("replay i/o: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt record at line {line}: {message}")]
    CorruptRecord { line: usize, message: String },
    #[error("replay has no header")]
    MissingHeader,
    #[error("unsupported schema version {0}")]
    UnsupportedVersion(u32),
    #[error("replay does not apply: {0}")]
    Env(#[from] EnvError),
}

/// Streams records to a file (or any writer), flushing every line.
pub struct ReplayWriter {
    out: Box<dyn Write + Send>,
}

impl ReplayWriter {
    pub fn create(path: &Path) -> io::Result<ReplayWriter> {
        Ok(ReplayWriter {
            out: Box::new(BufWriter::new(File::create(path)?)),
        })
    }

    pub fn from_writer(out: Box<dyn Write + Send>) -> ReplayWriter {
        ReplayWriter { out }
    }

    pub fn append(&mut self, record: &ReplayRecord) -> io::Result<()> {
        let line = serde_json::to_string(record).map_err(io::Error::other)?;
        writeln!(self.out, "{line}")?;
        self.out.flush()
    }
}

pub fn write_replay(path: &Path, records: &[ReplayRecord]) -> io::Result<()> {
    let mut w = ReplayWriter::create(path)?;
    for r in records {
        w.append(r)?;
    }
    Ok(())
}

pub fn parse_replay(text: &str) -> Result<Vec<ReplayRecord>, ReplayError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| ReplayError::CorruptRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

pub fn load_replay(path: &Path) -> Result<Vec<ReplayRecord>, ReplayError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| ReplayError::CorruptRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resimulated {
    pub ticks: u64,
    pub score: i32,
    pub state_hash: String,
    /// What the log's final record claims, if present.
    pub logged: Option<(i32, String)>,
}

impl Resimulated {
    pub fn matches_log(&self) -> bool {
        self.logged
            .as_ref()
            .is_some_and(|(score, hash)| *score == self.score && *hash == self.state_hash)
    }
}

/// The state a header describes, before any tick.
pub fn initial_state(records: &[ReplayRecord]) -> Result<GameState, ReplayError> {
    match records.first() {
        Some(ReplayRecord::Header {
            schema_version,
            config,
            map,
            ..
        }) => {
            if *schema_version != SCHEMA_VERSION {
                return Err(ReplayError::UnsupportedVersion(*schema_version));
            }
            Ok(GameState::new(config.clone(), map.clone())?)
        }
        _ => Err(ReplayError::MissingHeader),
    }
}

/// Re-runs the logged inputs against a fresh game. `visit` sees the state
/// before each tick together with that tick's actions and its events.
pub fn resimulate_with(
    records: &[ReplayRecord],
    mut visit: impl FnMut(&GameState, [AtomicAction; 2], &[crate::env::GameEvent]),
) -> Result<(GameState, Option<(i32, String)>), ReplayError> {
    let mut state = initial_state(records)?;
    let mut logged = None;
    for rec in &records[1..] {
        match rec {
            ReplayRecord::Tick { actions, .. } => {
                let before = state.clone();
                let events = state.step_mut(*actions)?;
                visit(&before, *actions, &events);
            }
            ReplayRecord::Advance { dt } => {
                state.advance_time_mut(*dt);
            }
            ReplayRecord::Final {
                score, state_hash, ..
            } => logged = Some((*score, state_hash.clone())),
            ReplayRecord::Header { .. } => return Err(ReplayError::MissingHeader),
            ReplayRecord::Command { .. } | ReplayRecord::Agent { .. } => {}
        }
    }
    Ok((state, logged))
}

pub fn resimulate(records: &[ReplayRecord]) -> Result<Resimulated, ReplayError> {
    let (state, logged) = resimulate_with(records, |_, _, _| {})?;
    Ok(Resimulated {
        ticks: state.tick,
        score: state.score,
        state_hash: state.state_hash(),
        logged,
    })
}

/// Agent events carried by a log, in order.
pub fn agent_events(records: &[ReplayRecord]) -> Vec<AgentEvent> {
    records
        .iter()
        .filter_map(|r| match r {
            ReplayRecord::Agent { event } => Some(event.clone()),
            _ => None,
        })
        .collect()
}
