//! Replay logs and the client wire protocol.

mod replay;
pub mod wire;

pub use replay::{
    agent_events, initial_state, load_replay, parse_replay, resimulate, resimulate_with, write_replay,
    ReplayError, ReplayRecord, ReplayWriter, Resimulated,
};

/// Version stamped into replay headers and every wire message.
pub const SCHEMA_VERSION: u32 = 1;
