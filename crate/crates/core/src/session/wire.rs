//! Messages exchanged with a live client, one JSON object per line or
//! WebSocket text frame. Every message carries the schema version in `v`.
//!
//! Snapshots are full every [`FULL_EVERY`] ticks; in between, a delta is a
//! JSON merge patch against the previous snapshot's view.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::SCHEMA_VERSION;
use crate::env::{AtomicAction, Cell, ChopBoard, GameConfig, GameEvent, GameState, Item, MapSpec, Order, Player, PotState};
use crate::runtime::AgentKind;

pub const FULL_EVERY: u64 = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Lobby,
    Running,
    Paused,
    Finished,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Ai,
    Human,
}

/// What a client needs to draw one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub tick: u64,
    pub clock: f64,
    pub score: i32,
    pub players: Vec<Player>,
    pub items: Vec<(Cell, Item)>,
    pub pots: Vec<(Cell, PotState)>,
    pub boards: Vec<(Cell, ChopBoard)>,
    pub orders: Vec<Order>,
}

impl StateView {
    pub fn of(state: &GameState) -> StateView {
        StateView {
            tick: state.tick,
            clock: state.clock,
            score: state.score,
            players: state.players.to_vec(),
            items: state.items.iter().map(|(c, i)| (*c, *i)).collect(),
            pots: state.pots.iter().map(|(c, p)| (*c, *p)).collect(),
            boards: state.boards.iter().map(|(c, b)| (*c, b.clone())).collect(),
            orders: state.open_orders().cloned().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SnapshotBody {
    Full { view: StateView },
    Delta { patch: Value },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome {
        session_id: String,
        map: MapSpec,
        config: GameConfig,
        agent: AgentKind,
    },
    Snapshot {
        tick: u64,
        body: SnapshotBody,
    },
    Chat {
        from: Speaker,
        text: String,
        game_s: f64,
    },
    Score {
        score: i32,
        events: Vec<GameEvent>,
    },
    Phase {
        phase: Phase,
    },
    Error {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Start,
    Action { action: AtomicAction },
    Chat { text: String },
    Pause { paused: bool },
}

/// Body of a create-session request on the lobby endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub map: String,
    pub agent: String,
    /// Merge patch applied to the map's default game config.
    #[serde(default)]
    pub overrides: Option<Value>,
}

/// Replies of the lobby HTTP endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LobbyMessage {
    Maps {
        maps: Vec<String>,
    },
    Agents {
        agents: Vec<AgentKind>,
    },
    Created {
        session_id: String,
        map: String,
        agent: AgentKind,
        tick_rate: f64,
        phase: Phase,
    },
    Error {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub v: u32,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("schema version {got}, expected {expected}")]
    Version { got: u32, expected: u32 },
}

#[derive(Serialize)]
struct EnvelopeRef<'a, T> {
    v: u32,
    #[serde(flatten)]
    body: &'a T,
}

pub fn encode<T: Serialize>(body: &T) -> String {
    serde_json::to_string(&EnvelopeRef {
        v: SCHEMA_VERSION,
        body,
    })
    .expect("message serializes")
}

pub fn decode<T: for<'de> Deserialize<'de>>(line: &str) -> Result<T, WireError> {
    let env: Envelope<T> = serde_json::from_str(line).map_err(|e| WireError::Malformed(e.to_string()))?;
    if env.v != SCHEMA_VERSION {
        return Err(WireError::Version {
            got: env.v,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(env.body)
}

/// Merge patch turning `from` into `to`.
pub fn diff(from: &Value, to: &Value) -> Value {
    match (from, to) {
        (Value::Object(a), Value::Object(b)) => {
            let mut out = Map::new();
            for (k, vb) in b {
                match a.get(k) {
                    Some(va) if va == vb => {}
                    Some(va) => {
                        out.insert(k.clone(), diff(va, vb));
                    }
                    None => {
                        out.insert(k.clone(), vb.clone());
                    }
                }
            }
            for k in a.keys() {
                if !b.contains_key(k) {
                    out.insert(k.clone(), Value::Null);
                }
            }
            Value::Object(out)
        }
        _ => to.clone(),
    }
}

/// Applies a merge patch in place.
pub fn apply_patch(target: &mut Value, patch: &Value) {
    match patch {
        Value::Object(p) => {
            if !target.is_object() {
                *target = Value::Object(Map::new());
            }
            let t = target.as_object_mut().expect("object");
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else {
                    apply_patch(t.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        _ => *target = patch.clone(),
    }
}

/// Server side: turns successive states into snapshot bodies.
#[derive(Default)]
pub struct SnapshotEncoder {
    last: Option<Value>,
}

impl SnapshotEncoder {
    pub fn encode(&mut self, state: &GameState) -> ServerMessage {
        self.encode_view(StateView::of(state))
    }

    /// Full on every [`FULL_EVERY`]th tick and for the first frame, else a
    /// patch against the last frame this encoder produced. Skipped frames
    /// are fine: the patch always starts from what the client last saw.
    pub fn encode_view(&mut self, view: StateView) -> ServerMessage {
        let tick = view.tick;
        let value = serde_json::to_value(&view).expect("view serializes");
        let body = match &self.last {
            Some(prev) if tick % FULL_EVERY != 0 => SnapshotBody::Delta {
                patch: diff(prev, &value),
            },
            _ => SnapshotBody::Full { view },
        };
        self.last = Some(value);
        ServerMessage::Snapshot { tick, body }
    }
}

/// Client side: rebuilds views from snapshot bodies.
#[derive(Default)]
pub struct SnapshotDecoder {
    current: Option<Value>,
}

impl SnapshotDecoder {
    pub fn apply(&mut self, body: &SnapshotBody) -> Result<StateView, WireError> {
        match body {
            SnapshotBody::Full { view } => {
                self.current = Some(serde_json::to_value(view).expect("view serializes"));
                Ok(view.clone())
            }
            SnapshotBody::Delta { patch } => {
                let cur = self
                    .current
                    .as_mut()
                    .ok_or_else(|| WireError::Malformed("delta before any full snapshot".into()))?;
                apply_patch(cur, patch);
                serde_json::from_value(cur.clone()).map_err(|e| WireError::Malformed(e.to_string()))
            }
        }
    }
}
