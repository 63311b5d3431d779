use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::catalog::MacroAction;
use crate::env::AtomicAction;
use crate::executor::FailReason;
use crate::fast_mind::{ConditionInput, SelectionTrace};
use crate::llm::CallKind;
use crate::slow_mind::{AssessmentResult, HumanCommand, Intention};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mind {
    Slow,
    Fast,
}

/// What made the agent pick a new macro.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cause {
    Start,
    Command,
    MacroDone,
    MacroFailed,
    Retry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chooser {
    FastMind,
    SlowMind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MacroEnd {
    Failed(FailReason),
    /// Dropped because a new human command arrived.
    Superseded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    CommandReceived {
        command: HumanCommand,
    },
    IntentionInferred {
        command_id: u64,
        intention: Intention,
        latency_ms: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    AssessmentDone {
        command_id: Option<u64>,
        result: AssessmentResult,
        latency_ms: f64,
        calls: u32,
    },
    ConditionChanged {
        command_id: Option<u64>,
        condition: ConditionInput,
    },
    MacroChosen {
        command_id: Option<u64>,
        action: MacroAction,
        by: Chooser,
        cause: Cause,
        /// Condition the choice was made under.
        condition: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace: Option<SelectionTrace>,
        #[serde(default)]
        regenerated: bool,
        #[serde(default)]
        fallback: bool,
        decision_ms: f64,
    },
    MacroDone {
        command_id: Option<u64>,
        action: MacroAction,
        atomics: u32,
    },
    MacroFailed {
        command_id: Option<u64>,
        action: MacroAction,
        end: MacroEnd,
        atomics: u32,
    },
    AtomicEmitted {
        command_id: Option<u64>,
        action: AtomicAction,
        /// A new decision arrived for this tick.
        fresh: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decision_ms: Option<f64>,
    },
    ChatSent {
        command_id: Option<u64>,
        text: String,
    },
    ParseError {
        text: String,
    },
    CallStarted {
        mind: Mind,
        call_id: u64,
        call: CallKind,
    },
    CallFinished {
        mind: Mind,
        call_id: u64,
        call: CallKind,
        latency_ms: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    /// Superseded by a new command; its result will be ignored.
    CallAbandoned {
        mind: Mind,
        call_id: u64,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::CommandReceived { .. } => "CommandReceived",
            EventKind::IntentionInferred { .. } => "IntentionInferred",
            EventKind::AssessmentDone { .. } => "AssessmentDone",
            EventKind::ConditionChanged { .. } => "ConditionChanged",
            EventKind::MacroChosen { .. } => "MacroChosen",
            EventKind::MacroDone { .. } => "MacroDone",
            EventKind::MacroFailed { .. } => "MacroFailed",
            EventKind::AtomicEmitted { .. } => "AtomicEmitted",
            EventKind::ChatSent { .. } => "ChatSent",
            EventKind::ParseError { .. } => "ParseError",
            EventKind::CallStarted { .. } => "CallStarted",
            EventKind::CallFinished { .. } => "CallFinished",
            EventKind::CallAbandoned { .. } => "CallAbandoned",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentEvent {
    pub wall_ms: f64,
    pub game_s: f64,
    pub tick: u64,
    pub event: EventKind,
}

/// Most calls any mind had in flight at once.
pub fn max_in_flight(events: &[AgentEvent]) -> HashMap<Mind, usize> {
    let mut live: HashMap<Mind, usize> = HashMap::new();
    let mut peak: HashMap<Mind, usize> = HashMap::new();
    for e in events {
        match &e.event {
            EventKind::CallStarted { mind, .. } => {
                let n = live.entry(*mind).or_default();
                *n += 1;
                let p = peak.entry(*mind).or_default();
                *p = (*p).max(*n);
            }
            EventKind::CallFinished { mind, .. } | EventKind::CallAbandoned { mind, .. } => {
                let n = live.entry(*mind).or_default();
                *n = n.saturating_sub(1);
            }
            _ => {}
        }
    }
    peak
}

/// Checks that every command's conditions advance RawCommand, then
/// InferredIntention, then SlowChat, never going back.
pub fn condition_order_ok(events: &[AgentEvent]) -> bool {
    let mut rank: HashMap<Option<u64>, u8> = HashMap::new();
    for e in events {
        if let EventKind::ConditionChanged { command_id, condition } = &e.event {
            let r = condition.rank();
            let last = rank.entry(*command_id).or_insert(r);
            if r < *last {
                return false;
            }
            *last = r;
        }
    }
    true
}

/// Events never go back in wall time.
pub fn wall_times_ordered(events: &[AgentEvent]) -> bool {
    events.windows(2).all(|w| w[0].wall_ms <= w[1].wall_ms)
}
