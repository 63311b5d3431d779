//! Response latency: commands every 20 s through one long game.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{render_table, Summary};
use super::EvalError;
use crate::llm::CallKind;
use crate::runtime::{
    run_simulated, AgentConfig, AgentEvent, AgentKind, EventKind, HumanKind, MatchOutput, Minds, RunSpec, Timed,
};

pub const LATENCY_COMMANDS: [&str; 15] = [
    "You are free to do anything.",
    "Try your best to earn more points.",
    "Focus on the orders.",
    "Chop 3 Lettuce.",
    "Chop 1 Onion.",
    "Chop 2 more.",
    "Cook Bob Soup.",
    "Cook it again.",
    "Alice soup is about to timeout!",
    "Watch out for the Cathy Soup order.",
    "Help me with the third soup on the orders please.",
    "Chop more vegetables.",
    "Aba Aba. Chop 1 potato.",
    "What are the orders?",
    "What is Alice Soup?",
];

pub const FIRST_COMMAND_S: f64 = 5.0;
pub const COMMAND_INTERVAL_S: f64 = 20.0;
/// Long enough for all fifteen commands to play out.
pub const LATENCY_GAME_S: f64 = 300.0;

pub fn latency_script() -> Vec<(f64, String)> {
    LATENCY_COMMANDS
        .iter()
        .enumerate()
        .map(|(i, c)| (FIRST_COMMAND_S + COMMAND_INTERVAL_S * i as f64, c.to_string()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub agent: AgentKind,
    pub command_id: u64,
    pub command: String,
    /// Command to first macro, in ms. Undefined for NEA.
    pub t_m_ms: Option<f64>,
    /// Atomics in that macro, floored at one.
    pub n_a: Option<u32>,
    pub t_a_ms: Option<f64>,
}

/// Latency of every command in an event log.
pub fn latency_records(kind: AgentKind, events: &[AgentEvent]) -> Vec<LatencyRecord> {
    let mut out = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let EventKind::CommandReceived { command } = &e.event else {
            continue;
        };
        let id = command.id;
        let later = &events[i + 1..];
        let mut rec = LatencyRecord {
            agent: kind,
            command_id: id,
            command: command.text.clone(),
            t_m_ms: None,
            n_a: None,
            t_a_ms: None,
        };
        if kind.has_executor() {
            let chosen = later.iter().position(|e| {
                matches!(&e.event, EventKind::MacroChosen { command_id: Some(c), .. } if *c == id)
            });
            if let Some(j) = chosen {
                let EventKind::MacroChosen { action, .. } = &later[j].event else {
                    unreachable!()
                };
                let t_m = later[j].wall_ms - command.received_wall_ms;
                rec.t_m_ms = Some(t_m);
                let atomics = later[j + 1..].iter().find_map(|e| match &e.event {
                    EventKind::MacroDone {
                        command_id: Some(c),
                        action: a,
                        atomics,
                    }
                    | EventKind::MacroFailed {
                        command_id: Some(c),
                        action: a,
                        atomics,
                        ..
                    } if *c == id && a == action => Some(*atomics),
                    _ => None,
                });
                if let Some(n) = atomics {
                    let n = n.max(1);
                    rec.n_a = Some(n);
                    rec.t_a_ms = Some(t_m / n as f64);
                }
            }
        } else {
            rec.t_a_ms = later.iter().find_map(|e| match &e.event {
                EventKind::AtomicEmitted {
                    command_id: Some(c),
                    fresh: true,
                    decision_ms,
                    ..
                } if *c == id => *decision_ms,
                _ => None,
            });
        }
        out.push(rec);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLatency {
    pub call: CallKind,
    pub latency_ms: Summary,
    pub errors: usize,
}

/// Per-call-kind latency from finished calls.
pub fn stage_latencies(events: &[AgentEvent]) -> Vec<StageLatency> {
    let mut by: BTreeMap<String, (CallKind, Vec<f64>, usize)> = BTreeMap::new();
    for e in events {
        if let EventKind::CallFinished {
            call,
            latency_ms,
            error,
            ..
        } = &e.event
        {
            let slot = by.entry(call.to_string()).or_insert((*call, Vec::new(), 0));
            slot.1.push(*latency_ms);
            slot.2 += usize::from(error.is_some());
        }
    }
    by.into_values()
        .map(|(call, xs, errors)| StageLatency {
            call,
            latency_ms: Summary::of(&xs),
            errors,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub agent: AgentKind,
    pub records: Vec<LatencyRecord>,
    pub t_m_ms: Summary,
    pub t_a_ms: Summary,
    pub stages: Vec<StageLatency>,
}

impl LatencyReport {
    pub fn from_events(kind: AgentKind, events: &[AgentEvent]) -> LatencyReport {
        let records = latency_records(kind, events);
        let t_m: Vec<f64> = records.iter().filter_map(|r| r.t_m_ms).collect();
        let t_a: Vec<f64> = records.iter().filter_map(|r| r.t_a_ms).collect();
        LatencyReport {
            agent: kind,
            t_m_ms: Summary::of(&t_m),
            t_a_ms: Summary::of(&t_a),
            stages: stage_latencies(events),
            records,
        }
    }
}

/// One game per agent with the fixed command set.
pub fn bench_latency(kind: AgentKind, minds: &Minds, map: &str) -> Result<(LatencyReport, MatchOutput), EvalError> {
    let mut spec = RunSpec::builtin(map, AgentConfig::new(kind), HumanKind::Idle)
        .ok_or_else(|| EvalError::UnknownMap(map.to_string()))?;
    spec.config.game_duration = LATENCY_GAME_S;
    let out = run_simulated(&spec, minds, &mut Timed::new(latency_script()))?;
    Ok((LatencyReport::from_events(kind, &out.events), out))
}

pub fn latency_table(reports: &[LatencyReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.agent.to_string(),
                r.t_m_ms.show(1),
                r.t_a_ms.show(1),
                format!("{}/{}", r.t_a_ms.n, r.records.len()),
            ]
        })
        .collect();
    let mut out = render_table(&["agent", "T_m (ms)", "T_a (ms)", "measured"], &rows);
    for r in reports {
        let rows: Vec<Vec<String>> = r
            .stages
            .iter()
            .map(|s| vec![s.call.to_string(), s.latency_ms.show(1), s.latency_ms.n.to_string(), s.errors.to_string()])
            .collect();
        if !rows.is_empty() {
            out.push_str(&format!("\n{} per stage\n", r.agent));
            out.push_str(&render_table(&["call", "latency (ms)", "calls", "errors"], &rows));
        }
    }
    out
}
