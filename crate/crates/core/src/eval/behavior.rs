//! Post-game analysis of logged rounds: how often the AI player's chops,
//! cooks and serves were worth doing, how often a pot burned, and how often
//! the fast mind's first guess matched its informed choice.

use serde::{Deserialize, Serialize};

use super::stats::render_table;
use super::EvalError;
use crate::catalog::{is_valuable, MacroAction};
use crate::env::{GameEvent, GameState, AGENT};
use crate::runtime::{AgentKind, Chooser, EventKind};
use crate::session::{agent_events, resimulate_with, ReplayRecord};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub hits: u32,
    pub total: u32,
}

impl Ratio {
    pub fn add(&mut self, hit: bool) {
        self.total += 1;
        self.hits += u32::from(hit);
    }

    pub fn merge(&mut self, other: Ratio) {
        self.hits += other.hits;
        self.total += other.total;
    }

    pub fn value(&self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }

    pub fn show(&self) -> String {
        match self.value() {
            Some(v) => format!("{v:.3} ({}/{})", self.hits, self.total),
            None => "/".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorReport {
    /// Valuable over all, per verb.
    pub chop: Ratio,
    pub cook: Ratio,
    pub serve: Ratio,
    /// Rounds with a fire over all rounds.
    pub fire: Ratio,
    /// Immediate macros that matched the post-intention macro.
    pub hit: Ratio,
}

impl BehaviorReport {
    pub fn merge(&mut self, other: &BehaviorReport) {
        self.chop.merge(other.chop);
        self.cook.merge(other.cook);
        self.serve.merge(other.serve);
        self.fire.merge(other.fire);
        self.hit.merge(other.hit);
    }
}

/// The macro whose defining moment an event marks, for the AI player.
pub fn defining_macro(event: &GameEvent) -> Option<MacroAction> {
    match *event {
        GameEvent::IngredientOnBoard {
            player: AGENT,
            ingredient,
            ..
        } => Some(MacroAction::Chop(ingredient)),
        GameEvent::CookStarted {
            player: AGENT, recipe, ..
        } => Some(MacroAction::Cook(recipe)),
        GameEvent::SoupServed {
            player: AGENT, recipe, ..
        }
        | GameEvent::DeliveryRefused {
            player: AGENT, recipe, ..
        } => Some(MacroAction::Serve(recipe)),
        _ => None,
    }
}

/// Scores one event against the state just before the tick that produced it.
pub fn tally(report: &mut BehaviorReport, before: &GameState, event: &GameEvent) {
    let Some(action) = defining_macro(event) else {
        return;
    };
    let valuable = !matches!(event, GameEvent::DeliveryRefused { .. }) && is_valuable(action, before);
    match action {
        MacroAction::Chop(_) => report.chop.add(valuable),
        MacroAction::Cook(_) => report.cook.add(valuable),
        MacroAction::Serve(_) => report.serve.add(valuable),
        _ => {}
    }
}

/// Immediate-vs-informed agreement per command.
pub fn hit_rate(events: &[crate::runtime::AgentEvent]) -> Ratio {
    let mut ratio = Ratio::default();
    let commands = events.iter().filter_map(|e| match &e.event {
        EventKind::CommandReceived { command } => Some(command.id),
        _ => None,
    });
    for id in commands {
        let first = |label: &str| {
            events.iter().find_map(|e| match &e.event {
                EventKind::MacroChosen {
                    command_id: Some(c),
                    action,
                    by: Chooser::FastMind,
                    condition: Some(l),
                    ..
                } if *c == id && l == label => Some(*action),
                _ => None,
            })
        };
        if let (Some(a), Some(b)) = (first("RawCommand"), first("InferredIntention")) {
            ratio.add(a == b);
        }
    }
    ratio
}

/// One logged round.
pub fn analyze_round(records: &[ReplayRecord]) -> Result<BehaviorReport, EvalError> {
    let mut report = BehaviorReport::default();
    let mut fire = false;
    resimulate_with(records, |before, _, events| {
        for e in events {
            fire |= matches!(e, GameEvent::PotCaughtFire { .. });
            tally(&mut report, before, e);
        }
    })?;
    report.fire.add(fire);
    let kind = match records.first() {
        Some(ReplayRecord::Header { agent, .. }) => *agent,
        _ => unreachable!("resimulation checked the header"),
    };
    let has_commands = records.iter().any(|r| matches!(r, ReplayRecord::Command { .. }));
    let events = agent_events(records);
    if kind.has_fast() && kind != AgentKind::Nea && has_commands {
        let chosen = events.iter().any(|e| matches!(e.event, EventKind::MacroChosen { .. }));
        if !chosen {
            return Err(EvalError::MissingTrace("log has commands but no macro choices".into()));
        }
        if let Some(e) = events.iter().find(|e| {
            matches!(&e.event, EventKind::MacroChosen { by: Chooser::FastMind, trace: None, .. })
        }) {
            return Err(EvalError::MissingTrace(format!("fast-mind choice at tick {} has no trace", e.tick)));
        }
    }
    report.hit = hit_rate(&events);
    Ok(report)
}

pub fn analyze_behavior(rounds: &[Vec<ReplayRecord>]) -> Result<BehaviorReport, EvalError> {
    let mut total = BehaviorReport::default();
    for r in rounds {
        total.merge(&analyze_round(r)?);
    }
    Ok(total)
}

pub fn behavior_table(rows: &[(String, BehaviorReport)]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| {
            vec![
                name.clone(),
                r.chop.show(),
                r.cook.show(),
                r.serve.show(),
                r.fire.show(),
                r.hit.show(),
            ]
        })
        .collect();
    render_table(&["agent", "chop", "cook", "serve", "fire", "hit"], &rows)
}
