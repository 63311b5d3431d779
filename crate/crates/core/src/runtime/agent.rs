//! The agent as a state machine. It never blocks: model work leaves as
//! [`Job`]s and comes back through [`Agent::on_result`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::events::{AgentEvent, Cause, Chooser, EventKind, MacroEnd, Mind};
use crate::catalog::{self, MacroAction};
use crate::env::{snapshot_text, AtomicAction, GameState, PlayerId, StateText, AGENT};
use crate::executor::{ExecutionPlan, PlanStatus};
use crate::fast_mind::{self, ConditionInput, FilterParams, SelectionTrace};
use crate::llm::{Backend, CallKind, GatewayError};
use crate::slow_mind::{
    self, AssessmentResult, Category, CompressedHistory, HumanCommand, Intention, SmoaTurn, Staged,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "HLA")]
    Hla,
    #[serde(rename = "SMOA")]
    Smoa,
    #[serde(rename = "FMOA")]
    Fmoa,
    #[serde(rename = "NEA")]
    Nea,
    #[serde(rename = "HLA_NoIR")]
    HlaNoIr,
    #[serde(rename = "HLA_OneStage")]
    HlaOneStage,
}

impl AgentKind {
    pub const ALL: [AgentKind; 6] = [
        AgentKind::Hla,
        AgentKind::Smoa,
        AgentKind::Fmoa,
        AgentKind::Nea,
        AgentKind::HlaNoIr,
        AgentKind::HlaOneStage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Hla => "HLA",
            AgentKind::Smoa => "SMOA",
            AgentKind::Fmoa => "FMOA",
            AgentKind::Nea => "NEA",
            AgentKind::HlaNoIr => "HLA_NoIR",
            AgentKind::HlaOneStage => "HLA_OneStage",
        }
    }

    pub fn has_slow(self) -> bool {
        self != AgentKind::Fmoa
    }

    pub fn has_fast(self) -> bool {
        self != AgentKind::Smoa
    }

    pub fn has_executor(self) -> bool {
        self != AgentKind::Nea
    }

    /// Event kinds this wiring may log.
    pub fn permits(self, event: &EventKind) -> bool {
        match event {
            EventKind::AtomicEmitted { .. } | EventKind::ParseError { .. } => self == AgentKind::Nea,
            EventKind::MacroChosen { by, .. } => match by {
                Chooser::FastMind => self.has_fast() && self.has_executor(),
                Chooser::SlowMind => self == AgentKind::Smoa,
            },
            EventKind::MacroDone { .. } | EventKind::MacroFailed { .. } => self.has_executor(),
            EventKind::IntentionInferred { .. } | EventKind::AssessmentDone { .. } => self.has_slow(),
            EventKind::CallStarted { mind, .. }
            | EventKind::CallFinished { mind, .. }
            | EventKind::CallAbandoned { mind, .. } => match mind {
                Mind::Slow => self.has_slow(),
                Mind::Fast => self.has_fast(),
            },
            EventKind::CommandReceived { .. }
            | EventKind::ConditionChanged { .. }
            | EventKind::ChatSent { .. } => true,
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown agent kind {0:?}")]
pub struct UnknownAgent(pub String);

impl FromStr for AgentKind {
    type Err = UnknownAgent;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownAgent(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub filter: FilterParams,
    /// Chat and assessment also run when a macro finishes.
    pub assess_period_s: f64,
    pub fmoa_history_cap: usize,
    /// Per-call deadline handed to the gateway.
    pub deadline_ms: u64,
    /// Macros shown to the fast mind when no command is active.
    pub idle_history: usize,
    pub player: PlayerId,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            kind: AgentKind::Hla,
            filter: FilterParams::default(),
            assess_period_s: 5.0,
            fmoa_history_cap: 9,
            deadline_ms: 120_000,
            idle_history: 10,
            player: AGENT,
        }
    }
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        AgentConfig {
            kind,
            ..AgentConfig::default()
        }
    }
}

/// Where the agent is on the clocks when a callback runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Now {
    pub wall_ms: f64,
    pub game_s: f64,
    pub tick: u64,
}

/// Inputs of one gateway round trip, captured when it is launched.
#[derive(Clone, Debug)]
pub enum Task {
    Intention {
        command: HumanCommand,
        prior: Option<Intention>,
        text: StateText,
    },
    Assess {
        intention: Option<Intention>,
        text: StateText,
        history: CompressedHistory,
    },
    OneStage {
        command: HumanCommand,
        prior: Option<Intention>,
        text: StateText,
        history: CompressedHistory,
    },
    Smoa {
        intention: Option<Intention>,
        text: StateText,
        history: CompressedHistory,
        available: Vec<(MacroAction, f64)>,
    },
    Select {
        state: Box<GameState>,
        available: Vec<MacroAction>,
        prefix: String,
        alpha: f64,
    },
    Chat {
        prompt: String,
    },
    Nea {
        condition: ConditionInput,
        text: StateText,
    },
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Intention(Staged<Intention>, Option<GatewayError>),
    Assess(Result<Staged<AssessmentResult>, GatewayError>),
    OneStage(Result<Staged<(Intention, AssessmentResult)>, GatewayError>),
    Smoa(Result<Staged<SmoaTurn>, GatewayError>),
    Select(Option<(SelectionTrace, Option<GatewayError>)>),
    Chat(Result<(String, f64), GatewayError>),
    Nea(Result<(Option<AtomicAction>, String, f64), GatewayError>),
}

impl Outcome {
    /// Gateway time the call took, as reported by the backend.
    /// Gateway time the call took, as reported by the backend. A timed out
    /// call took its whole deadline.
    pub fn latency_ms(&self) -> f64 {
        fn waited(e: &GatewayError) -> f64 {
            match e {
                GatewayError::Timeout { after_ms } => *after_ms as f64,
                _ => 0.0,
            }
        }
        match self {
            Outcome::Intention(s, _) => s.latency_ms,
            Outcome::Assess(r) => r.as_ref().map_or_else(waited, |s| s.latency_ms),
            Outcome::OneStage(r) => r.as_ref().map_or_else(waited, |s| s.latency_ms),
            Outcome::Smoa(r) => r.as_ref().map_or_else(waited, |s| s.latency_ms),
            Outcome::Select(r) => r.as_ref().map_or(0.0, |(t, _)| t.latency_ms),
            Outcome::Chat(r) => r.as_ref().map_or_else(waited, |(_, l)| *l),
            Outcome::Nea(r) => r.as_ref().map_or_else(waited, |(_, _, l)| *l),
        }
    }

    pub fn error(&self) -> Option<String> {
        let e = match self {
            Outcome::Intention(_, e) => e.clone(),
            Outcome::Assess(r) => r.as_ref().err().cloned(),
            Outcome::OneStage(r) => r.as_ref().err().cloned(),
            Outcome::Smoa(r) => r.as_ref().err().cloned(),
            Outcome::Select(r) => r.as_ref().and_then(|(_, e)| e.clone()),
            Outcome::Chat(r) => r.as_ref().err().cloned(),
            Outcome::Nea(r) => r.as_ref().err().cloned(),
        };
        e.map(|e| e.to_string())
    }
}

impl Task {
    pub fn run(&self, backend: &dyn Backend, deadline_ms: u64) -> Outcome {
        match self {
            Task::Intention {
                command,
                prior,
                text,
            } => {
                let (s, e) = slow_mind::infer_intention(command, prior.as_ref(), text, backend, deadline_ms);
                Outcome::Intention(s, e)
            }
            Task::Assess {
                intention,
                text,
                history,
            } => Outcome::Assess(slow_mind::chat_and_assess(
                intention.as_ref(),
                text,
                history,
                backend,
                deadline_ms,
            )),
            Task::OneStage {
                command,
                prior,
                text,
                history,
            } => Outcome::OneStage(slow_mind::one_stage(
                command,
                prior.as_ref(),
                text,
                history,
                backend,
                deadline_ms,
            )),
            Task::Smoa {
                intention,
                text,
                history,
                available,
            } => Outcome::Smoa(slow_mind::smoa_turn(
                intention.as_ref(),
                text,
                history,
                available,
                backend,
                deadline_ms,
            )),
            Task::Select {
                state,
                available,
                prefix,
                alpha,
            } => Outcome::Select(fast_mind::select_from(
                available,
                state,
                prefix,
                *alpha,
                backend,
                deadline_ms,
            )),
            Task::Chat { prompt } => {
                let req = crate::llm::PromptRequest::new(prompt.clone(), deadline_ms);
                Outcome::Chat(backend.generate(&req).map(|g| (g.text.trim().to_string(), g.latency_ms)))
            }
            Task::Nea { condition, text } => {
                Outcome::Nea(fast_mind::nea_decide(condition, text, backend, deadline_ms))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Job {
    pub call_id: u64,
    pub mind: Mind,
    pub call: CallKind,
    pub task: Task,
}

#[derive(Clone, Debug)]
struct InFlight {
    call_id: u64,
    call: CallKind,
    /// The selection's condition, kept for the MacroChosen record.
    condition: Option<String>,
    cause: Cause,
}

#[derive(Clone, Debug)]
struct Running {
    plan: ExecutionPlan,
    command_id: Option<u64>,
}

/// The fast-mind-only baseline's command memory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FmoaState {
    pub prior: Option<String>,
    pub current: Option<String>,
    pub history: Vec<MacroAction>,
    pub assumed_satisfied: bool,
}

impl FmoaState {
    pub fn on_command(&mut self, text: &str) {
        self.prior = self.current.take();
        self.current = Some(text.to_string());
        self.history.clear();
        self.assumed_satisfied = false;
    }

    pub fn on_macro_done(&mut self, action: MacroAction, cap: usize) {
        self.history.push(action);
        if self.history.len() > cap {
            self.history.remove(0);
        }
        if self.history.len() >= cap {
            self.assumed_satisfied = true;
        }
    }

    pub fn satisfied(&self) -> bool {
        self.current.is_none() || self.assumed_satisfied
    }
}

pub struct Agent {
    pub config: AgentConfig,
    events: Vec<AgentEvent>,
    next_call: u64,
    slow: Option<InFlight>,
    fast: Option<InFlight>,

    command: Option<HumanCommand>,
    intention: Option<Intention>,
    prior: Option<Intention>,
    intention_pending: bool,
    satisfied: bool,
    condition: ConditionInput,
    /// Macros finished since the latest command.
    history: Vec<MacroAction>,

    running: Option<Running>,
    /// Chosen but not yet started: (macro, command, plan start pending).
    next_macro: Option<(MacroAction, Option<u64>)>,
    select_cause: Cause,
    retry_next_tick: bool,
    assess_flag: bool,
    last_assess_s: f64,

    fmoa: FmoaState,
    fmoa_chat_due: bool,
    /// NEA: the newest decision not yet emitted.
    nea_fresh: Option<(AtomicAction, f64, Option<u64>)>,
}

impl Agent {
    pub fn new(config: AgentConfig) -> Agent {
        Agent {
            config,
            events: Vec::new(),
            next_call: 0,
            slow: None,
            fast: None,
            command: None,
            intention: None,
            prior: None,
            intention_pending: false,
            satisfied: true,
            condition: ConditionInput::SlowChat(String::new()),
            history: Vec::new(),
            running: None,
            next_macro: None,
            select_cause: Cause::Start,
            retry_next_tick: false,
            assess_flag: false,
            last_assess_s: 0.0,
            fmoa: FmoaState::default(),
            fmoa_chat_due: false,
            nea_fresh: None,
        }
    }

    pub fn kind(&self) -> AgentKind {
        self.config.kind
    }

    /// Events logged since the last drain.
    pub fn drain_events(&mut self) -> Vec<AgentEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn command(&self) -> Option<&HumanCommand> {
        self.command.as_ref()
    }

    pub fn intention(&self) -> Option<&Intention> {
        self.intention.as_ref()
    }

    /// Whether the latest command has been judged satisfied (always true
    /// before any command).
    pub fn satisfied(&self) -> bool {
        match self.kind() {
            AgentKind::Fmoa => self.fmoa.satisfied(),
            _ => self.satisfied,
        }
    }

    pub fn condition(&self) -> &ConditionInput {
        &self.condition
    }

    pub fn current_macro(&self) -> Option<MacroAction> {
        self.running.as_ref().map(|r| r.plan.macro_action)
    }

    pub fn fmoa_state(&self) -> &FmoaState {
        &self.fmoa
    }

    fn log(&mut self, now: Now, event: EventKind) {
        self.events.push(AgentEvent {
            wall_ms: now.wall_ms,
            game_s: now.game_s,
            tick: now.tick,
            event,
        });
    }

    fn command_id(&self) -> Option<u64> {
        self.command.as_ref().map(|c| c.id)
    }

    fn set_condition(&mut self, now: Now, condition: ConditionInput) {
        self.condition = condition.clone();
        let command_id = self.command_id();
        self.log(now, EventKind::ConditionChanged { command_id, condition });
    }

    fn chat(&mut self, now: Now, text: &str) {
        if !text.trim().is_empty() {
            let command_id = self.command_id();
            self.log(
                now,
                EventKind::ChatSent {
                    command_id,
                    text: text.trim().to_string(),
                },
            );
        }
    }

    fn launch(&mut self, now: Now, mind: Mind, call: CallKind, task: Task, condition: Option<String>) -> Job {
        self.next_call += 1;
        let call_id = self.next_call;
        let flight = InFlight {
            call_id,
            call,
            condition,
            cause: self.select_cause,
        };
        match mind {
            Mind::Slow => self.slow = Some(flight),
            Mind::Fast => self.fast = Some(flight),
        }
        self.log(now, EventKind::CallStarted { mind, call_id, call });
        Job {
            call_id,
            mind,
            call,
            task,
        }
    }

    fn abandon(&mut self, now: Now) {
        for mind in [Mind::Slow, Mind::Fast] {
            let slot = match mind {
                Mind::Slow => self.slow.take(),
                Mind::Fast => self.fast.take(),
            };
            if let Some(f) = slot {
                self.log(
                    now,
                    EventKind::CallAbandoned {
                        mind,
                        call_id: f.call_id,
                    },
                );
            }
        }
    }

    fn history_view(&self) -> CompressedHistory {
        let active = self.command.is_some() && !self.satisfied;
        let slice = if active || self.history.len() <= self.config.idle_history {
            &self.history[..]
        } else {
            &self.history[self.history.len() - self.config.idle_history..]
        };
        CompressedHistory::compress(slice)
    }

    fn active_intention(&self) -> Option<&Intention> {
        self.intention.as_ref().filter(|i| !i.satisfied)
    }

    /// A human message arrives. The running macro is dropped and in-flight
    /// calls are abandoned.
    pub fn on_command(&mut self, command: HumanCommand, state: &GameState, now: Now) -> Vec<Job> {
        self.log(
            now,
            EventKind::CommandReceived {
                command: command.clone(),
            },
        );
        self.abandon(now);
        if let Some(r) = self.running.take() {
            let atomics = r.plan.atomics;
            self.log(
                now,
                EventKind::MacroFailed {
                    command_id: r.command_id,
                    action: r.plan.macro_action,
                    end: MacroEnd::Superseded,
                    atomics,
                },
            );
        }
        self.next_macro = None;
        self.nea_fresh = None;
        self.retry_next_tick = false;
        if let Some(i) = self.intention.take() {
            self.prior = Some(i);
        }
        self.command = Some(command.clone());
        self.history.clear();
        self.satisfied = false;
        self.intention_pending = self.kind().has_slow();
        self.select_cause = Cause::Command;
        self.set_condition(now, ConditionInput::RawCommand(command.text.clone()));

        match self.kind() {
            AgentKind::HlaNoIr => {
                self.intention_pending = false;
                let category = slow_mind::classify(&command.text, &command.text);
                let intention = Intention {
                    text: command.text.clone(),
                    category,
                    source_command: command.id,
                    satisfied: false,
                    low_confidence: false,
                };
                self.adopt_intention(now, intention, 0.0, None);
            }
            AgentKind::Fmoa => {
                self.fmoa.on_command(&command.text);
                self.fmoa_chat_due = true;
            }
            _ => {}
        }
        self.last_assess_s = now.game_s;
        self.assess_flag = false;
        let mut jobs = self.pump(state, now);
        if self.kind() == AgentKind::Nea {
            let task = Task::Nea {
                condition: self.condition.clone(),
                text: snapshot_text(state),
            };
            jobs.push(self.launch(now, Mind::Fast, CallKind::FastMindMa, task, None));
        }
        jobs
    }

    fn adopt_intention(&mut self, now: Now, intention: Intention, latency_ms: f64, error: Option<String>) {
        let command_id = intention.source_command;
        self.log(
            now,
            EventKind::IntentionInferred {
                command_id,
                intention: intention.clone(),
                latency_ms,
                error,
            },
        );
        self.set_condition(now, ConditionInput::InferredIntention(intention.text.clone()));
        self.intention = Some(intention);
    }

    fn apply_assessment(&mut self, now: Now, result: AssessmentResult, latency_ms: f64, calls: u32) {
        let command_id = self.command_id();
        self.log(
            now,
            EventKind::AssessmentDone {
                command_id,
                result: result.clone(),
                latency_ms,
                calls,
            },
        );
        self.chat(now, &result.chat_message);
        match result.satisfied {
            Some(true) => {
                if let Some(i) = self.intention.as_mut() {
                    i.satisfied = true;
                }
                self.satisfied = true;
                self.set_condition(now, ConditionInput::SlowChat(result.chat_message));
            }
            Some(false) => {}
            None => {
                if self.active_intention().is_none() && !self.intention_pending {
                    self.set_condition(now, ConditionInput::SlowChat(result.chat_message));
                }
            }
        }
    }

    /// A job finished. Results of abandoned calls are ignored.
    pub fn on_result(&mut self, call_id: u64, outcome: Outcome, state: &GameState, now: Now) -> Vec<Job> {
        let (mind, flight) = match (&self.slow, &self.fast) {
            (Some(f), _) if f.call_id == call_id => (Mind::Slow, self.slow.take().expect("slot")),
            (_, Some(f)) if f.call_id == call_id => (Mind::Fast, self.fast.take().expect("slot")),
            _ => return Vec::new(),
        };
        self.log(
            now,
            EventKind::CallFinished {
                mind,
                call_id,
                call: flight.call,
                latency_ms: outcome.latency_ms(),
                error: outcome.error(),
            },
        );
        match outcome {
            Outcome::Intention(staged, err) => {
                self.intention_pending = false;
                let latency = staged.latency_ms;
                self.adopt_intention(now, staged.value, latency, err.map(|e| e.to_string()));
            }
            Outcome::Assess(Ok(staged)) => {
                self.apply_assessment(now, staged.value, staged.latency_ms, staged.calls);
            }
            Outcome::Assess(Err(_)) => {}
            Outcome::OneStage(Ok(staged)) => {
                let (intention, result) = staged.value;
                if self.intention_pending {
                    self.intention_pending = false;
                    let mut fresh = intention;
                    fresh.satisfied = false;
                    self.adopt_intention(now, fresh, staged.latency_ms, None);
                }
                self.apply_assessment(now, result, staged.latency_ms, staged.calls);
            }
            Outcome::OneStage(Err(e)) => {
                if self.intention_pending {
                    self.intention_pending = false;
                    let command = self.command.clone().expect("pending needs a command");
                    let intention = Intention {
                        text: command.text.clone(),
                        category: Category::Inferred,
                        source_command: command.id,
                        satisfied: false,
                        low_confidence: true,
                    };
                    self.adopt_intention(now, intention, 0.0, Some(e.to_string()));
                }
            }
            Outcome::Smoa(Ok(staged)) => {
                let turn = staged.value;
                let latency = staged.latency_ms;
                self.apply_assessment(now, turn.assessment, latency, staged.calls);
                match turn.action {
                    Some(action) => self.choose(
                        now,
                        action,
                        Chooser::SlowMind,
                        &flight,
                        None,
                        turn.regenerated,
                        turn.fallback,
                        latency,
                    ),
                    None => self.retry_next_tick = true,
                }
            }
            Outcome::Smoa(Err(_)) => self.retry_next_tick = true,
            Outcome::Select(Some((trace, _))) => {
                let latency = trace.latency_ms;
                let fallback = trace.fallback;
                self.choose(
                    now,
                    trace.chosen,
                    Chooser::FastMind,
                    &flight,
                    Some(trace),
                    false,
                    fallback,
                    latency,
                );
            }
            Outcome::Select(None) => self.retry_next_tick = true,
            Outcome::Chat(Ok((text, _))) => self.chat(now, &text),
            Outcome::Chat(Err(_)) => {}
            Outcome::Nea(Ok((action, raw, latency))) => {
                let command_id = self.command_id();
                let action = action.unwrap_or_else(|| {
                    self.log(now, EventKind::ParseError { text: raw });
                    AtomicAction::Noop
                });
                self.nea_fresh = Some((action, latency, command_id));
            }
            Outcome::Nea(Err(_)) => {}
        }
        self.pump(state, now)
    }

    #[allow(clippy::too_many_arguments)]
    fn choose(
        &mut self,
        now: Now,
        action: MacroAction,
        by: Chooser,
        flight: &InFlight,
        trace: Option<SelectionTrace>,
        regenerated: bool,
        fallback: bool,
        decision_ms: f64,
    ) {
        let command_id = self.command_id();
        self.log(
            now,
            EventKind::MacroChosen {
                command_id,
                action,
                by,
                cause: flight.cause,
                condition: flight.condition.clone(),
                trace,
                regenerated,
                fallback,
                decision_ms,
            },
        );
        self.next_macro = Some((action, command_id));
    }

    /// One tick: returns the agent's atomic action and any new jobs.
    pub fn on_tick(&mut self, state: &GameState, now: Now) -> (AtomicAction, Vec<Job>) {
        self.retry_next_tick = false;
        let action = if self.kind().has_executor() {
            self.drive_executor(state, now)
        } else {
            self.emit_nea(now)
        };
        let mut jobs = self.pump(state, now);
        if self.kind() == AgentKind::Nea && self.fast.is_none() {
            let condition = self.condition.clone();
            let task = Task::Nea {
                condition,
                text: snapshot_text(state),
            };
            jobs.push(self.launch(now, Mind::Fast, CallKind::FastMindMa, task, None));
        }
        (action, jobs)
    }

    fn emit_nea(&mut self, now: Now) -> AtomicAction {
        let (action, fresh, decision_ms, command_id) = match self.nea_fresh.take() {
            Some((a, ms, cid)) => (a, true, Some(ms), cid),
            None => (AtomicAction::Noop, false, None, self.command_id()),
        };
        self.log(
            now,
            EventKind::AtomicEmitted {
                command_id,
                action,
                fresh,
                decision_ms,
            },
        );
        action
    }

    fn drive_executor(&mut self, state: &GameState, now: Now) -> AtomicAction {
        if self.running.is_none() {
            if let Some((action, command_id)) = self.next_macro.take() {
                let plan = ExecutionPlan::begin(action, state, self.config.player);
                self.running = Some(Running { plan, command_id });
            }
        }
        let Some(running) = self.running.as_mut() else {
            return AtomicAction::Noop;
        };
        let atomic = running.plan.next_atomic(state);
        match running.plan.status {
            PlanStatus::Running => atomic,
            PlanStatus::Done => {
                let r = self.running.take().expect("running");
                let action = r.plan.macro_action;
                self.log(
                    now,
                    EventKind::MacroDone {
                        command_id: r.command_id,
                        action,
                        atomics: r.plan.atomics,
                    },
                );
                if r.command_id == self.command_id() {
                    self.history.push(action);
                }
                if self.kind() == AgentKind::Fmoa {
                    let was = self.fmoa.assumed_satisfied;
                    self.fmoa.on_macro_done(action, self.config.fmoa_history_cap);
                    self.fmoa_chat_due = true;
                    if !was && self.fmoa.assumed_satisfied {
                        self.satisfied = true;
                    }
                }
                self.assess_flag = true;
                self.select_cause = Cause::MacroDone;
                atomic
            }
            PlanStatus::Failed(reason) => {
                let r = self.running.take().expect("running");
                self.log(
                    now,
                    EventKind::MacroFailed {
                        command_id: r.command_id,
                        action: r.plan.macro_action,
                        end: MacroEnd::Failed(reason),
                        atomics: r.plan.atomics,
                    },
                );
                self.select_cause = Cause::MacroFailed;
                atomic
            }
        }
    }

    fn idle_for_selection(&self) -> bool {
        self.running.is_none() && self.next_macro.is_none() && !self.retry_next_tick
    }

    /// Launches whatever each idle mind should do next.
    fn pump(&mut self, state: &GameState, now: Now) -> Vec<Job> {
        let mut jobs = Vec::new();
        if state.is_over() {
            return jobs;
        }
        if self.kind().has_slow() && self.slow.is_none() {
            if let Some(job) = self.next_slow_job(state, now) {
                jobs.push(job);
            }
        }
        if self.kind().has_fast() && self.kind().has_executor() && self.fast.is_none() {
            if let Some(job) = self.next_fast_job(state, now) {
                jobs.push(job);
            }
        }
        jobs
    }

    fn next_slow_job(&mut self, state: &GameState, now: Now) -> Option<Job> {
        if self.intention_pending {
            let command = self.command.clone().expect("pending needs a command");
            let prior = self.prior.clone();
            let text = snapshot_text(state);
            return Some(if self.kind() == AgentKind::HlaOneStage {
                let task = Task::OneStage {
                    command,
                    prior,
                    text,
                    history: CompressedHistory::default(),
                };
                self.last_assess_s = now.game_s;
                self.launch(now, Mind::Slow, CallKind::SlowMindIr, task, None)
            } else {
                let task = Task::Intention { command, prior, text };
                self.launch(now, Mind::Slow, CallKind::SlowMindIr, task, None)
            });
        }
        if self.kind() == AgentKind::Smoa {
            if !self.idle_for_selection() {
                return None;
            }
            let available: Vec<(MacroAction, f64)> = catalog::enumerate_available(state, self.config.player)
                .into_iter()
                .map(|m| (m, catalog::value(m, state)))
                .collect();
            let task = Task::Smoa {
                intention: self.active_intention().cloned(),
                text: snapshot_text(state),
                history: self.history_view(),
                available,
            };
            self.last_assess_s = now.game_s;
            self.assess_flag = false;
            let job = self.launch(now, Mind::Slow, CallKind::SlowMindCa, task, None);
            self.select_cause = Cause::Retry;
            return Some(job);
        }
        let due = self.assess_flag || now.game_s - self.last_assess_s >= self.config.assess_period_s - 1e-9;
        if !due {
            return None;
        }
        self.assess_flag = false;
        self.last_assess_s = now.game_s;
        let text = snapshot_text(state);
        let history = self.history_view();
        let task = match (self.kind(), self.active_intention().cloned()) {
            (AgentKind::HlaOneStage, Some(_)) => Task::OneStage {
                command: self.command.clone().expect("active intention has a command"),
                prior: self.prior.clone(),
                text,
                history,
            },
            (_, intention) => Task::Assess {
                intention,
                text,
                history,
            },
        };
        Some(self.launch(now, Mind::Slow, CallKind::SlowMindCa, task, None))
    }

    fn next_fast_job(&mut self, state: &GameState, now: Now) -> Option<Job> {
        if self.idle_for_selection() {
            let available = catalog::enumerate_available(state, self.config.player);
            if available.is_empty() {
                self.retry_next_tick = true;
                return None;
            }
            let (prefix, alpha, label) = if self.kind() == AgentKind::Fmoa {
                let cond = fast_mind::fmoa_condition(self.fmoa.prior.as_deref(), self.fmoa.current.as_deref());
                let history = CompressedHistory::compress(&self.fmoa.history);
                let prefix = fast_mind::fmoa_prompt(&cond, &snapshot_text(state), &history);
                (prefix, self.config.filter.alpha(self.fmoa.satisfied()), "RawCommand")
            } else {
                let prefix = fast_mind::build_prompt(&self.condition, &self.history_view());
                (prefix, self.config.filter.alpha(self.satisfied), self.condition.label())
            };
            let task = Task::Select {
                state: Box::new(state.clone()),
                available,
                prefix,
                alpha,
            };
            let job = self.launch(now, Mind::Fast, CallKind::FastMindMa, task, Some(label.to_string()));
            self.select_cause = Cause::Retry;
            return Some(job);
        }
        if self.kind() == AgentKind::Fmoa && self.fmoa_chat_due {
            self.fmoa_chat_due = false;
            let cond = fast_mind::fmoa_condition(self.fmoa.prior.as_deref(), self.fmoa.current.as_deref());
            let history = CompressedHistory::compress(&self.fmoa.history);
            let active = self.fmoa.current.is_some() && !self.fmoa.assumed_satisfied;
            let prompt = fast_mind::fmoa_chat_prompt(&cond, &snapshot_text(state), &history, active);
            return Some(self.launch(now, Mind::Fast, CallKind::FastMindChat, Task::Chat { prompt }, None));
        }
        None
    }
}
