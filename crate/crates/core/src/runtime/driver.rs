//! Game loops. [`Match`] owns the state and is the only writer; the loops
//! differ only in how time passes and where jobs run.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::agent::{Agent, AgentConfig, Job, Now};
use super::dispatch::{sleep_until, Delivery, Minds, SimDispatcher, ThreadDispatcher};
use super::events::AgentEvent;
use super::human::{HumanKind, HumanPolicy};
use crate::env::{AtomicAction, EnvError, GameConfig, GameEvent, GameState, MapSpec};
use crate::session::{ReplayRecord, SCHEMA_VERSION};
use crate::slow_mind::HumanCommand;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedGameEvent {
    pub tick: u64,
    pub game_s: f64,
    pub event: GameEvent,
}

pub struct Match {
    pub state: GameState,
    pub agent: Agent,
    pub records: Vec<ReplayRecord>,
    pub events: Vec<AgentEvent>,
    pub game_events: Vec<TimedGameEvent>,
    next_command: u64,
}

impl Match {
    pub fn new(state: GameState, agent: AgentConfig, human: &str, backend: &str) -> Match {
        let header = ReplayRecord::Header {
            schema_version: SCHEMA_VERSION,
            config: state.config.clone(),
            map: state.map.clone(),
            agent: agent.kind,
            human: human.to_string(),
            backend: backend.to_string(),
        };
        Match {
            state,
            agent: Agent::new(agent),
            records: vec![header],
            events: Vec::new(),
            game_events: Vec::new(),
            next_command: 0,
        }
    }

    pub fn now(&self, wall_ms: f64) -> Now {
        Now {
            wall_ms,
            game_s: self.state.clock,
            tick: self.state.tick,
        }
    }

    fn absorb(&mut self) {
        for e in self.agent.drain_events() {
            self.records.push(ReplayRecord::Agent { event: e.clone() });
            self.events.push(e);
        }
    }

    pub fn command(&mut self, text: &str, wall_ms: f64) -> Vec<Job> {
        self.next_command += 1;
        let command = HumanCommand {
            id: self.next_command,
            text: text.to_string(),
            received_game_s: self.state.clock,
            received_wall_ms: wall_ms,
        };
        self.records.push(ReplayRecord::Command {
            tick: self.state.tick,
            game_s: self.state.clock,
            text: text.to_string(),
        });
        let now = self.now(wall_ms);
        let jobs = self.agent.on_command(command, &self.state, now);
        self.absorb();
        jobs
    }

    pub fn deliver(&mut self, delivery: Delivery) -> Vec<Job> {
        let now = self.now(delivery.at_ms);
        let jobs = self
            .agent
            .on_result(delivery.call_id, delivery.outcome, &self.state, now);
        self.absorb();
        jobs
    }

    /// Asks the agent for its move, applies both moves and advances timers.
    pub fn tick(&mut self, wall_ms: f64, human: AtomicAction) -> Result<(Vec<Job>, Vec<GameEvent>), EnvError> {
        let now = self.now(wall_ms);
        let (agent_action, jobs) = self.agent.on_tick(&self.state, now);
        self.absorb();
        let actions = [human, agent_action];
        let tick = self.state.tick;
        let events = self.state.step_mut(actions)?;
        self.records.push(ReplayRecord::Tick { tick, actions });
        let game_s = self.state.clock;
        self.game_events.extend(events.iter().map(|e| TimedGameEvent {
            tick,
            game_s,
            event: e.clone(),
        }));
        Ok((jobs, events))
    }

    /// Timers only, for pauses that do not freeze orders.
    pub fn advance(&mut self, dt: f64) {
        let events = self.state.advance_time_mut(dt);
        self.records.push(ReplayRecord::Advance { dt });
        let (tick, game_s) = (self.state.tick, self.state.clock);
        self.game_events
            .extend(events.into_iter().map(|event| TimedGameEvent { tick, game_s, event }));
    }

    pub fn finish(&mut self) {
        if !matches!(self.records.last(), Some(ReplayRecord::Final { .. })) {
            self.records.push(ReplayRecord::Final {
                tick: self.state.tick,
                score: self.state.score,
                state_hash: self.state.state_hash(),
            });
        }
    }

    pub fn is_over(&self) -> bool {
        self.state.is_over()
    }
}

/// What a director sees before each tick.
pub struct View<'a> {
    pub state: &'a GameState,
    pub agent: &'a Agent,
    pub events: &'a [AgentEvent],
    pub game_events: &'a [TimedGameEvent],
}

/// Decides when the human speaks.
pub trait Director {
    /// Messages to deliver before the coming tick.
    fn poll(&mut self, view: &View<'_>) -> Vec<String>;

    /// Stop the game early.
    fn finished(&self, _view: &View<'_>) -> bool {
        false
    }
}

/// Fixed messages at fixed game times.
#[derive(Clone, Debug, Default)]
pub struct Timed {
    queue: VecDeque<(f64, String)>,
}

impl Timed {
    pub fn new(mut script: Vec<(f64, String)>) -> Timed {
        script.sort_by(|a, b| a.0.total_cmp(&b.0));
        Timed {
            queue: script.into(),
        }
    }

    pub fn silent() -> Timed {
        Timed::default()
    }
}

impl Director for Timed {
    fn poll(&mut self, view: &View<'_>) -> Vec<String> {
        let mut out = Vec::new();
        while self
            .queue
            .front()
            .is_some_and(|(t, _)| *t <= view.state.clock + 1e-9)
        {
            out.push(self.queue.pop_front().expect("front").1);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub map: MapSpec,
    pub config: GameConfig,
    pub agent: AgentConfig,
    pub human: HumanKind,
}

impl RunSpec {
    pub fn builtin(map: &str, agent: AgentConfig, human: HumanKind) -> Option<RunSpec> {
        Some(RunSpec {
            map: MapSpec::builtin(map)?,
            config: GameConfig::for_map(map),
            agent,
            human,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchOutput {
    pub records: Vec<ReplayRecord>,
    pub events: Vec<AgentEvent>,
    pub game_events: Vec<TimedGameEvent>,
    pub final_score: i32,
    pub state_hash: String,
    pub ticks: u64,
    /// Wall time at which each tick was applied.
    pub tick_wall_ms: Vec<f64>,
}

impl MatchOutput {
    fn from_match(mut m: Match, tick_wall_ms: Vec<f64>) -> MatchOutput {
        m.finish();
        MatchOutput {
            final_score: m.state.score,
            state_hash: m.state.state_hash(),
            ticks: m.state.tick,
            records: m.records,
            events: m.events,
            game_events: m.game_events,
            tick_wall_ms,
        }
    }
}

fn view(m: &Match) -> View<'_> {
    View {
        state: &m.state,
        agent: &m.agent,
        events: &m.events,
        game_events: &m.game_events,
    }
}

/// Headless game on a virtual clock: tick k happens at k / tick_rate
/// seconds and model results land at their reported latency.
pub fn run_simulated(spec: &RunSpec, minds: &Minds, director: &mut dyn Director) -> Result<MatchOutput, EnvError> {
    let state = GameState::new(spec.config.clone(), spec.map.clone())?;
    let describe = format!("{} / {}", minds.slow.describe(), minds.fast.describe());
    let mut m = Match::new(state, spec.agent.clone(), spec.human.name(), &describe);
    let mut human: Box<dyn HumanPolicy> = spec.human.build();
    let mut disp = SimDispatcher::new(minds.clone(), spec.agent.deadline_ms);
    let tick_ms = 1000.0 / spec.config.tick_rate;
    let mut walls = Vec::new();
    for k in 0..spec.config.total_ticks() {
        let t = k as f64 * tick_ms;
        while let Some(d) = disp.pop_due(t) {
            let at = d.at_ms;
            for job in m.deliver(d) {
                disp.submit(job, at);
            }
        }
        if director.finished(&view(&m)) {
            break;
        }
        for text in director.poll(&view(&m)) {
            for job in m.command(&text, t) {
                disp.submit(job, t);
            }
        }
        let h = human.act(&m.state);
        let (jobs, _) = m.tick(t, h)?;
        walls.push(t);
        for job in jobs {
            disp.submit(job, t);
        }
    }
    Ok(MatchOutput::from_match(m, walls))
}

/// Real-time game: ticks are paced by the wall clock and every model call
/// runs on its own thread, so slow calls never hold up a tick.
pub fn run_realtime(spec: &RunSpec, minds: &Minds, director: &mut dyn Director) -> Result<MatchOutput, EnvError> {
    let state = GameState::new(spec.config.clone(), spec.map.clone())?;
    let describe = format!("{} / {}", minds.slow.describe(), minds.fast.describe());
    let mut m = Match::new(state, spec.agent.clone(), spec.human.name(), &describe);
    let mut human: Box<dyn HumanPolicy> = spec.human.build();
    let start = Instant::now();
    let disp = ThreadDispatcher::new(minds.clone(), spec.agent.deadline_ms, start);
    let tick = Duration::from_secs_f64(1.0 / spec.config.tick_rate);
    let mut walls = Vec::new();
    for k in 0..spec.config.total_ticks() {
        let deadline = start + tick * k as u32;
        while let Some(d) = disp.recv_until(deadline) {
            for job in m.deliver(d) {
                disp.submit(job);
            }
        }
        sleep_until(deadline);
        let t = disp.now_ms();
        if director.finished(&view(&m)) {
            break;
        }
        for text in director.poll(&view(&m)) {
            for job in m.command(&text, t) {
                disp.submit(job);
            }
        }
        let h = human.act(&m.state);
        let (jobs, _) = m.tick(t, h)?;
        walls.push(t);
        for job in jobs {
            disp.submit(job);
        }
    }
    Ok(MatchOutput::from_match(m, walls))
}
