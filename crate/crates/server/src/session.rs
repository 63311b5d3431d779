//! One live game. A worker thread owns the [`Match`] and paces its ticks;
//! everything else reaches it through the inbox and hears back through the
//! view channel (latest state only) and the broadcast (chat, score, phase).

use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::mpsc::{Receiver, Sender, TryRecvError};
use std::time::{Duration, Instant};

use tokio::sync::{broadcast, watch};

use hla_core::env::{AtomicAction, GameConfig, GameEvent, MapSpec};
use hla_core::runtime::{AgentKind, EventKind, Match, Minds, ThreadDispatcher};
use hla_core::session::wire::{LobbyMessage, Phase, ServerMessage, Speaker, StateView};
use hla_core::session::ReplayWriter;

/// How often the worker wakes between ticks to read its inbox.
const POLL: Duration = Duration::from_millis(10);

#[derive(Clone, Debug)]
pub struct SessionInfo {
    pub id: String,
    pub map: MapSpec,
    pub config: GameConfig,
    pub agent: AgentKind,
    pub log_path: PathBuf,
}

impl SessionInfo {
    pub fn created(&self) -> LobbyMessage {
        LobbyMessage::Created {
            session_id: self.id.clone(),
            map: self.map.name.clone(),
            agent: self.agent,
            tick_rate: self.config.tick_rate,
            phase: Phase::Lobby,
        }
    }

    pub fn welcome(&self) -> ServerMessage {
        ServerMessage::Welcome {
            session_id: self.id.clone(),
            map: self.map.clone(),
            config: self.config.clone(),
            agent: self.agent,
        }
    }
}

/// What a connection tells the worker.
#[derive(Clone, Debug)]
pub enum Inbound {
    Connected,
    Disconnected,
    Client(hla_core::session::wire::ClientMessage),
}

pub struct SessionHandle {
    pub info: SessionInfo,
    pub inbox: Sender<Inbound>,
    pub views: watch::Receiver<StateView>,
    pub phase: watch::Receiver<Phase>,
    pub messages: broadcast::Sender<ServerMessage>,
    /// Set while a player is attached; a session takes one player.
    pub occupied: AtomicBool,
}

pub(crate) struct Worker {
    pub m: Match,
    pub minds: Minds,
    pub inbox: Receiver<Inbound>,
    pub views: watch::Sender<StateView>,
    pub phase: watch::Sender<Phase>,
    pub messages: broadcast::Sender<ServerMessage>,
    pub log: ReplayWriter,
    pub grace: Duration,
    pub deadline_ms: u64,
}

impl Worker {
    pub fn run(mut self) {
        let period = Duration::from_secs_f64(self.m.state.config.tick_seconds());
        let freeze = self.m.state.config.pause_freezes_orders;
        let disp = ThreadDispatcher::new(self.minds.clone(), self.deadline_ms, Instant::now());
        let mut phase = Phase::Lobby;
        let mut next = Instant::now() + period;
        let mut human = AtomicAction::Noop;
        let mut connected = false;
        let mut dropped_at: Option<Instant> = None;
        let mut written = 0;
        let mut seen_events = 0;
        loop {
            // Inbox first, so a command lands before the tick it precedes.
            loop {
                let msg = match self.inbox.try_recv() {
                    Ok(msg) => msg,
                    Err(TryRecvError::Empty) => break,
                    // The lobby dropped the session.
                    Err(TryRecvError::Disconnected) => {
                        self.end(&mut written);
                        return;
                    }
                };
                match msg {
                    Inbound::Connected => {
                        connected = true;
                        dropped_at = None;
                    }
                    Inbound::Disconnected => {
                        connected = false;
                        dropped_at = Some(Instant::now());
                        if phase == Phase::Running {
                            phase = self.set_phase(Phase::Paused);
                        }
                    }
                    Inbound::Client(c) => {
                        use hla_core::session::wire::ClientMessage as C;
                        match c {
                            C::Start if phase == Phase::Lobby => {
                                phase = self.set_phase(Phase::Running);
                                next = Instant::now();
                            }
                            C::Pause { paused: true } if phase == Phase::Running => {
                                phase = self.set_phase(Phase::Paused);
                            }
                            C::Pause { paused: false } if phase == Phase::Paused && connected => {
                                phase = self.set_phase(Phase::Running);
                                next = Instant::now();
                            }
                            C::Action { action } => human = action,
                            C::Chat { text } if phase != Phase::Finished => {
                                self.say(Speaker::Human, &text);
                                for job in self.m.command(&text, disp.now_ms()) {
                                    disp.submit(job);
                                }
                            }
                            _ => {}
                        }
                    }
                }
            }
            if dropped_at.is_some_and(|t| t.elapsed() >= self.grace) {
                self.end(&mut written);
                return;
            }

            let wake = next.min(Instant::now() + POLL);
            while let Some(d) = disp.recv_until(wake) {
                for job in self.m.deliver(d) {
                    disp.submit(job);
                }
            }
            let now = Instant::now();
            if now < next {
                continue;
            }
            match phase {
                Phase::Running => {
                    let (jobs, events) = match self.m.tick(disp.now_ms(), human) {
                        Ok(r) => r,
                        Err(e) => {
                            let _ = self.messages.send(ServerMessage::Error { message: e.to_string() });
                            self.end(&mut written);
                            return;
                        }
                    };
                    human = AtomicAction::Noop;
                    for job in jobs {
                        disp.submit(job);
                    }
                    self.publish(&events);
                    next += period;
                }
                Phase::Paused if !freeze => {
                    self.m.advance(period.as_secs_f64());
                    self.publish(&[]);
                    next = now + period;
                }
                _ => next = now + period,
            }
            self.relay_chat(&mut seen_events);
            self.flush(&mut written);
            if self.m.is_over() {
                self.end(&mut written);
                return;
            }
        }
    }

    fn set_phase(&self, phase: Phase) -> Phase {
        self.phase.send_replace(phase);
        let _ = self.messages.send(ServerMessage::Phase { phase });
        phase
    }

    fn say(&self, from: Speaker, text: &str) {
        let _ = self.messages.send(ServerMessage::Chat {
            from,
            text: text.to_string(),
            game_s: self.m.state.clock,
        });
    }

    /// Sends the view, then a score message if anything moved the score.
    fn publish(&self, events: &[GameEvent]) {
        self.views.send_replace(StateView::of(&self.m.state));
        let scoring: Vec<GameEvent> = events
            .iter()
            .filter(|e| matches!(e, GameEvent::SoupServed { .. } | GameEvent::OrderExpired { .. }))
            .cloned()
            .collect();
        if !scoring.is_empty() {
            let _ = self.messages.send(ServerMessage::Score {
                score: self.m.state.score,
                events: scoring,
            });
        }
    }

    fn relay_chat(&self, seen: &mut usize) {
        for e in &self.m.events[*seen..] {
            if let EventKind::ChatSent { text, .. } = &e.event {
                self.say(Speaker::Ai, text);
            }
        }
        *seen = self.m.events.len();
    }

    fn flush(&mut self, written: &mut usize) {
        for r in &self.m.records[*written..] {
            // A full disk should not stop the game in progress.
            let _ = self.log.append(r);
        }
        *written = self.m.records.len();
    }

    fn end(&mut self, written: &mut usize) {
        self.m.finish();
        self.flush(written);
        let last = StateView::of(&self.m.state);
        self.views.send_if_modified(|v| {
            let changed = *v != last;
            *v = last;
            changed
        });
        let _ = self.messages.send(ServerMessage::Score {
            score: self.m.state.score,
            events: Vec::new(),
        });
        self.set_phase(Phase::Finished);
    }
}
