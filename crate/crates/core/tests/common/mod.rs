//! Scripted play for integration tests: drives the AI player through macro
//! plans on a bare game and keeps a replay log of every tick.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use hla_core::catalog::MacroAction;
use hla_core::env::{AtomicAction, Cell, GameConfig, GameEvent, GameState, MapSpec, TileKind, AGENT};
use hla_core::executor::{ExecutionPlan, PlanStatus};
use hla_core::runtime::AgentKind;
use hla_core::session::{ReplayRecord, SCHEMA_VERSION};

/// An event with the clock at the start and the end of its tick. Player
/// actions happen at the start; timers resolve by the end.
#[derive(Clone, Debug)]
pub struct Stamped {
    pub before: f64,
    pub after: f64,
    pub event: GameEvent,
}

pub struct Play {
    pub state: GameState,
    pub records: Vec<ReplayRecord>,
    pub log: Vec<Stamped>,
}

impl Play {
    pub fn new(config: GameConfig, map: MapSpec) -> Play {
        let state = GameState::new(config.clone(), map.clone()).expect("valid game");
        let header = ReplayRecord::Header {
            schema_version: SCHEMA_VERSION,
            config,
            map,
            agent: AgentKind::Hla,
            human: "idle".into(),
            backend: "scripted play".into(),
        };
        Play {
            state,
            records: vec![header],
            log: Vec::new(),
        }
    }

    pub fn quick(config: impl FnOnce(&mut GameConfig)) -> Play {
        let mut cfg = GameConfig::for_map("quick");
        config(&mut cfg);
        Play::new(cfg, MapSpec::builtin("quick").expect("quick is built in"))
    }

    /// One tick with the human idle. Returns the events it produced.
    pub fn tick(&mut self, agent: AtomicAction) -> Vec<GameEvent> {
        let actions = [AtomicAction::Noop, agent];
        self.records.push(ReplayRecord::Tick {
            tick: self.state.tick,
            actions,
        });
        let before = self.state.clock;
        let events = self.state.step_mut(actions).expect("game still running");
        let after = self.state.clock;
        self.log.extend(events.iter().map(|e| Stamped {
            before,
            after,
            event: e.clone(),
        }));
        events
    }

    /// Runs one macro to completion and returns the atomics it emitted.
    pub fn run(&mut self, action: MacroAction) -> u32 {
        let mut plan = ExecutionPlan::begin(action, &self.state, AGENT);
        let mut emitted = 0;
        loop {
            let a = plan.next_atomic(&self.state);
            if !plan.is_running() {
                break;
            }
            emitted += u32::from(a != AtomicAction::Noop);
            self.tick(a);
        }
        assert_eq!(plan.status, PlanStatus::Done, "{} at t={}", action.name(), self.state.clock);
        emitted
    }

    pub fn run_all(&mut self, actions: &[MacroAction]) {
        for a in actions {
            self.run(*a);
        }
    }

    /// Idles until an event matches; returns it stamped.
    pub fn wait_for(&mut self, pred: impl Fn(&GameEvent) -> bool) -> Stamped {
        let start = self.log.len();
        loop {
            assert!(!self.state.is_over(), "game ended while waiting");
            self.tick(AtomicAction::Noop);
            if let Some(s) = self.log[start..].iter().find(|s| pred(&s.event)) {
                return s.clone();
            }
        }
    }

    pub fn finish(mut self) -> Vec<ReplayRecord> {
        self.records.push(ReplayRecord::Final {
            tick: self.state.tick,
            score: self.state.score,
            state_hash: self.state.state_hash(),
        });
        self.records
    }
}

/// Unit-weight Dijkstra from `origin` to any cell next to a goal.
pub fn dijkstra(map: &MapSpec, origin: Cell, goals: &[Cell], blocked: &BTreeSet<Cell>) -> Option<usize> {
    let n = map.width * map.height;
    let id = |c: Cell| c.row * map.width + c.col;
    let mut dist = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[id(origin)] = 0;
    heap.push(Reverse((0usize, origin.row, origin.col)));
    while let Some(Reverse((d, r, c))) = heap.pop() {
        let here = Cell::new(r, c);
        if d > dist[id(here)] {
            continue;
        }
        if goals.iter().any(|g| g.row.abs_diff(r) + g.col.abs_diff(c) == 1) {
            return Some(d);
        }
        let steps = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)];
        for (dr, dc) in steps {
            let (nr, nc) = (r as i64 + dr, c as i64 + dc);
            if nr < 0 || nc < 0 || nr >= map.height as i64 || nc >= map.width as i64 {
                continue;
            }
            let next = Cell::new(nr as usize, nc as usize);
            if map.tile(next) != TileKind::Floor || blocked.contains(&next) {
                continue;
            }
            if d + 1 < dist[id(next)] {
                dist[id(next)] = d + 1;
                heap.push(Reverse((d + 1, next.row, next.col)));
            }
        }
    }
    None
}
