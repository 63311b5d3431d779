//! Experiment harness: latency, simple-command scores, complex commands and
//! behavior analysis. Results are plain serde records plus text tables.

mod behavior;
mod complex;
mod latency;
mod scenario;
mod stats;

pub use behavior::{analyze_behavior, analyze_round, behavior_table, defining_macro, hit_rate, tally, BehaviorReport, Ratio};
pub use complex::{
    complex_table, fixture, judge, run_attempt, run_complex_suite, run_trial, summarize, Attempt, Challenge,
    ChallengeSummary, Checker, CommandTrial, ComplexReport, Fixture, Step, ATTEMPTS, FIXTURES, PASS_THRESHOLD,
    SETUP_LIMIT_S, TIME_LIMIT_S,
};
pub use latency::{
    bench_latency, latency_records, latency_script, latency_table, stage_latencies, LatencyRecord, LatencyReport,
    StageLatency, COMMAND_INTERVAL_S, FIRST_COMMAND_S, LATENCY_COMMANDS, LATENCY_GAME_S,
};
pub use scenario::{
    run_scenario, scenario_script, scenario_spec, scenario_table, ScenarioKind, ScenarioReport, ONE_COMMAND_SOUP,
    ONE_COMMAND_TEXT,
};
pub use stats::{render_table, write_jsonl, Summary};

use crate::env::EnvError;
use crate::session::ReplayError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("unknown map {0:?}")]
    UnknownMap(String),
    #[error("missing trace: {0}")]
    MissingTrace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
