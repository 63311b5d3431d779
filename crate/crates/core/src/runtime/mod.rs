//! Agent wiring and game loops.

mod agent;
mod dispatch;
mod driver;
mod events;
mod human;

pub use agent::{Agent, AgentConfig, AgentKind, FmoaState, Job, Now, Outcome, Task, UnknownAgent};
pub use dispatch::{sleep_until, Delivery, Minds, SimDispatcher, ThreadDispatcher};
pub use driver::{
    run_realtime, run_simulated, Director, Match, MatchOutput, RunSpec, TimedGameEvent, Timed, View,
};
pub use events::{
    condition_order_ok, max_in_flight, wall_times_ordered, AgentEvent, Cause, Chooser, EventKind, MacroEnd, Mind,
};
pub use human::{demand_ranking, ChopperHuman, HumanKind, HumanPolicy, IdleHuman};
