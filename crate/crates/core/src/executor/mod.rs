//! Script policy: BFS navigation plus per-macro step lists.

mod bfs;
mod plan;

pub use bfs::{bfs, DistanceField, PathQuery};
pub use plan::{clear_cell, order_relevant, ExecutionPlan, FailReason, PlanStatus, Step, StepKind};
