//! Stand-ins for the human player in headless games.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{self, MacroAction};
use crate::env::{AtomicAction, GameState, Ingredient, HUMAN};
use crate::executor::ExecutionPlan;

pub trait HumanPolicy: Send {
    fn act(&mut self, state: &GameState) -> AtomicAction;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanKind {
    Idle,
    /// Chops what the open orders still need, and nothing else.
    Chopper,
}

impl HumanKind {
    pub fn name(self) -> &'static str {
        match self {
            HumanKind::Idle => "idle",
            HumanKind::Chopper => "chopper",
        }
    }

    pub fn build(self) -> Box<dyn HumanPolicy> {
        match self {
            HumanKind::Idle => Box::new(IdleHuman),
            HumanKind::Chopper => Box::new(ChopperHuman::default()),
        }
    }
}

impl fmt::Display for HumanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HumanKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "idle" => Ok(HumanKind::Idle),
            "chopper" => Ok(HumanKind::Chopper),
            other => Err(format!("unknown human policy {other:?}")),
        }
    }
}

pub struct IdleHuman;

impl HumanPolicy for IdleHuman {
    fn act(&mut self, _state: &GameState) -> AtomicAction {
        AtomicAction::Noop
    }
}

#[derive(Default)]
pub struct ChopperHuman {
    plan: Option<ExecutionPlan>,
}

/// Ingredients the open orders still lack, ranked by how many open orders
/// use them; ties follow the fixed ingredient order.
pub fn demand_ranking(state: &GameState) -> Vec<Ingredient> {
    let mut counts: Vec<(Ingredient, usize)> = Ingredient::ALL
        .into_iter()
        .filter(|k| catalog::needs_chop(state, *k))
        .map(|k| (k, state.open_orders().filter(|o| o.soup.contains(k)).count()))
        .collect();
    counts.sort_by(|a, b| b.1.cmp(&a.1));
    counts.into_iter().map(|(k, _)| k).collect()
}

impl HumanPolicy for ChopperHuman {
    fn act(&mut self, state: &GameState) -> AtomicAction {
        if let Some(plan) = self.plan.as_mut() {
            let a = plan.next_atomic(state);
            if plan.is_running() {
                return a;
            }
            self.plan = None;
            if a != AtomicAction::Noop {
                return a;
            }
        }
        for k in demand_ranking(state) {
            let mut plan = ExecutionPlan::begin(MacroAction::Chop(k), state, HUMAN);
            if plan.is_running() {
                let a = plan.next_atomic(state);
                if plan.is_running() {
                    self.plan = Some(plan);
                }
                return a;
            }
        }
        AtomicAction::Noop
    }
}
