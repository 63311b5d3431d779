//! Simple-command games on Quick with a human who only chops.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::stats::{render_table, Summary};
use super::EvalError;
use crate::env::Recipe;
use crate::runtime::{run_simulated, AgentConfig, AgentKind, HumanKind, MatchOutput, Minds, RunSpec, Timed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    NoCommand,
    OneCommand,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::NoCommand => "no-command",
            ScenarioKind::OneCommand => "one-command",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no-command" | "NoCommand" => Ok(ScenarioKind::NoCommand),
            "one-command" | "OneCommand" => Ok(ScenarioKind::OneCommand),
            other => Err(format!("unknown scenario {other:?}")),
        }
    }
}

/// The soup requested in the one-command game; its order appears once.
pub const ONE_COMMAND_SOUP: Recipe = Recipe::Bob;
pub const ONE_COMMAND_TEXT: &str = "Cook Bob Soup.";

pub fn scenario_spec(kind: ScenarioKind, agent: AgentKind, seed: u64) -> RunSpec {
    let mut spec = RunSpec::builtin("quick", AgentConfig::new(agent), HumanKind::Chopper).expect("quick is built in");
    spec.config.rng_seed = seed;
    if kind == ScenarioKind::OneCommand {
        spec.config.order_script = vec![ONE_COMMAND_SOUP];
        spec.config.order_pool.retain(|r| *r != ONE_COMMAND_SOUP);
    }
    spec
}

pub fn scenario_script(kind: ScenarioKind) -> Vec<(f64, String)> {
    match kind {
        ScenarioKind::NoCommand => Vec::new(),
        ScenarioKind::OneCommand => vec![(0.0, ONE_COMMAND_TEXT.to_string())],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioKind,
    pub agent: AgentKind,
    pub seed: u64,
    pub scores: Vec<i32>,
    pub score: Summary,
}

/// Repeats one scenario with the same order sequence every time.
pub fn run_scenario(
    kind: ScenarioKind,
    agent: AgentKind,
    minds: &Minds,
    repeats: usize,
    seed: u64,
) -> Result<(ScenarioReport, Vec<MatchOutput>), EvalError> {
    let spec = scenario_spec(kind, agent, seed);
    let mut outputs = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        outputs.push(run_simulated(&spec, minds, &mut Timed::new(scenario_script(kind)))?);
    }
    let scores: Vec<i32> = outputs.iter().map(|o| o.final_score).collect();
    let xs: Vec<f64> = scores.iter().map(|s| *s as f64).collect();
    Ok((
        ScenarioReport {
            scenario: kind,
            agent,
            seed,
            score: Summary::of(&xs),
            scores,
        },
        outputs,
    ))
}

pub fn scenario_table(reports: &[ScenarioReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.scenario.to_string(),
                r.agent.to_string(),
                r.score.show(1),
                format!("{:?}", r.scores),
            ]
        })
        .collect();
    render_table(&["scenario", "agent", "score", "runs"], &rows)
}
