//! Python module `hla`: a steppable game, single matches against an agent,
//! the scenario experiment and replay checking. Results come back as plain
//! dicts and lists built from the same serde records the CLI writes.

use std::fmt::Display;
use std::path::Path;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use hla_core::catalog::{assess, enumerate_available};
use hla_core::env::{AtomicAction, GameConfig, GameState, MapSpec, AGENT};
use hla_core::eval::{run_scenario, ScenarioKind};
use hla_core::llm::{DelayMode, Delayed, Persona, ScriptedMind, SharedBackend};
use hla_core::runtime::{run_simulated, AgentConfig, AgentKind, HumanKind, Minds, RunSpec, Timed};
use hla_core::session::wire::{apply_patch, StateView};
use hla_core::session::{load_replay, resimulate as replay_again, write_replay};

fn err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts a JSON value into the matching Python object.
pub fn to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py_record<'py, T: serde::Serialize>(py: Python<'py>, record: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(record).map_err(err)?)
}

fn parse_action(name: &str) -> PyResult<AtomicAction> {
    serde_json::from_value(Value::String(name.to_string())).map_err(|_| err(format!("unknown action {name:?}")))
}

fn parse_agent(name: &str) -> PyResult<AgentKind> {
    name.parse().map_err(err)
}

fn map_and_config(map: &str, seed: u64, overrides: Option<&str>) -> PyResult<(MapSpec, GameConfig)> {
    let spec = MapSpec::builtin(map).ok_or_else(|| err(format!("unknown map {map:?}")))?;
    let mut config = GameConfig::for_map(map);
    config.rng_seed = seed;
    if let Some(text) = overrides {
        let patch: Value = serde_json::from_str(text).map_err(err)?;
        let mut value = serde_json::to_value(&config).map_err(err)?;
        apply_patch(&mut value, &patch);
        config = serde_json::from_value(value).map_err(err)?;
        config.validate().map_err(err)?;
    }
    Ok((spec, config))
}

fn scripted(persona: &str, delay_ms: f64) -> PyResult<Minds> {
    let persona = Persona::parse(persona).ok_or_else(|| err(format!("unknown persona {persona:?}")))?;
    let base: SharedBackend = Arc::new(ScriptedMind::new(persona));
    Ok(Minds::same(Arc::new(Delayed::uniform(base, delay_ms, DelayMode::Modeled))))
}

/// A game stepped by hand, one tick per call.
#[pyclass(module = "hla")]
pub struct Game {
    state: GameState,
}

#[pymethods]
impl Game {
    /// `overrides` is a JSON merge patch on the map's default config.
    #[new]
    #[pyo3(signature = (map = "quick", seed = 0, overrides = None))]
    fn new(map: &str, seed: u64, overrides: Option<&str>) -> PyResult<Self> {
        let (spec, config) = map_and_config(map, seed, overrides)?;
        Ok(Game {
            state: GameState::new(config, spec).map_err(err)?,
        })
    }

    /// Applies one move per player and returns the tick's events.
    fn step<'py>(&mut self, py: Python<'py>, human: &str, agent: &str) -> PyResult<Bound<'py, PyAny>> {
        let actions = [parse_action(human)?, parse_action(agent)?];
        let events = self.state.step_mut(actions).map_err(err)?;
        to_py_record(py, &events)
    }

    fn view<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py_record(py, &StateView::of(&self.state))
    }

    /// Availability and value of every macro action for the AI player.
    fn utility<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let list = PyList::empty(py);
        for u in assess(&self.state, AGENT) {
            let row = PyDict::new(py);
            row.set_item("action", u.action.name())?;
            row.set_item("available", u.available)?;
            row.set_item("value", u.value)?;
            list.append(row)?;
        }
        Ok(list.into_any())
    }

    fn available(&self) -> Vec<String> {
        enumerate_available(&self.state, AGENT).into_iter().map(|a| a.name()).collect()
    }

    #[getter]
    fn tick(&self) -> u64 {
        self.state.tick
    }

    #[getter]
    fn clock(&self) -> f64 {
        self.state.clock
    }

    #[getter]
    fn score(&self) -> i32 {
        self.state.score
    }

    fn is_over(&self) -> bool {
        self.state.is_over()
    }

    fn state_hash(&self) -> String {
        self.state.state_hash()
    }
}

/// One headless game against an agent on the virtual clock. `commands` are
/// `(seconds, text)` pairs; `replay` is an optional path for the log.
#[pyfunction]
#[pyo3(signature = (
    agent = "HLA", map = "quick", persona = "oracle", delay_ms = 1000.0, seed = 0,
    seconds = None, commands = Vec::new(), human = "chopper", replay = None
))]
#[allow(clippy::too_many_arguments)]
fn run_match<'py>(
    py: Python<'py>,
    agent: &str,
    map: &str,
    persona: &str,
    delay_ms: f64,
    seed: u64,
    seconds: Option<f64>,
    commands: Vec<(f64, String)>,
    human: &str,
    replay: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let human = match human {
        "idle" => HumanKind::Idle,
        "chopper" => HumanKind::Chopper,
        other => return Err(err(format!("unknown human {other:?}"))),
    };
    let mut spec = RunSpec::builtin(map, AgentConfig::new(parse_agent(agent)?), human)
        .ok_or_else(|| err(format!("unknown map {map:?}")))?;
    spec.config.rng_seed = seed;
    if let Some(s) = seconds {
        spec.config.game_duration = s;
    }
    let minds = scripted(persona, delay_ms)?;
    let out = py
        .detach(|| run_simulated(&spec, &minds, &mut Timed::new(commands)))
        .map_err(err)?;
    if let Some(path) = replay {
        write_replay(Path::new(path), &out.records).map_err(err)?;
    }
    let result = PyDict::new(py);
    result.set_item("score", out.final_score)?;
    result.set_item("ticks", out.ticks)?;
    result.set_item("state_hash", &out.state_hash)?;
    result.set_item("agent_events", to_py_record(py, &out.events)?)?;
    result.set_item("game_events", to_py_record(py, &out.game_events)?)?;
    Ok(result.into_any())
}

/// The no-command or one-command game, repeated.
#[pyfunction]
#[pyo3(signature = (kind, agent = "HLA", repeats = 1, seed = 0, persona = "oracle", delay_ms = 1000.0))]
fn scenario<'py>(
    py: Python<'py>,
    kind: &str,
    agent: &str,
    repeats: usize,
    seed: u64,
    persona: &str,
    delay_ms: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: ScenarioKind = kind.parse().map_err(err)?;
    let agent = parse_agent(agent)?;
    let minds = scripted(persona, delay_ms)?;
    let (report, _) = py
        .detach(|| run_scenario(kind, agent, &minds, repeats, seed))
        .map_err(err)?;
    to_py_record(py, &report)
}

/// Re-runs a replay log; reports whether it matches its final record.
#[pyfunction]
fn resimulate<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyAny>> {
    let records = load_replay(Path::new(path)).map_err(err)?;
    let again = replay_again(&records).map_err(err)?;
    let result = PyDict::new(py);
    result.set_item("ticks", again.ticks)?;
    result.set_item("score", again.score)?;
    result.set_item("state_hash", &again.state_hash)?;
    result.set_item("matches", again.matches_log())?;
    Ok(result.into_any())
}

#[pyfunction]
fn maps() -> Vec<String> {
    MapSpec::builtin_names().into_iter().map(str::to_lowercase).collect()
}

#[pyfunction]
fn agents() -> Vec<String> {
    AgentKind::ALL.iter().map(|a| a.to_string()).collect()
}

#[pymodule]
fn hla(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Game>()?;
    m.add_function(wrap_pyfunction!(run_match, m)?)?;
    m.add_function(wrap_pyfunction!(scenario, m)?)?;
    m.add_function(wrap_pyfunction!(resimulate, m)?)?;
    m.add_function(wrap_pyfunction!(maps, m)?)?;
    m.add_function(wrap_pyfunction!(agents, m)?)?;
    Ok(())
}
