//! Command-line front end: the four experiment families, replay checking,
//! the utility table dump, single games and the session server.
//!
//! Every experiment writes `<results>/<experiment>/records.jsonl` (one
//! report per line) and `<results>/<experiment>/table.txt`, and prints the
//! table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use hla_core::catalog::assess;
use hla_core::env::{GameConfig, GameState, MapSpec, AGENT};
use hla_core::eval::{
    analyze_behavior, bench_latency, behavior_table, complex_table, latency_table, render_table, run_complex_suite,
    run_scenario, scenario_table, write_jsonl, BehaviorReport, Challenge, EvalError, ScenarioKind, ATTEMPTS,
};
use hla_core::llm::{BackendKind, DelayMode, Delayed, Persona, SharedBackend};
use hla_core::runtime::{
    run_realtime, run_simulated, AgentConfig, AgentKind, HumanKind, Minds, RunSpec, Timed,
};
use hla_core::session::{load_replay, resimulate, resimulate_with, write_replay, ReplayError, ReplayRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Env(#[from] hla_core::env::EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("replay {path} does not match its final record: logged {logged}, replayed {replayed}")]
    Mismatch {
        path: String,
        logged: String,
        replayed: String,
    },
}

#[derive(Debug, Parser)]
#[command(name = "hla", version, about = "Cooperative cooking games with a language agent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reaction and action latency of each agent over a fixed command set.
    BenchLatency {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "quick")]
        map: String,
    },
    /// Scores in the no-command and one-command games.
    Scenario {
        #[command(flatten)]
        common: Common,
        /// no-command or one-command; both when omitted.
        #[arg(long)]
        kind: Option<ScenarioKind>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
    /// Success rate and completion time on the complex command set.
    Complex {
        #[command(flatten)]
        common: Common,
        /// Quantity, Semantics or Ambiguity; all when omitted.
        #[arg(long)]
        challenge: Option<Challenge>,
        #[arg(long, default_value_t = ATTEMPTS)]
        attempts: usize,
    },
    /// Valuable-action, fire and hit ratios. Analyzes the given logs, or
    /// plays `repeats` one-command games per agent when none are given.
    Behavior {
        #[command(flatten)]
        common: Common,
        /// Replay files or directories of them.
        logs: Vec<PathBuf>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Re-runs a replay log and checks it against its final record.
    Replay { file: PathBuf },
    /// Per-action availability and value for one game state.
    Utility {
        #[arg(long, default_value = "quick")]
        map: String,
        /// Game config file; the map's defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Take the state from this replay instead of a fresh game.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Tick of the replay to show; its last state when omitted.
        #[arg(long, requires = "replay")]
        tick: Option<u64>,
    },
    /// One game against an agent, written as a replay log.
    Play {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "quick")]
        map: String,
        #[arg(long, default_value = "chopper")]
        human: String,
        /// Game length; the config's when omitted.
        #[arg(long)]
        seconds: Option<f64>,
        /// Timed command as `SECONDS:TEXT`, repeatable.
        #[arg(long = "say", value_parser = parse_timed)]
        say: Vec<(f64, String)>,
        /// Pace ticks by the wall clock and run model calls on threads.
        #[arg(long)]
        realtime: bool,
    },
    /// WebSocket session server.
    Serve {
        /// Server config file (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Agent kind, repeatable; all six when omitted.
    #[arg(long = "agent")]
    pub agents: Vec<AgentKind>,
    /// Scripted persona used when no backend file is given.
    #[arg(long, default_value = "oracle", value_parser = parse_persona)]
    pub persona: Persona,
    /// TOML file with `slow` and optional `fast` backend tables.
    #[arg(long)]
    pub backend: Option<PathBuf>,
    /// Modeled latency of scripted backends per call.
    #[arg(long, default_value_t = 1000.0)]
    pub delay_ms: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "results")]
    pub results: PathBuf,
    /// Agents run in parallel on this many threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn parse_persona(s: &str) -> Result<Persona, String> {
    Persona::parse(s).ok_or_else(|| format!("unknown persona {s:?}"))
}

fn parse_timed(s: &str) -> Result<(f64, String), String> {
    let (t, text) = s.split_once(':').ok_or("expected SECONDS:TEXT")?;
    let t: f64 = t.trim().parse().map_err(|_| format!("bad time {t:?}"))?;
    Ok((t, text.trim().to_string()))
}

#[derive(Debug, Deserialize)]
struct BackendFile {
    slow: BackendKind,
    fast: Option<BackendKind>,
}

impl Common {
    fn agents(&self) -> Vec<AgentKind> {
        if self.agents.is_empty() {
            AgentKind::ALL.to_vec()
        } else {
            self.agents.clone()
        }
    }

    /// Scripted backends get the modeled delay; others report real latency.
    pub fn minds(&self) -> Result<Minds, CliError> {
        let (slow, fast) = match &self.backend {
            Some(path) => {
                let file: BackendFile = toml::from_str(&std::fs::read_to_string(path)?)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                let fast = file.fast.clone().unwrap_or_else(|| file.slow.clone());
                (file.slow, fast)
            }
            None => {
                let kind = BackendKind::Scripted { persona: self.persona };
                (kind.clone(), kind)
            }
        };
        Ok(Minds {
            slow: self.build(&slow)?,
            fast: self.build(&fast)?,
        })
    }

    fn build(&self, kind: &BackendKind) -> Result<SharedBackend, CliError> {
        let backend = kind.build().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(match kind {
            BackendKind::Scripted { .. } if self.delay_ms > 0.0 => {
                Arc::new(Delayed::uniform(backend, self.delay_ms, DelayMode::Modeled))
            }
            _ => backend,
        })
    }

    fn dir(&self, experiment: &str) -> PathBuf {
        self.results.join(experiment)
    }
}

/// Runs `f` for every agent on up to `jobs` threads, keeping agent order.
fn per_agent<T: Send>(
    agents: &[AgentKind],
    jobs: usize,
    f: impl Fn(AgentKind) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    let jobs = jobs.clamp(1, agents.len().max(1));
    let chunk = agents.len().div_ceil(jobs).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = agents
            .chunks(chunk)
            .map(|part| s.spawn(|| part.iter().map(|a| f(*a)).collect::<Result<Vec<T>, CliError>>()))
            .collect();
        let mut out = Vec::with_capacity(agents.len());
        for h in handles {
            out.extend(h.join().expect("experiment thread panicked")?);
        }
        Ok(out)
    })
}

fn save<T: Serialize>(dir: &Path, rows: &[T], table: &str) -> Result<(), CliError> {
    write_jsonl(&dir.join("records.jsonl"), rows)?;
    std::fs::write(dir.join("table.txt"), table)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BehaviorRow {
    pub agent: String,
    pub rounds: usize,
    pub report: BehaviorReport,
}

/// Runs one subcommand and returns what it prints.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::BenchLatency { common, map } => {
            let minds = common.minds()?;
            let reports = per_agent(&common.agents(), common.jobs, |a| Ok(bench_latency(a, &minds, &map)?.0))?;
            let table = latency_table(&reports);
            save(&common.dir("latency"), &reports, &table)?;
            Ok(table)
        }
        Command::Scenario { common, kind, repeats } => {
            let minds = common.minds()?;
            let kinds = match kind {
                Some(k) => vec![k],
                None => vec![ScenarioKind::NoCommand, ScenarioKind::OneCommand],
            };
            let per = per_agent(&common.agents(), common.jobs, |a| {
                kinds
                    .iter()
                    .map(|k| Ok(run_scenario(*k, a, &minds, repeats, common.seed)?.0))
                    .collect::<Result<Vec<_>, CliError>>()
            })?;
            let mut reports: Vec<_> = per.into_iter().flatten().collect();
            reports.sort_by_key(|r| r.scenario.to_string());
            let table = scenario_table(&reports);
            save(&common.dir("scenario"), &reports, &table)?;
            Ok(table)
        }
        Command::Complex {
            common,
            challenge,
            attempts,
        } => {
            let minds = common.minds()?;
            let reports = per_agent(&common.agents(), common.jobs, |a| {
                Ok(run_complex_suite(a, &minds, challenge, attempts, common.seed)?)
            })?;
            let table = complex_table(&reports);
            save(&common.dir("complex"), &reports, &table)?;
            Ok(table)
        }
        Command::Behavior { common, logs, repeats } => behavior(&common, &logs, repeats),
        Command::Replay { file } => check_replay(&file),
        Command::Utility {
            map,
            config,
            seed,
            replay,
            tick,
        } => utility(&map, config.as_deref(), seed, replay.as_deref(), tick),
        Command::Play {
            common,
            map,
            human,
            seconds,
            say,
            realtime,
        } => {
            let agent = match common.agents.as_slice() {
                [] => AgentKind::Hla,
                [one] => *one,
                _ => return Err(CliError::Usage("play takes one --agent".into())),
            };
            let human = match human.as_str() {
                "idle" => HumanKind::Idle,
                "chopper" => HumanKind::Chopper,
                other => return Err(CliError::Usage(format!("unknown human {other:?}"))),
            };
            let mut spec = RunSpec::builtin(&map, AgentConfig::new(agent), human)
                .ok_or_else(|| CliError::Usage(format!("unknown map {map:?}")))?;
            spec.config.rng_seed = common.seed;
            if let Some(s) = seconds {
                spec.config.game_duration = s;
            }
            let minds = common.minds()?;
            let mut director = Timed::new(say);
            let out = if realtime {
                run_realtime(&spec, &minds, &mut director)?
            } else {
                run_simulated(&spec, &minds, &mut director)?
            };
            let path = common
                .dir("games")
                .join(format!("{}-{}-{}.jsonl", agent, map.to_lowercase(), common.seed));
            std::fs::create_dir_all(path.parent().expect("has a parent"))?;
            write_replay(&path, &out.records)?;
            Ok(format!(
                "{agent} on {map}: score {} after {} ticks\nreplay: {}\n",
                out.final_score,
                out.ticks,
                path.display()
            ))
        }
        Command::Serve { config, bind, results } => {
            let mut cfg = match config {
                Some(path) => hla_server::ServerConfig::load(&path).map_err(|e| CliError::Usage(e.to_string()))?,
                None => hla_server::ServerConfig::default(),
            };
            if let Some(b) = bind {
                cfg.bind = b;
            }
            if let Some(r) = results {
                cfg.results_dir = r;
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime
                .block_on(async {
                    let (tx, rx) = tokio::sync::oneshot::channel();
                    tokio::spawn(async move {
                        if let Ok(addr) = rx.await {
                            eprintln!("listening on {addr}");
                        }
                    });
                    hla_server::serve(cfg, Some(tx)).await
                })
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(String::new())
        }
    }
}

fn collect_logs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            inner.retain(|f| f.extension().is_some_and(|e| e == "jsonl"));
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn behavior(common: &Common, logs: &[PathBuf], repeats: usize) -> Result<String, CliError> {
    let dir = common.dir("behavior");
    let mut rounds: BTreeMap<String, Vec<Vec<ReplayRecord>>> = BTreeMap::new();
    if logs.is_empty() {
        let minds = common.minds()?;
        let played = per_agent(&common.agents(), common.jobs, |a| {
            (0..repeats as u64)
                .map(|i| {
                    let seed = common.seed + i;
                    let (_, mut out) = run_scenario(ScenarioKind::OneCommand, a, &minds, 1, seed)?;
                    let records = out.remove(0).records;
                    let path = dir.join("rounds").join(format!("{a}-{seed}.jsonl"));
                    std::fs::create_dir_all(path.parent().expect("has a parent"))?;
                    write_replay(&path, &records)?;
                    Ok(records)
                })
                .collect::<Result<Vec<_>, CliError>>()
                .map(|r| (a.to_string(), r))
        })?;
        rounds.extend(played);
    } else {
        for file in collect_logs(logs)? {
            let records = load_replay(&file)?;
            let agent = match records.first() {
                Some(ReplayRecord::Header { agent, .. }) => agent.to_string(),
                _ => return Err(ReplayError::MissingHeader.into()),
            };
            rounds.entry(agent).or_default().push(records);
        }
    }
    let mut rows = Vec::new();
    for (agent, logs) in &rounds {
        rows.push(BehaviorRow {
            agent: agent.clone(),
            rounds: logs.len(),
            report: analyze_behavior(logs)?,
        });
    }
    let table = behavior_table(&rows.iter().map(|r| (r.agent.clone(), r.report)).collect::<Vec<_>>());
    save(&dir, &rows, &table)?;
    Ok(table)
}

fn check_replay(file: &Path) -> Result<String, CliError> {
    let records = load_replay(file)?;
    let again = resimulate(&records)?;
    let mut out = format!(
        "ticks {}\nscore {}\nstate {}\n",
        again.ticks, again.score, again.state_hash
    );
    match &again.logged {
        Some((score, hash)) if !again.matches_log() => Err(CliError::Mismatch {
            path: file.display().to_string(),
            logged: format!("{score} {hash}"),
            replayed: format!("{} {}", again.score, again.state_hash),
        }),
        Some(_) => {
            out.push_str("matches final record\n");
            Ok(out)
        }
        None => {
            out.push_str("no final record\n");
            Ok(out)
        }
    }
}

fn utility(
    map: &str,
    config: Option<&Path>,
    seed: Option<u64>,
    replay: Option<&Path>,
    tick: Option<u64>,
) -> Result<String, CliError> {
    let state = match replay {
        Some(path) => {
            let records = load_replay(path)?;
            let mut at = None;
            let (last, _) = resimulate_with(&records, |before, _, _| {
                if Some(before.tick) == tick && at.is_none() {
                    at = Some(before.clone());
                }
            })?;
            match tick {
                Some(t) if t == last.tick => last,
                Some(t) => at.ok_or_else(|| CliError::Usage(format!("replay has no tick {t}")))?,
                None => last,
            }
        }
        None => {
            let spec = MapSpec::builtin(map)
                .map(Ok)
                .unwrap_or_else(|| MapSpec::load(Path::new(map)))?;
            let mut cfg = match config {
                Some(path) => GameConfig::load(path)?,
                None => GameConfig::for_map(&spec.name),
            };
            if let Some(s) = seed {
                cfg.rng_seed = s;
            }
            GameState::new(cfg, spec)?
        }
    };
    let rows: Vec<Vec<String>> = assess(&state, AGENT)
        .into_iter()
        .map(|u| {
            vec![
                u.action.name(),
                if u.available { "yes".into() } else { "no".into() },
                format!("{:.4}", u.value),
            ]
        })
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "{} tick {} clock {:.3}", state.map.name, state.tick, state.clock);
    out.push_str(&render_table(&["action", "available", "value"], &rows));
    Ok(out)
}
