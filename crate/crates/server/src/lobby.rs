//! Session registry: validates create requests, starts workers and finds
//! sessions by id.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::{mpsc, Arc, Mutex};
use std::time::Duration;

use tokio::sync::{broadcast, watch};

use hla_core::env::{GameConfig, GameState, MapSpec};
use hla_core::runtime::{AgentConfig, AgentKind, Match, Minds, UnknownAgent};
use hla_core::session::wire::{apply_patch, CreateSession, Phase, StateView};
use hla_core::session::ReplayWriter;

use crate::session::{SessionHandle, SessionInfo, Worker};
use crate::{ServerConfig, ServerError};

#[derive(Debug, thiserror::Error)]
pub enum LobbyError {
    #[error("unknown map {0:?}")]
    UnknownMap(String),
    #[error(transparent)]
    UnknownAgent(#[from] UnknownAgent),
    #[error("bad overrides: {0}")]
    BadOverrides(String),
    #[error("no session {0:?}")]
    UnknownSession(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct Lobby {
    config: ServerConfig,
    maps: BTreeMap<String, MapSpec>,
    minds: Minds,
    describe: String,
    sessions: Mutex<HashMap<String, Arc<SessionHandle>>>,
}

impl Lobby {
    pub fn new(config: ServerConfig) -> Result<Lobby, ServerError> {
        let mut maps = BTreeMap::new();
        for name in MapSpec::builtin_names() {
            maps.insert(name.to_lowercase(), MapSpec::builtin(name).expect("listed maps exist"));
        }
        if let Some(dir) = &config.maps_dir {
            let listing = std::fs::read_dir(dir).map_err(|e| ServerError::Config(format!("maps_dir {}: {e}", dir.display())))?;
            for entry in listing {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "txt") {
                    let map = MapSpec::load(&path).map_err(|e| ServerError::Config(format!("{}: {e}", path.display())))?;
                    maps.insert(map.name.to_lowercase(), map);
                }
            }
        }
        let build = |kind: &hla_core::llm::BackendKind| kind.build().map_err(|e| ServerError::Config(e.to_string()));
        let minds = Minds {
            slow: build(&config.slow)?,
            fast: build(&config.fast)?,
        };
        let describe = format!("{} / {}", minds.slow.describe(), minds.fast.describe());
        std::fs::create_dir_all(config.results_dir.join("sessions"))?;
        Ok(Lobby {
            config,
            maps,
            minds,
            describe,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn map_names(&self) -> Vec<String> {
        self.maps.keys().cloned().collect()
    }

    /// Game config for a map with the request's merge patch applied.
    pub fn game_config(&self, req: &CreateSession) -> Result<(MapSpec, GameConfig), LobbyError> {
        let map = self
            .maps
            .get(&req.map.to_lowercase())
            .cloned()
            .ok_or_else(|| LobbyError::UnknownMap(req.map.clone()))?;
        let mut config = GameConfig::for_map(&map.name);
        if let Some(patch) = &req.overrides {
            if !patch.is_object() {
                return Err(LobbyError::BadOverrides("expected an object".into()));
            }
            let mut value = serde_json::to_value(&config).expect("config serializes");
            apply_patch(&mut value, patch);
            config = serde_json::from_value(value).map_err(|e| LobbyError::BadOverrides(e.to_string()))?;
            config.validate().map_err(|e| LobbyError::BadOverrides(e.to_string()))?;
        }
        Ok((map, config))
    }

    pub fn create(&self, req: &CreateSession) -> Result<Arc<SessionHandle>, LobbyError> {
        let agent: AgentKind = req.agent.parse()?;
        let (map, config) = self.game_config(req)?;
        let state = GameState::new(config.clone(), map.clone()).map_err(|e| LobbyError::BadOverrides(e.to_string()))?;
        let id = format!("{:016x}", rand::random::<u64>());
        let log_path = self.log_path(&id);
        let log = ReplayWriter::create(&log_path)?;
        let agent_config = AgentConfig {
            kind: agent,
            ..self.config.agent.clone()
        };
        let deadline_ms = agent_config.deadline_ms;
        let m = Match::new(state, agent_config, "remote", &self.describe);

        let (inbox_tx, inbox_rx) = mpsc::channel();
        let (views_tx, views_rx) = watch::channel(StateView::of(&m.state));
        let (phase_tx, phase_rx) = watch::channel(Phase::Lobby);
        let (messages, _) = broadcast::channel(256);
        let info = SessionInfo {
            id: id.clone(),
            map,
            config,
            agent,
            log_path,
        };
        let worker = Worker {
            m,
            minds: self.minds.clone(),
            inbox: inbox_rx,
            views: views_tx,
            phase: phase_tx,
            messages: messages.clone(),
            log,
            grace: Duration::from_secs_f64(self.config.reconnect_grace_s.max(0.0)),
            deadline_ms,
        };
        std::thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || worker.run())?;
        let handle = Arc::new(SessionHandle {
            info,
            inbox: inbox_tx,
            views: views_rx,
            phase: phase_rx,
            messages,
            occupied: AtomicBool::new(false),
        });
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, handle.clone());
        Ok(handle)
    }

    pub fn get(&self, id: &str) -> Result<Arc<SessionHandle>, LobbyError> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| LobbyError::UnknownSession(id.to_string()))
    }

    /// The replay log as written so far.
    pub fn replay_text(&self, id: &str) -> Result<String, LobbyError> {
        let handle = self.get(id)?;
        Ok(std::fs::read_to_string(&handle.info.log_path)?)
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.config.results_dir.join("sessions").join(format!("{id}.jsonl"))
    }
}
