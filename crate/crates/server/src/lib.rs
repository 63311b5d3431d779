//! Live games over WebSocket. Each session owns one game on its own thread;
//! connections talk to it through mailboxes and never touch the state.
//!
//! Endpoints:
//! - `GET /maps`, `GET /agents`: lobby listings
//! - `POST /sessions`: create a session from a [`CreateSession`] body
//! - `GET /sessions/{id}/replay`: the session's replay log, one record per line
//! - `GET /session/{id}`: WebSocket for the human player

mod lobby;
mod session;
mod ws;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use hla_core::llm::{BackendKind, Persona};
use hla_core::runtime::AgentConfig;
use hla_core::session::wire::{encode, CreateSession, LobbyMessage};

pub use lobby::{Lobby, LobbyError};
pub use session::{Inbound, SessionHandle, SessionInfo};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    /// Replay logs go to `<results_dir>/sessions/<id>.jsonl`.
    pub results_dir: PathBuf,
    /// Extra `.txt` layouts offered next to the shipped maps.
    pub maps_dir: Option<PathBuf>,
    pub slow: BackendKind,
    pub fast: BackendKind,
    /// Agent settings; the kind is taken from each create request.
    pub agent: AgentConfig,
    /// A dropped player has this long to reconnect before the game ends.
    pub reconnect_grace_s: f64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1:8080".into(),
            results_dir: PathBuf::from("results"),
            maps_dir: None,
            slow: BackendKind::Scripted {
                persona: Persona::Oracle,
            },
            fast: BackendKind::Scripted {
                persona: Persona::Oracle,
            },
            agent: AgentConfig::default(),
            reconnect_grace_s: 60.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServerConfig {
    pub fn load(path: &Path) -> Result<ServerConfig, ServerError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| ServerError::Config(e.to_string()))
    }
}

fn lobby_reply(status: StatusCode, msg: &LobbyMessage) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], encode(msg) + "\n").into_response()
}

fn error_reply(err: &LobbyError) -> Response {
    let status = match err {
        LobbyError::UnknownSession(_) => StatusCode::NOT_FOUND,
        LobbyError::Io(_) | LobbyError::Backend(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    };
    lobby_reply(
        status,
        &LobbyMessage::Error {
            message: err.to_string(),
        },
    )
}

async fn list_maps(State(lobby): State<Arc<Lobby>>) -> Response {
    lobby_reply(StatusCode::OK, &LobbyMessage::Maps { maps: lobby.map_names() })
}

async fn list_agents() -> Response {
    lobby_reply(
        StatusCode::OK,
        &LobbyMessage::Agents {
            agents: hla_core::runtime::AgentKind::ALL.to_vec(),
        },
    )
}

async fn create(State(lobby): State<Arc<Lobby>>, Json(req): Json<CreateSession>) -> Response {
    match tokio::task::spawn_blocking(move || lobby.create(&req)).await {
        Ok(Ok(handle)) => lobby_reply(StatusCode::CREATED, &handle.info.created()),
        Ok(Err(e)) => error_reply(&e),
        Err(e) => lobby_reply(
            StatusCode::INTERNAL_SERVER_ERROR,
            &LobbyMessage::Error { message: e.to_string() },
        ),
    }
}

async fn replay(State(lobby): State<Arc<Lobby>>, UrlPath(id): UrlPath<String>) -> Response {
    match lobby.replay_text(&id) {
        Ok(text) => (StatusCode::OK, [(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response(),
        Err(e) => error_reply(&e),
    }
}

pub fn router(lobby: Arc<Lobby>) -> Router {
    Router::new()
        .route("/maps", get(list_maps))
        .route("/agents", get(list_agents))
        .route("/sessions", post(create))
        .route("/sessions/{id}/replay", get(replay))
        .route("/session/{id}", get(ws::upgrade))
        .with_state(lobby)
}

/// Binds and serves until the process stops. Returns the bound address
/// through `ready` so callers can use port 0.
pub async fn serve(config: ServerConfig, ready: Option<tokio::sync::oneshot::Sender<SocketAddr>>) -> Result<(), ServerError> {
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    let addr = listener.local_addr()?;
    let lobby = Arc::new(Lobby::new(config)?);
    if let Some(tx) = ready {
        let _ = tx.send(addr);
    }
    axum::serve(listener, router(lobby)).await?;
    Ok(())
}
