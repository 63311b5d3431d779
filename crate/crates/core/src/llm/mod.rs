//! Language-model gateway: free-text generation and candidate scoring behind
//! one trait, with offline backends for deterministic runs.

mod cassette;
mod delay;
pub mod directive;
mod remote;
mod scripted;

use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cassette::{CassetteRecord, Recorder, Replayer};
pub use delay::{DelayMode, Delayed};
pub use remote::{RemoteChat, RemoteScoring};
pub use scripted::{oracle_interpret, Persona, ScriptedMind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub text: String,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Milliseconds the caller is willing to wait.
    pub deadline_ms: u64,
}

impl PromptRequest {
    pub fn new(text: impl Into<String>, deadline_ms: u64) -> Self {
        PromptRequest {
            text: text.into(),
            max_tokens: 128,
            temperature: 0.0,
            deadline_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub latency_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScoreSet {
    pub prefix: String,
    pub candidates: Vec<String>,
    /// Summed continuation log-probabilities, aligned with `candidates`.
    pub log_probs: Vec<f64>,
    pub latency_ms: f64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("timed out after {after_ms} ms")]
    Timeout { after_ms: u64 },
    #[error("transport: {0}")]
    Transport(String),
    #[error("missing API key in ${0}")]
    Auth(String),
    #[error("backend does not support {0}")]
    Unsupported(&'static str),
}

/// A model endpoint. Implementations must be callable from several threads.
pub trait Backend: Send + Sync {
    fn describe(&self) -> String;

    fn generate(&self, request: &PromptRequest) -> Result<Generation, GatewayError>;

    fn score_candidates(
        &self,
        prefix: &str,
        candidates: &[String],
        deadline_ms: u64,
    ) -> Result<CandidateScoreSet, GatewayError>;
}

pub type SharedBackend = Arc<dyn Backend>;

/// Backend selection as it appears in config files and CLI flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    RemoteChat {
        endpoint: String,
        model: String,
        key_env: String,
    },
    RemoteScoring {
        endpoint: String,
        model: String,
        key_env: String,
    },
    Scripted {
        persona: Persona,
    },
    Cassette {
        path: std::path::PathBuf,
        mode: CassetteMode,
        /// Backend being recorded; unused on replay.
        #[serde(default)]
        inner: Option<Box<BackendKind>>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CassetteMode {
    Record,
    Replay,
}

impl BackendKind {
    pub fn build(&self) -> Result<SharedBackend, GatewayError> {
        Ok(match self {
            BackendKind::RemoteChat {
                endpoint,
                model,
                key_env,
            } => Arc::new(RemoteChat::new(endpoint, model, key_env)),
            BackendKind::RemoteScoring {
                endpoint,
                model,
                key_env,
            } => Arc::new(RemoteScoring::new(endpoint, model, key_env)),
            BackendKind::Scripted { persona } => Arc::new(ScriptedMind::new(*persona)),
            BackendKind::Cassette { path, mode, inner } => match mode {
                CassetteMode::Replay => Arc::new(
                    Replayer::open(path).map_err(|e| GatewayError::Transport(e.to_string()))?,
                ),
                CassetteMode::Record => {
                    let inner = inner
                        .as_ref()
                        .ok_or(GatewayError::Transport("record needs an inner backend".into()))?
                        .build()?;
                    Arc::new(
                        Recorder::create(path, inner)
                            .map_err(|e| GatewayError::Transport(e.to_string()))?,
                    )
                }
            },
        })
    }
}

/// Which stage a gateway call served.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CallKind {
    #[serde(rename = "SlowMind-IR")]
    SlowMindIr,
    #[serde(rename = "SlowMind-CA")]
    SlowMindCa,
    #[serde(rename = "FastMind-MA")]
    FastMindMa,
    #[serde(rename = "FastMind-Chat")]
    FastMindChat,
}

impl fmt::Display for CallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CallKind::SlowMindIr => "SlowMind-IR",
            CallKind::SlowMindCa => "SlowMind-CA",
            CallKind::FastMindMa => "FastMind-MA",
            CallKind::FastMindChat => "FastMind-Chat",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyEvent {
    pub kind: CallKind,
    pub latency_ms: f64,
    /// Milliseconds since the sink was created.
    pub at_ms: f64,
}

/// Collects per-call latencies for the evaluation harness.
#[derive(Clone)]
pub struct LatencySink {
    start: Instant,
    events: Arc<Mutex<Vec<LatencyEvent>>>,
}

impl Default for LatencySink {
    fn default() -> Self {
        LatencySink {
            start: Instant::now(),
            events: Arc::default(),
        }
    }
}

impl LatencySink {
    pub fn events(&self) -> Vec<LatencyEvent> {
        self.events.lock().expect("sink lock").clone()
    }
}

pub fn record_latency(sink: &LatencySink, kind: CallKind, latency_ms: f64) {
    let at_ms = sink.start.elapsed().as_secs_f64() * 1000.0;
    sink.events.lock().expect("sink lock").push(LatencyEvent {
        kind,
        latency_ms,
        at_ms,
    });
}

/// Wraps a closure as a backend; handy for tests and one-off experiments.
pub struct FnBackend<G, S> {
    pub generate_fn: G,
    pub score_fn: S,
}

impl<G, S> Backend for FnBackend<G, S>
where
    G: Fn(&PromptRequest) -> String + Send + Sync,
    S: Fn(&str, &[String]) -> Vec<f64> + Send + Sync,
{
    fn describe(&self) -> String {
        "closure".into()
    }

    fn generate(&self, request: &PromptRequest) -> Result<Generation, GatewayError> {
        Ok(Generation {
            text: (self.generate_fn)(request),
            latency_ms: 0.0,
        })
    }

    fn score_candidates(
        &self,
        prefix: &str,
        candidates: &[String],
        _deadline_ms: u64,
    ) -> Result<CandidateScoreSet, GatewayError> {
        Ok(CandidateScoreSet {
            prefix: prefix.to_string(),
            candidates: candidates.to_vec(),
            log_probs: (self.score_fn)(prefix, candidates),
            latency_ms: 0.0,
        })
    }
}

/// Text after the last line starting with `label`, up to the next blank
/// line. Labels may carry their value on the same line.
pub fn slot<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    let start = prompt.rfind(label)? + label.len();
    let rest = &prompt[start..];
    let end = rest.find("\n\n").unwrap_or(rest.len());
    Some(rest[..end].trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sink_tags_and_order() {
        let sink = LatencySink::default();
        assert!(sink.events().is_empty());
        record_latency(&sink, CallKind::SlowMindIr, 900.0);
        record_latency(&sink, CallKind::FastMindMa, 12.0);
        let ev = sink.events();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].kind.to_string(), "SlowMind-IR");
        assert_eq!(ev[0].latency_ms, 900.0);
        assert_eq!(ev[1].kind.to_string(), "FastMind-MA");
    }

    #[test]
    fn slot_reads_inline_and_block_values() {
        let p = "Current soup orders: Alice Soup, Bob Soup\n\nThe human player's message now:\nChop it\n\nNow";
        assert_eq!(slot(p, "Current soup orders:"), Some("Alice Soup, Bob Soup"));
        assert_eq!(slot(p, "The human player's message now:"), Some("Chop it"));
        assert_eq!(slot(p, "Missing:"), None);
    }

    #[test]
    fn backend_kind_toml() {
        let kind: BackendKind = toml::from_str("kind = \"scripted\"\npersona = \"oracle\"").unwrap();
        assert_eq!(
            kind,
            BackendKind::Scripted {
                persona: Persona::Oracle
            }
        );
    }
}
