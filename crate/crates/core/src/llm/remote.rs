//! HTTP backends for OpenAI-compatible endpoints.
//!
//! Chat generation uses `/chat/completions`. Scoring uses `/completions`
//! with `echo` and per-token `logprobs`; endpoints without those fields are
//! refused rather than emulated.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{Backend, CandidateScoreSet, Generation, GatewayError, PromptRequest};

fn api_key(var: &str) -> Result<String, GatewayError> {
    if var.is_empty() {
        return Ok(String::new());
    }
    std::env::var(var).map_err(|_| GatewayError::Auth(var.to_string()))
}

fn post(url: &str, key: &str, body: &Value, deadline_ms: u64) -> Result<Value, GatewayError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(deadline_ms.max(1))))
        .build()
        .into();
    let mut req = agent.post(url).header("Content-Type", "application/json");
    if !key.is_empty() {
        req = req.header("Authorization", &format!("Bearer {key}"));
    }
    let mut resp = req.send_json(body).map_err(|e| match e {
        ureq::Error::Timeout(_) => GatewayError::Timeout {
            after_ms: deadline_ms,
        },
        ureq::Error::StatusCode(401) | ureq::Error::StatusCode(403) => {
            GatewayError::Auth("rejected by server".into())
        }
        other => GatewayError::Transport(other.to_string()),
    })?;
    resp.body_mut()
        .read_json::<Value>()
        .map_err(|e| GatewayError::Transport(e.to_string()))
}

fn endpoint(base: &str, path: &str) -> String {
    format!("{}/{path}", base.trim_end_matches('/'))
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

pub struct RemoteChat {
    pub endpoint: String,
    pub model: String,
    pub key_env: String,
}

impl RemoteChat {
    pub fn new(endpoint: &str, model: &str, key_env: &str) -> Self {
        RemoteChat {
            endpoint: endpoint.into(),
            model: model.into(),
            key_env: key_env.into(),
        }
    }
}

impl Backend for RemoteChat {
    fn describe(&self) -> String {
        format!("chat:{}@{}", self.model, self.endpoint)
    }

    fn generate(&self, request: &PromptRequest) -> Result<Generation, GatewayError> {
        let key = api_key(&self.key_env)?;
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.text}],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        let t = Instant::now();
        let v = post(&endpoint(&self.endpoint, "chat/completions"), &key, &body, request.deadline_ms)?;
        let text = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| GatewayError::Transport("no message content".into()))?;
        Ok(Generation {
            text: text.trim().to_string(),
            latency_ms: elapsed_ms(t),
        })
    }

    fn score_candidates(
        &self,
        _prefix: &str,
        _candidates: &[String],
        _deadline_ms: u64,
    ) -> Result<CandidateScoreSet, GatewayError> {
        Err(GatewayError::Unsupported("candidate scoring"))
    }
}

pub struct RemoteScoring {
    pub endpoint: String,
    pub model: String,
    pub key_env: String,
}

impl RemoteScoring {
    pub fn new(endpoint: &str, model: &str, key_env: &str) -> Self {
        RemoteScoring {
            endpoint: endpoint.into(),
            model: model.into(),
            key_env: key_env.into(),
        }
    }
}

/// Sums the log-probabilities of tokens that start at or after `from`.
fn continuation_logprob(choice: &Value, from: usize) -> Result<f64, GatewayError> {
    let lp = &choice["logprobs"];
    let (Some(offsets), Some(values)) = (lp["text_offset"].as_array(), lp["token_logprobs"].as_array())
    else {
        return Err(GatewayError::Unsupported("token log-probabilities"));
    };
    let mut total = 0.0;
    for (off, val) in offsets.iter().zip(values) {
        if off.as_u64().unwrap_or(0) as usize >= from {
            total += val.as_f64().unwrap_or(0.0);
        }
    }
    Ok(total.min(0.0))
}

impl Backend for RemoteScoring {
    fn describe(&self) -> String {
        format!("scoring:{}@{}", self.model, self.endpoint)
    }

    fn generate(&self, request: &PromptRequest) -> Result<Generation, GatewayError> {
        let key = api_key(&self.key_env)?;
        let body = json!({
            "model": self.model,
            "prompt": request.text,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        let t = Instant::now();
        let v = post(&endpoint(&self.endpoint, "completions"), &key, &body, request.deadline_ms)?;
        let text = v["choices"][0]["text"]
            .as_str()
            .ok_or_else(|| GatewayError::Transport("no completion text".into()))?;
        Ok(Generation {
            text: text.trim().to_string(),
            latency_ms: elapsed_ms(t),
        })
    }

    fn score_candidates(
        &self,
        prefix: &str,
        candidates: &[String],
        deadline_ms: u64,
    ) -> Result<CandidateScoreSet, GatewayError> {
        let key = api_key(&self.key_env)?;
        let prompts: Vec<String> = candidates.iter().map(|c| format!("{prefix}{c}")).collect();
        let body = json!({
            "model": self.model,
            "prompt": prompts,
            "max_tokens": 0,
            "echo": true,
            "logprobs": 0,
        });
        let t = Instant::now();
        let v = post(&endpoint(&self.endpoint, "completions"), &key, &body, deadline_ms)?;
        let choices = v["choices"]
            .as_array()
            .ok_or_else(|| GatewayError::Transport("no choices".into()))?;
        if choices.len() != candidates.len() {
            return Err(GatewayError::Transport(format!(
                "{} choices for {} candidates",
                choices.len(),
                candidates.len()
            )));
        }
        let mut log_probs = vec![0.0; candidates.len()];
        for choice in choices {
            let i = choice["index"].as_u64().unwrap_or(0) as usize;
            let slot = log_probs
                .get_mut(i)
                .ok_or_else(|| GatewayError::Transport("choice index out of range".into()))?;
            *slot = continuation_logprob(choice, prefix.len())?;
        }
        Ok(CandidateScoreSet {
            prefix: prefix.to_string(),
            candidates: candidates.to_vec(),
            log_probs,
            latency_ms: elapsed_ms(t),
        })
    }
}
