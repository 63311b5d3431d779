//! Record and replay of gateway calls as line-delimited JSON.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Backend, CandidateScoreSet, Generation, GatewayError, PromptRequest, SharedBackend};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CassetteRecord {
    pub request_hash: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<String>,
    pub response: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_probs: Vec<f64>,
    pub latency_ms: f64,
}

fn hash_request(kind: &str, prompt: &str, candidates: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    for c in candidates {
        h.update([0]);
        h.update(c.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Passes calls through to `inner` and appends one record per call.
pub struct Recorder {
    inner: SharedBackend,
    file: Mutex<File>,
}

impl Recorder {
    pub fn create(path: &Path, inner: SharedBackend) -> io::Result<Recorder> {
        Ok(Recorder {
            inner,
            file: Mutex::new(File::create(path)?),
        })
    }

    fn append(&self, record: &CassetteRecord) -> Result<(), GatewayError> {
        let line = serde_json::to_string(record).expect("record serializes");
        let mut f = self.file.lock().expect("cassette lock");
        writeln!(f, "{line}").map_err(|e| GatewayError::Transport(e.to_string()))
    }
}

impl Backend for Recorder {
    fn describe(&self) -> String {
        format!("record({})", self.inner.describe())
    }

    fn generate(&self, request: &PromptRequest) -> Result<Generation, GatewayError> {
        let out = self.inner.generate(request)?;
        self.append(&CassetteRecord {
            request_hash: hash_request("generate", &request.text, &[]),
            prompt: request.text.clone(),
            candidates: Vec::new(),
            response: out.text.clone(),
            log_probs: Vec::new(),
            latency_ms: out.latency_ms,
        })?;
        Ok(out)
    }

    fn score_candidates(
        &self,
        prefix: &str,
        candidates: &[String],
        deadline_ms: u64,
    ) -> Result<CandidateScoreSet, GatewayError> {
        let out = self.inner.score_candidates(prefix, candidates, deadline_ms)?;
        self.append(&CassetteRecord {
            request_hash: hash_request("score", prefix, candidates),
            prompt: prefix.to_string(),
            candidates: candidates.to_vec(),
            response: String::new(),
            log_probs: out.log_probs.clone(),
            latency_ms: out.latency_ms,
        })?;
        Ok(out)
    }
}

/// Serves recorded answers. Repeated identical requests are answered in
/// recording order; once exhausted the last answer repeats.
pub struct Replayer {
    records: Mutex<HashMap<String, VecDeque<CassetteRecord>>>,
}

impl Replayer {
    pub fn open(path: &Path) -> io::Result<Replayer> {
        let reader = BufReader::new(File::open(path)?);
        let mut records: HashMap<String, VecDeque<CassetteRecord>> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CassetteRecord = serde_json::from_str(&line).map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
            })?;
            records.entry(rec.request_hash.clone()).or_default().push_back(rec);
        }
        Ok(Replayer {
            records: Mutex::new(records),
        })
    }

    fn take(&self, hash: &str) -> Result<CassetteRecord, GatewayError> {
        let mut map = self.records.lock().expect("cassette lock");
        let queue = map
            .get_mut(hash)
            .ok_or_else(|| GatewayError::Transport(format!("cassette miss {}", &hash[..12])))?;
        Ok(if queue.len() > 1 {
            queue.pop_front().expect("non-empty")
        } else {
            queue.front().expect("non-empty").clone()
        })
    }
}

impl Backend for Replayer {
    fn describe(&self) -> String {
        "replay".into()
    }

    fn generate(&self, request: &PromptRequest) -> Result<Generation, GatewayError> {
        let rec = self.take(&hash_request("generate", &request.text, &[]))?;
        Ok(Generation {
            text: rec.response,
            latency_ms: rec.latency_ms,
        })
    }

    fn score_candidates(
        &self,
        prefix: &str,
        candidates: &[String],
        _deadline_ms: u64,
    ) -> Result<CandidateScoreSet, GatewayError> {
        let rec = self.take(&hash_request("score", prefix, candidates))?;
        Ok(CandidateScoreSet {
            prefix: prefix.to_string(),
            candidates: candidates.to_vec(),
            log_probs: rec.log_probs,
            latency_ms: rec.latency_ms,
        })
    }
}
