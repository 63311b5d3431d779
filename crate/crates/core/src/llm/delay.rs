//! Fixed extra latency on top of any backend.

use std::thread;
use std::time::Duration;

use super::{Backend, CandidateScoreSet, Generation, GatewayError, PromptRequest, SharedBackend};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelayMode {
    /// Only reported: the simulated dispatcher schedules results by it.
    Modeled,
    /// The calling thread sleeps for real.
    Sleep,
}

pub struct Delayed {
    pub inner: SharedBackend,
    pub generate_ms: f64,
    pub score_ms: f64,
    pub mode: DelayMode,
}

impl Delayed {
    pub fn uniform(inner: SharedBackend, delay_ms: f64, mode: DelayMode) -> Self {
        Delayed {
            inner,
            generate_ms: delay_ms,
            score_ms: delay_ms,
            mode,
        }
    }

    /// Total latency, or a timeout once the caller's deadline is exceeded.
    fn wait(&self, base_ms: f64, extra_ms: f64, deadline_ms: u64) -> Result<f64, GatewayError> {
        let total = base_ms + extra_ms;
        let over = total > deadline_ms as f64;
        if self.mode == DelayMode::Sleep {
            let ms = if over { deadline_ms as f64 - base_ms } else { extra_ms };
            thread::sleep(Duration::from_secs_f64(ms.max(0.0) / 1000.0));
        }
        if over {
            Err(GatewayError::Timeout {
                after_ms: deadline_ms,
            })
        } else {
            Ok(total)
        }
    }
}

impl Backend for Delayed {
    fn describe(&self) -> String {
        format!("delayed({}, {} ms)", self.inner.describe(), self.generate_ms)
    }

    fn generate(&self, request: &PromptRequest) -> Result<Generation, GatewayError> {
        let mut out = self.inner.generate(request)?;
        out.latency_ms = self.wait(out.latency_ms, self.generate_ms, request.deadline_ms)?;
        Ok(out)
    }

    fn score_candidates(
        &self,
        prefix: &str,
        candidates: &[String],
        deadline_ms: u64,
    ) -> Result<CandidateScoreSet, GatewayError> {
        let mut out = self.inner.score_candidates(prefix, candidates, deadline_ms)?;
        out.latency_ms = self.wait(out.latency_ms, self.score_ms, deadline_ms)?;
        Ok(out)
    }
}
