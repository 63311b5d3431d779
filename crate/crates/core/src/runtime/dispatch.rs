//! Where jobs run. The simulated dispatcher answers on a virtual clock; the
//! threaded one runs every job on its own thread against real time.

use std::cmp::Ordering;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use super::agent::{Job, Outcome};
use super::events::Mind;
use crate::llm::SharedBackend;

/// The two model endpoints an agent talks to.
#[derive(Clone)]
pub struct Minds {
    pub slow: SharedBackend,
    pub fast: SharedBackend,
}

impl Minds {
    pub fn same(backend: SharedBackend) -> Minds {
        Minds {
            slow: backend.clone(),
            fast: backend,
        }
    }

    pub fn for_mind(&self, mind: Mind) -> &SharedBackend {
        match mind {
            Mind::Slow => &self.slow,
            Mind::Fast => &self.fast,
        }
    }
}

#[derive(Debug)]
pub struct Delivery {
    pub call_id: u64,
    pub outcome: Outcome,
    /// Wall milliseconds at which the result is available.
    pub at_ms: f64,
    seq: u64,
}

/// Runs each job at submission and releases its result once the reported
/// latency (plus a fixed overhead) has passed on the virtual clock.
pub struct SimDispatcher {
    minds: Minds,
    deadline_ms: u64,
    pub overhead_ms: f64,
    pending: Vec<Delivery>,
    seq: u64,
}

impl SimDispatcher {
    pub fn new(minds: Minds, deadline_ms: u64) -> Self {
        SimDispatcher {
            minds,
            deadline_ms,
            overhead_ms: 1.0,
            pending: Vec::new(),
            seq: 0,
        }
    }

    pub fn submit(&mut self, job: Job, now_ms: f64) {
        let backend = self.minds.for_mind(job.mind).clone();
        let outcome = job.task.run(backend.as_ref(), self.deadline_ms);
        let at_ms = now_ms + outcome.latency_ms() + self.overhead_ms;
        self.seq += 1;
        self.pending.push(Delivery {
            call_id: job.call_id,
            outcome,
            at_ms,
            seq: self.seq,
        });
    }

    /// Earliest result due at or before `until_ms`.
    pub fn pop_due(&mut self, until_ms: f64) -> Option<Delivery> {
        let idx = self
            .pending
            .iter()
            .enumerate()
            .filter(|(_, d)| d.at_ms <= until_ms)
            .min_by(|(_, a), (_, b)| {
                a.at_ms
                    .partial_cmp(&b.at_ms)
                    .unwrap_or(Ordering::Equal)
                    .then(a.seq.cmp(&b.seq))
            })
            .map(|(i, _)| i)?;
        Some(self.pending.swap_remove(idx))
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}

/// Runs each job on a fresh thread; results arrive on a channel.
pub struct ThreadDispatcher {
    minds: Minds,
    deadline_ms: u64,
    start: Instant,
    tx: Sender<Delivery>,
    rx: Receiver<Delivery>,
}

impl ThreadDispatcher {
    pub fn new(minds: Minds, deadline_ms: u64, start: Instant) -> Self {
        let (tx, rx) = mpsc::channel();
        ThreadDispatcher {
            minds,
            deadline_ms,
            start,
            tx,
            rx,
        }
    }

    pub fn now_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1000.0
    }

    pub fn submit(&self, job: Job) {
        let backend = self.minds.for_mind(job.mind).clone();
        let tx = self.tx.clone();
        let deadline = self.deadline_ms;
        let start = self.start;
        thread::spawn(move || {
            let outcome = job.task.run(backend.as_ref(), deadline);
            let at_ms = start.elapsed().as_secs_f64() * 1000.0;
            // The receiver may be gone once the game ended.
            let _ = tx.send(Delivery {
                call_id: job.call_id,
                outcome,
                at_ms,
                seq: 0,
            });
        });
    }

    /// Waits for a result until `deadline`; None once it passes.
    pub fn recv_until(&self, deadline: Instant) -> Option<Delivery> {
        let now = Instant::now();
        if now >= deadline {
            return self.rx.try_recv().ok();
        }
        match self.rx.recv_timeout(deadline - now) {
            Ok(d) => Some(d),
            Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => None,
        }
    }
}

/// Sleeps until `deadline`, finishing with a short spin for precision.
pub fn sleep_until(deadline: Instant) {
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        let left = deadline - now;
        if left > Duration::from_millis(2) {
            thread::sleep(left - Duration::from_millis(1));
        } else {
            std::hint::spin_loop();
        }
    }
}
