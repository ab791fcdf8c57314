use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use vmd_core::model::Decision;

use crate::protocol::PROTOCOL_VERSION;

/// Lifetime counters plus the processing-time reservoir. Counters are
/// plain atomics; only the latency samples take a lock, and only to
/// push one u64.
#[derive(Debug)]
pub struct StatsCollector {
    started: Instant,
    sessions_total: AtomicU64,
    sessions_active: AtomicU64,
    decisions_vm: AtomicU64,
    decisions_nvm: AtomicU64,
    failures: AtomicU64,
    processing_us: Mutex<Vec<u64>>,
}

impl StatsCollector {
    pub fn new() -> Self {
        Self {
            started: Instant::now(),
            sessions_total: AtomicU64::new(0),
            sessions_active: AtomicU64::new(0),
            decisions_vm: AtomicU64::new(0),
            decisions_nvm: AtomicU64::new(0),
            failures: AtomicU64::new(0),
            processing_us: Mutex::new(Vec::new()),
        }
    }

    /// Admits one session unless `max` are already active. On success
    /// the session counts toward both active and total.
    pub fn try_admit(&self, max: usize) -> bool {
        let admitted = self
            .sessions_active
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |active| {
                (active < max as u64).then_some(active + 1)
            })
            .is_ok();
        if admitted {
            self.sessions_total.fetch_add(1, Ordering::Relaxed);
        }
        admitted
    }

    pub fn session_closed(&self) {
        self.sessions_active.fetch_sub(1, Ordering::AcqRel);
    }

    pub fn record_decision(&self, decision: Decision, processing_us: u64) {
        match decision {
            Decision::Vm => self.decisions_vm.fetch_add(1, Ordering::Relaxed),
            Decision::Nvm => self.decisions_nvm.fetch_add(1, Ordering::Relaxed),
        };
        self.processing_us.lock().push(processing_us);
    }

    pub fn record_failure(&self) {
        self.failures.fetch_add(1, Ordering::Relaxed);
    }

    pub fn report(&self) -> LoadReport {
        let samples = {
            let mut s = self.processing_us.lock().clone();
            s.sort_unstable();
            s
        };
        let decisions_vm = self.decisions_vm.load(Ordering::Relaxed);
        let decisions_nvm = self.decisions_nvm.load(Ordering::Relaxed);
        let uptime_s = self.started.elapsed().as_secs_f64();
        let decisions = decisions_vm + decisions_nvm;
        LoadReport {
            v: PROTOCOL_VERSION,
            sessions_total: self.sessions_total.load(Ordering::Relaxed),
            sessions_active: self.sessions_active.load(Ordering::Acquire),
            decisions_vm,
            decisions_nvm,
            failures: self.failures.load(Ordering::Relaxed),
            p50_processing_ms: percentile_ms(&samples, 0.50),
            p95_processing_ms: percentile_ms(&samples, 0.95),
            uptime_s,
            throughput_per_s: if decisions == 0 {
                0.0
            } else {
                decisions as f64 / uptime_s
            },
        }
    }
}

impl Default for StatsCollector {
    fn default() -> Self {
        Self::new()
    }
}

/// Nearest-rank percentile of sorted microsecond samples, reported in
/// milliseconds. Empty input reports 0.
fn percentile_ms(sorted_us: &[u64], q: f64) -> f64 {
    if sorted_us.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted_us.len() as f64).ceil() as usize;
    let idx = rank.clamp(1, sorted_us.len()) - 1;
    sorted_us[idx] as f64 / 1000.0
}

/// The `/stats` document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadReport {
    pub v: u32,
    pub sessions_total: u64,
    pub sessions_active: u64,
    pub decisions_vm: u64,
    pub decisions_nvm: u64,
    pub failures: u64,
    pub p50_processing_ms: f64,
    pub p95_processing_ms: f64,
    pub uptime_s: f64,
    pub throughput_per_s: f64,
}

#[cfg(test)]
mod tests;
