//! Phase-tagged read counters for datasets.
//!
//! Source-distribution-modelling adaptation promises to train without the
//! source dataset; the counters make that claim checkable instead of
//! asserted. Every batch read bumps the counter for the active phase, and
//! the run record serializes the final snapshot.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Monotone per-phase read counters, shareable across threads.
#[derive(Debug, Default)]
pub struct AccessAudit {
    total: AtomicU64,
    per_phase: Mutex<BTreeMap<String, u64>>,
}

impl AccessAudit {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record `n` sample reads under `phase`.
    pub fn record(&self, phase: &str, n: u64) {
        if n == 0 {
            return;
        }
        self.total.fetch_add(n, Ordering::Relaxed);
        let mut map = self.per_phase.lock().unwrap();
        *map.entry(phase.to_string()).or_insert(0) += n;
    }

    pub fn count(&self, phase: &str) -> u64 {
        self.per_phase.lock().unwrap().get(phase).copied().unwrap_or(0)
    }

    /// Sum of reads over phases matching `prefix` (e.g. "adapt/").
    pub fn count_prefix(&self, prefix: &str) -> u64 {
        self.per_phase
            .lock()
            .unwrap()
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(_, v)| v)
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.total.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> BTreeMap<String, u64> {
        self.per_phase.lock().unwrap().clone()
    }
}
