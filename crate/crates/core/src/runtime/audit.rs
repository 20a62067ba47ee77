//! Audit trail of the trainer/inference runtime: every sync, swap,
//! fallback, and training event with its TTI stamp, written as JSON lines.

use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::sim::Tti;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AuditEvent {
    /// A completed optimization step.
    Train { t: Tti, loss: f64 },
    /// Training tick skipped: replay not yet at batch size.
    TrainSkipped { t: Tti, stored: usize },
    /// Training step rejected (non-finite loss); parameters untouched.
    TrainFailed { t: Tti, reason: String },
    /// Test hook: the training step was replaced by a forced stall.
    TrainStalled { t: Tti, millis: u64 },
    /// Target-net sync + parameter publish.
    Sync { t: Tti, version: u64 },
    /// Inference side swapped in a published parameter set.
    ParamApplied { t: Tti, version: u64 },
    /// Published parameters rejected before the swap.
    ParamDropped { t: Tti, version: u64, reason: String },
    /// Decision missed its deadline; previous MCS was transmitted.
    Fallback { t: Tti },
    /// A decision arrived after the deadline and was discarded.
    LateDecision { t: Tti },
    /// Delay-metric sample (max |Q_decision - Q_main| over the probe set).
    DeltaProbe { t: Tti, delta: f64, at_sync: bool },
}

impl AuditEvent {
    pub fn tti(&self) -> Tti {
        match self {
            AuditEvent::Train { t, .. }
            | AuditEvent::TrainSkipped { t, .. }
            | AuditEvent::TrainFailed { t, .. }
            | AuditEvent::TrainStalled { t, .. }
            | AuditEvent::Sync { t, .. }
            | AuditEvent::ParamApplied { t, .. }
            | AuditEvent::ParamDropped { t, .. }
            | AuditEvent::Fallback { t }
            | AuditEvent::LateDecision { t }
            | AuditEvent::DeltaProbe { t, .. } => *t,
        }
    }
}

/// Write one JSON object per line.
pub fn write_audit_jsonl(path: &Path, events: &[AuditEvent]) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    for ev in events {
        serde_json::to_writer(&mut w, ev)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Wall-clock decision latency bookkeeping for the real-time mode.
#[derive(Debug, Clone)]
pub struct DeadlineStats {
    pub deadline: Duration,
    /// One sample per decision, microseconds, fallback decisions included.
    pub latencies_us: Vec<u64>,
    pub fallbacks: u64,
    pub decisions: u64,
}

impl DeadlineStats {
    pub fn new(deadline: Duration) -> Self {
        DeadlineStats {
            deadline,
            latencies_us: Vec::new(),
            fallbacks: 0,
            decisions: 0,
        }
    }

    pub fn record(&mut self, latency: Duration, fallback: bool) {
        self.latencies_us.push(latency.as_micros() as u64);
        self.decisions += 1;
        if fallback {
            self.fallbacks += 1;
        }
    }

    pub fn fallback_rate(&self) -> f64 {
        if self.decisions == 0 {
            0.0
        } else {
            self.fallbacks as f64 / self.decisions as f64
        }
    }

    /// Fraction of decisions answered within `limit`.
    pub fn fraction_within(&self, limit: Duration) -> f64 {
        if self.latencies_us.is_empty() {
            return 1.0;
        }
        let lim = limit.as_micros() as u64;
        let ok = self.latencies_us.iter().filter(|&&l| l <= lim).count();
        ok as f64 / self.latencies_us.len() as f64
    }
}
