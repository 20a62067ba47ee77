//! Outer-loop link adaptation: inner-loop lookup plus an ACK/NACK-driven
//! SNR offset that steers the long-run NACK fraction to a target BLER.

use crate::link::{CqiValue, LinkTables, McsIndex};
use crate::link::cqi_to_snr;
use crate::sim::{CqiReport, FeedbackEvent, Tti};

use super::illa::mcs_for_snr;
use super::{LinkAdapter, McsDecision};

/// Offset-loop state.
///
/// Step sizes are tied together so the offset drift vanishes exactly at the
/// target NACK fraction B: ACKs push the offset up by `delta_up`, NACKs pull
/// it down by `delta_down = delta_up * (1/B - 1)`, and
/// `(1-B)*delta_up = B*delta_down` makes B the unique equilibrium error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct OllaState {
    pub offset_db: f64,
    pub delta_up: f64,
    pub delta_down: f64,
    pub target_bler: f64,
}

impl OllaState {
    pub fn new(delta_up: f64, target_bler: f64) -> Self {
        assert!(delta_up > 0.0, "delta_up must be positive");
        assert!(
            target_bler > 0.0 && target_bler < 1.0,
            "target_bler must be in (0,1)"
        );
        OllaState {
            offset_db: 0.0,
            delta_up,
            delta_down: delta_up * (1.0 / target_bler - 1.0),
            target_bler,
        }
    }
}

impl Default for OllaState {
    fn default() -> Self {
        OllaState::new(0.001, 0.1)
    }
}

/// One feedback update: ACK raises the offset, NACK lowers it.
pub fn olla_update(state: &mut OllaState, ack: bool) {
    if ack {
        state.offset_db += state.delta_up;
    } else {
        state.offset_db -= state.delta_down;
    }
}

/// Largest MCS whose threshold the offset-corrected SNR clears.
pub fn olla_select(c: CqiValue, state: &OllaState, tables: &LinkTables) -> McsIndex {
    mcs_for_snr(cqi_to_snr(c, tables) + state.offset_db, tables)
}

/// Outer-loop agent.
#[derive(Debug, Clone)]
pub struct OllaAgent {
    pub state: OllaState,
    tables: LinkTables,
    current_cqi: CqiValue,
    /// When false, only first-transmission feedback moves the offset.
    update_on_rtx: bool,
}

impl OllaAgent {
    pub fn new(
        tables: LinkTables,
        initial_cqi: CqiValue,
        delta_up: f64,
        target_bler: f64,
        update_on_rtx: bool,
    ) -> Self {
        OllaAgent {
            state: OllaState::new(delta_up, target_bler),
            tables,
            current_cqi: initial_cqi,
            update_on_rtx,
        }
    }
}

impl LinkAdapter for OllaAgent {
    fn on_cqi(&mut self, report: &CqiReport) {
        self.current_cqi = report.value;
    }

    fn on_feedback(&mut self, ev: &FeedbackEvent) {
        if self.update_on_rtx || ev.rtx_count == 1 {
            olla_update(&mut self.state, ev.ack);
        }
    }

    fn decide(&mut self, _t: Tti) -> McsDecision {
        olla_select(self.current_cqi, &self.state, &self.tables).into()
    }
}
