//! Link-adaptation agents: the [`LinkAdapter`] contract plus the baseline
//! policies (fixed MCS, genie oracle, inner-loop, outer-loop, Thompson
//! sampling). The deep-RL agent lives in [`crate::runtime`].

mod bayes;
mod illa;
mod olla;

pub use bayes::{bayes_select, bayes_select_with, bayes_update, BayesAgent, BayesState};
pub use illa::{illa_select, IllaAgent};
pub use olla::{olla_select, olla_update, OllaAgent, OllaState};

use crate::link::{bler, tbs, LinkTables, McsIndex};
use crate::sim::{CqiReport, FeedbackEvent, Tti};

/// Outcome of one decision request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McsDecision {
    pub mcs: McsIndex,
    /// True when the agent could not produce a fresh decision in time and
    /// fell back to its previous MCS.
    pub fallback: bool,
}

impl From<McsIndex> for McsDecision {
    fn from(mcs: McsIndex) -> Self {
        McsDecision {
            mcs,
            fallback: false,
        }
    }
}

/// The MCS-selection contract between the simulator and an agent.
///
/// The simulator calls, per TTI and in this order: delivery hooks
/// (`on_feedback`, `on_cqi`) for anything due at `t`, then `decide(t)`, then
/// `end_of_tti(t)` after the transmission has been recorded. A decision
/// requested at `t` takes effect `d_tx` TTIs later (further gated by
/// `d_decision`); agents never see ground-truth SNR, only the delayed
/// observations the hooks deliver.
pub trait LinkAdapter {
    fn on_cqi(&mut self, _report: &CqiReport) {}
    fn on_feedback(&mut self, _ev: &FeedbackEvent) {}
    /// Must always return a valid MCS (totality is part of the contract).
    fn decide(&mut self, t: Tti) -> McsDecision;
    /// Called once per TTI after the transmission; agents that train on a
    /// TTI clock hook in here.
    fn end_of_tti(&mut self, _t: Tti) {}
}

/// Always transmits the same MCS.
#[derive(Debug, Clone)]
pub struct FixedMcs(pub McsIndex);

impl LinkAdapter for FixedMcs {
    fn decide(&mut self, _t: Tti) -> McsDecision {
        self.0.into()
    }
}

/// Genie oracle: reads the ground-truth SNR of the TTI its decision will be
/// applied at and picks the MCS maximizing expected first-transmission
/// throughput, `argmax_m (1 - bler(m, snr)) * tbs(m, n_rb)`.
///
/// This deliberately breaks the information constraints every real agent
/// lives under; it exists as a per-trace upper reference.
#[derive(Debug, Clone)]
pub struct OracleAgent {
    snr: Vec<f64>,
    /// TTIs between the decision request and its application
    /// (`max(d_tx, d_decision)`).
    lookahead: u64,
    tables: LinkTables,
    n_rb: u32,
}

impl OracleAgent {
    pub fn new(snr: Vec<f64>, lookahead: u64, tables: LinkTables, n_rb: u32) -> Self {
        assert!(!snr.is_empty());
        OracleAgent {
            snr,
            lookahead,
            tables,
            n_rb,
        }
    }

    /// Best expected-throughput MCS at a given ground-truth SNR.
    pub fn best_mcs(snr_db: f64, tables: &LinkTables, n_rb: u32) -> McsIndex {
        let mut best = McsIndex::new(0);
        let mut best_score = f64::NEG_INFINITY;
        for m in McsIndex::all() {
            let score = (1.0 - bler(m, snr_db, tables)) * tbs(m, n_rb, tables) as f64;
            if score > best_score {
                best_score = score;
                best = m;
            }
        }
        best
    }
}

impl LinkAdapter for OracleAgent {
    fn decide(&mut self, t: Tti) -> McsDecision {
        let idx = ((t + self.lookahead) as usize).min(self.snr.len() - 1);
        Self::best_mcs(self.snr[idx], &self.tables, self.n_rb).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkTables;

    #[test]
    fn fixed_agent_is_constant() {
        let mut a = FixedMcs(McsIndex::new(9));
        for t in 0..10 {
            let d = a.decide(t);
            assert_eq!(d.mcs.value(), 9);
            assert!(!d.fallback);
        }
    }

    #[test]
    fn oracle_peeks_at_application_tti() {
        let t = LinkTables::default();
        // SNR jumps at TTI 4; with lookahead 4 the decision at t=0 must
        // already reflect the jump.
        let mut snr = vec![0.0; 4];
        snr.extend(vec![20.0; 6]);
        let mut a = OracleAgent::new(snr, 4, t.clone(), 50);
        let at_low = OracleAgent::best_mcs(0.0, &t, 50);
        let at_high = OracleAgent::best_mcs(20.0, &t, 50);
        assert!(at_high > at_low);
        assert_eq!(a.decide(0).mcs, at_high);
    }

    #[test]
    fn oracle_best_mcs_balances_rate_and_errors() {
        let t = LinkTables::default();
        // At very high SNR everything succeeds: pick the top MCS.
        assert_eq!(OracleAgent::best_mcs(60.0, &t, 50).value(), 27);
        // At the bottom of the range the safest MCS still wins on expected
        // value over hopeless aggressive ones.
        let m = OracleAgent::best_mcs(-20.0, &t, 50);
        assert!(m.value() <= 2);
    }
}
