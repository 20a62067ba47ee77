//! Inner-loop link adaptation: direct CQI -> MCS table lookup.

use crate::link::{cqi_to_snr, CqiValue, LinkTables, McsIndex};
use crate::sim::{CqiReport, Tti};

use super::{LinkAdapter, McsDecision};

/// Largest MCS whose threshold the CQI-implied SNR clears; MCS 0 if none.
pub fn illa_select(c: CqiValue, tables: &LinkTables) -> McsIndex {
    mcs_for_snr(cqi_to_snr(c, tables), tables)
}

/// Threshold scan shared with the outer loop.
pub(crate) fn mcs_for_snr(snr_db: f64, tables: &LinkTables) -> McsIndex {
    let mut best = McsIndex::new(0);
    for m in McsIndex::all() {
        if tables.mcs_thr[m.index()] <= snr_db {
            best = m;
        } else {
            break;
        }
    }
    best
}

/// Stateless CQI-following agent.
#[derive(Debug, Clone)]
pub struct IllaAgent {
    tables: LinkTables,
    current_cqi: CqiValue,
}

impl IllaAgent {
    pub fn new(tables: LinkTables, initial_cqi: CqiValue) -> Self {
        IllaAgent {
            tables,
            current_cqi: initial_cqi,
        }
    }
}

impl LinkAdapter for IllaAgent {
    fn on_cqi(&mut self, report: &CqiReport) {
        self.current_cqi = report.value;
    }

    fn decide(&mut self, _t: Tti) -> McsDecision {
        illa_select(self.current_cqi, &self.tables).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_matches_hand_values() {
        let t = LinkTables::default();
        assert_eq!(illa_select(CqiValue::new(0), &t).value(), 0);
        // CQI 15 -> 19.9 dB; thresholds -6.5 + m: largest m with m <= 26.4.
        assert_eq!(illa_select(CqiValue::new(15), &t).value(), 26);
    }

    #[test]
    fn select_is_monotone_in_cqi() {
        let t = LinkTables::default();
        for c in 0..15u8 {
            assert!(illa_select(CqiValue::new(c + 1), &t) >= illa_select(CqiValue::new(c), &t));
        }
    }

    #[test]
    fn select_stays_in_range() {
        // Even with an extreme CQI mapping the scan clamps to the table.
        let t = LinkTables::from_params(-30.0, 5.0, -6.5, 1.0, 0.15, 0.2, 150, 2.0);
        for c in 0..16u8 {
            let m = illa_select(CqiValue::new(c), &t);
            assert!(m.value() <= 27);
        }
    }
}
