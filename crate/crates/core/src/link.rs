//! Link-level maps: CQI quantization, MCS thresholds and spectral
//! efficiencies, the BLER curve, transport block sizing, and the
//! chase-combining SNR gain.
//!
//! Everything here is a pure function of [`LinkTables`], so agents, the
//! simulator and tests all see exactly the same link abstraction.

use serde::{Deserialize, Serialize};

/// Number of MCS levels (indices `0..=27`).
pub const MCS_COUNT: usize = 28;
/// Number of CQI levels (values `0..=15`).
pub const CQI_COUNT: usize = 16;

/// Modulation-and-coding-scheme index in `0..=27`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct McsIndex(u8);

impl McsIndex {
    pub const MIN: McsIndex = McsIndex(0);
    pub const MAX: McsIndex = McsIndex(27);

    /// Panics if `v > 27`.
    pub fn new(v: u8) -> Self {
        assert!(v < MCS_COUNT as u8, "MCS index {v} out of range 0..=27");
        McsIndex(v)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// All MCS indices in increasing order.
    pub fn all() -> impl Iterator<Item = McsIndex> {
        (0..MCS_COUNT as u8).map(McsIndex)
    }
}

impl std::fmt::Display for McsIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Channel quality indicator in `0..=15` (0 = out of range).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CqiValue(u8);

impl CqiValue {
    pub const MIN: CqiValue = CqiValue(0);
    pub const MAX: CqiValue = CqiValue(15);

    /// Panics if `v > 15`.
    pub fn new(v: u8) -> Self {
        assert!(v < CQI_COUNT as u8, "CQI value {v} out of range 0..=15");
        CqiValue(v)
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl std::fmt::Display for CqiValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Static link-level tables shared by the simulator and every agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTables {
    /// SNR (dB) at which CQI 1 begins.
    pub cqi_snr_base: f64,
    /// SNR spacing (dB) between consecutive CQI levels.
    pub cqi_snr_step: f64,
    /// Per-MCS SNR threshold (dB) at which first-transmission BLER is 50%.
    /// Strictly increasing.
    pub mcs_thr: [f64; MCS_COUNT],
    /// Per-MCS spectral efficiency (bits per resource element).
    /// Strictly increasing.
    pub mcs_eff: [f64; MCS_COUNT],
    /// Resource elements available per resource block per TTI.
    pub re_per_rb: u32,
    /// Steepness of the logistic BLER curve (per dB).
    pub bler_steepness: f64,
}

impl LinkTables {
    /// Build tables from linear parameterizations of the threshold and
    /// efficiency curves. Panics if the result would violate monotonicity
    /// or positivity.
    pub fn from_params(
        cqi_snr_base: f64,
        cqi_snr_step: f64,
        thr_base: f64,
        thr_step: f64,
        eff_base: f64,
        eff_step: f64,
        re_per_rb: u32,
        bler_steepness: f64,
    ) -> Self {
        let mut mcs_thr = [0.0; MCS_COUNT];
        let mut mcs_eff = [0.0; MCS_COUNT];
        for m in 0..MCS_COUNT {
            mcs_thr[m] = thr_base + thr_step * m as f64;
            mcs_eff[m] = eff_base + eff_step * m as f64;
        }
        let t = LinkTables {
            cqi_snr_base,
            cqi_snr_step,
            mcs_thr,
            mcs_eff,
            re_per_rb,
            bler_steepness,
        };
        t.validate();
        t
    }

    fn validate(&self) {
        assert!(self.cqi_snr_step > 0.0, "CQI step must be positive");
        assert!(self.re_per_rb > 0, "re_per_rb must be positive");
        assert!(self.bler_steepness > 0.0, "BLER steepness must be positive");
        for m in 1..MCS_COUNT {
            assert!(
                self.mcs_thr[m] > self.mcs_thr[m - 1],
                "mcs_thr must be strictly increasing"
            );
            assert!(
                self.mcs_eff[m] > self.mcs_eff[m - 1],
                "mcs_eff must be strictly increasing"
            );
        }
        assert!(self.mcs_eff[0] > 0.0, "mcs_eff must be positive");
    }
}

impl Default for LinkTables {
    fn default() -> Self {
        LinkTables::from_params(-6.7, 1.9, -6.5, 1.0, 0.15, 0.2, 150, 2.0)
    }
}

/// Quantize an instantaneous SNR to the CQI scale: the largest `c` in
/// `1..=15` whose lower SNR edge does not exceed `snr_db`, or 0 below range.
pub fn snr_to_cqi(snr_db: f64, t: &LinkTables) -> CqiValue {
    if snr_db < t.cqi_snr_base {
        return CqiValue(0);
    }
    // The nudge keeps SNRs that sit exactly on a bin edge in decimal (such as
    // the values cqi_to_snr emits) from quantizing one level low.
    let c = ((snr_db - t.cqi_snr_base) / t.cqi_snr_step + 1e-9).floor() as i64 + 1;
    CqiValue(c.clamp(0, 15) as u8)
}

/// Representative SNR for a CQI level: the lower edge of the level's bin.
/// CQI 0 maps one step below the base (out-of-range placeholder).
pub fn cqi_to_snr(c: CqiValue, t: &LinkTables) -> f64 {
    if c.value() == 0 {
        t.cqi_snr_base - t.cqi_snr_step
    } else {
        t.cqi_snr_base + (c.value() - 1) as f64 * t.cqi_snr_step
    }
}

/// First-transmission block error probability of MCS `m` at effective SNR
/// `eff_snr_db`: a logistic centered on the MCS threshold.
pub fn bler(m: McsIndex, eff_snr_db: f64, t: &LinkTables) -> f64 {
    let margin = eff_snr_db - t.mcs_thr[m.index()];
    1.0 / (1.0 + (t.bler_steepness * margin).exp())
}

/// Transport block size in bits for MCS `m` over `n_rb` resource blocks.
pub fn tbs(m: McsIndex, n_rb: u32, t: &LinkTables) -> u64 {
    let re = (n_rb as f64) * (t.re_per_rb as f64);
    // The tiny nudge keeps efficiencies that are exact in decimal (0.15 -> 1125
    // bits at 50 RB) from flooring one bit low due to binary representation.
    (t.mcs_eff[m.index()] * re + 1e-9).floor() as u64
}

/// Effective SNR after `n_tx` chase-combined transmissions of the same TB.
pub fn harq_effective_snr(snr_db: f64, n_tx: u32) -> f64 {
    assert!(n_tx >= 1, "transmission count starts at 1");
    snr_db + 10.0 * (n_tx as f64).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cqi_quantization_matches_hand_values() {
        let t = LinkTables::default();
        assert_eq!(snr_to_cqi(20.0, &t).value(), 15);
        assert_eq!(snr_to_cqi(-6.7, &t).value(), 1); // exactly at base
        assert_eq!(snr_to_cqi(-6.71, &t).value(), 0);
        assert_eq!(snr_to_cqi(-4.9, &t).value(), 1); // still inside the first bin
        assert_eq!(snr_to_cqi(-4.8, &t).value(), 2); // base + 1 step (lower edge counts)
        assert_eq!(snr_to_cqi(1e6, &t).value(), 15);
        assert_eq!(snr_to_cqi(-1e6, &t).value(), 0);
    }

    #[test]
    fn cqi_to_snr_matches_hand_values() {
        let t = LinkTables::default();
        assert!((cqi_to_snr(CqiValue::new(15), &t) - 19.9).abs() < 1e-12);
        assert!((cqi_to_snr(CqiValue::new(1), &t) - (-6.7)).abs() < 1e-12);
        assert!((cqi_to_snr(CqiValue::new(0), &t) - (-8.6)).abs() < 1e-12);
    }

    #[test]
    fn cqi_round_trip_is_identity_on_bin_edges() {
        let t = LinkTables::default();
        for c in 1..=15u8 {
            let c = CqiValue::new(c);
            assert_eq!(snr_to_cqi(cqi_to_snr(c, &t), &t), c);
        }
    }

    #[test]
    fn bler_matches_logistic_hand_values() {
        let t = LinkTables::default();
        // At threshold: exactly one half.
        let m0 = McsIndex::new(0);
        assert!((bler(m0, t.mcs_thr[0], &t) - 0.5).abs() < 1e-15);
        // +2 dB margin with steepness 2: 1/(1+e^4).
        let expect = 1.0 / (1.0 + 4.0f64.exp());
        assert!((bler(m0, t.mcs_thr[0] + 2.0, &t) - expect).abs() < 1e-15);
        assert!((bler(m0, t.mcs_thr[0] + 2.0, &t) - 0.01798620996209156).abs() < 1e-12);
        // -2 dB margin is the mirror image.
        assert!((bler(m0, t.mcs_thr[0] - 2.0, &t) - (1.0 - expect)).abs() < 1e-15);
    }

    #[test]
    fn tbs_matches_hand_values() {
        let t = LinkTables::default();
        assert_eq!(tbs(McsIndex::new(0), 50, &t), 1125);
        assert_eq!(tbs(McsIndex::new(26), 50, &t), 40125);
        assert_eq!(tbs(McsIndex::new(27), 50, &t), 41625);
    }

    #[test]
    fn harq_gain_is_log_combining() {
        assert!((harq_effective_snr(3.0, 2) - 6.010299956639812).abs() < 1e-12);
        assert!((harq_effective_snr(0.0, 4) - 6.020599913279624).abs() < 1e-12);
        assert_eq!(harq_effective_snr(5.5, 1), 5.5);
        // Strictly increasing in n_tx.
        for n in 1..8 {
            assert!(harq_effective_snr(0.0, n + 1) > harq_effective_snr(0.0, n));
        }
    }

    #[test]
    fn default_tables_are_monotone() {
        let t = LinkTables::default();
        for m in 1..MCS_COUNT {
            assert!(t.mcs_thr[m] > t.mcs_thr[m - 1]);
            assert!(t.mcs_eff[m] > t.mcs_eff[m - 1]);
        }
    }

    proptest! {
        #[test]
        fn snr_to_cqi_is_monotone(a in -30.0f64..40.0, b in -30.0f64..40.0) {
            let t = LinkTables::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(snr_to_cqi(lo, &t) <= snr_to_cqi(hi, &t));
        }

        #[test]
        fn bler_stays_in_unit_interval(m in 0u8..28, snr in -60.0f64..60.0) {
            let t = LinkTables::default();
            let p = bler(McsIndex::new(m), snr, &t);
            prop_assert!((0.0..=1.0).contains(&p));
            // Strictly interior away from f64 saturation of the logistic.
            let margin = snr - t.mcs_thr[m as usize];
            if margin.abs() < 15.0 {
                prop_assert!(p > 0.0 && p < 1.0);
            }
        }

        #[test]
        fn bler_decreases_with_snr_and_increases_with_mcs(
            m in 0u8..27, snr in -40.0f64..40.0, d in 0.001f64..10.0
        ) {
            let t = LinkTables::default();
            let m = McsIndex::new(m);
            let lo = bler(m, snr + d, &t);
            let hi = bler(m, snr, &t);
            prop_assert!(lo <= hi);
            // Strict only when the curve is not numerically saturated.
            if hi < 1.0 - 1e-12 && lo > 1e-12 {
                prop_assert!(lo < hi);
            }
            prop_assert!(bler(McsIndex::new(m.value() + 1), snr, &t) >= bler(m, snr, &t));
        }

        #[test]
        fn tbs_increases_with_mcs(m in 0u8..27) {
            let t = LinkTables::default();
            prop_assert!(tbs(McsIndex::new(m + 1), 50, &t) > tbs(McsIndex::new(m), 50, &t));
        }

        #[test]
        fn tbs_scales_with_bandwidth(m in 0u8..28, rb in 1u32..200) {
            let t = LinkTables::default();
            let m = McsIndex::new(m);
            prop_assert!(tbs(m, rb + 1, &t) >= tbs(m, rb, &t));
        }
    }
}
