//! Thompson-sampling baseline: per-CQI Beta–Bernoulli posteriors over MCS
//! success, maximizing sampled success probability times TB size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::link::{tbs, CqiValue, LinkTables, McsIndex, CQI_COUNT, MCS_COUNT};
use crate::sim::{CqiReport, FeedbackEvent, Tti};

use super::{LinkAdapter, McsDecision};

/// Per-(CQI, MCS) Beta posterior counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesState {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    pub prior_alpha: f64,
    pub prior_beta: f64,
}

impl BayesState {
    pub fn new(prior_alpha: f64, prior_beta: f64) -> Self {
        assert!(prior_alpha > 0.0 && prior_beta > 0.0, "priors must be positive");
        BayesState {
            alpha: vec![prior_alpha; CQI_COUNT * MCS_COUNT],
            beta: vec![prior_beta; CQI_COUNT * MCS_COUNT],
            prior_alpha,
            prior_beta,
        }
    }

    fn idx(c: CqiValue, m: McsIndex) -> usize {
        c.value() as usize * MCS_COUNT + m.index()
    }

    pub fn counts(&self, c: CqiValue, m: McsIndex) -> (f64, f64) {
        let i = Self::idx(c, m);
        (self.alpha[i], self.beta[i])
    }

    /// Test hook for the examples that pin posterior arithmetic.
    pub fn set_counts(&mut self, c: CqiValue, m: McsIndex, alpha: f64, beta: f64) {
        let i = Self::idx(c, m);
        self.alpha[i] = alpha;
        self.beta[i] = beta;
    }
}

impl Default for BayesState {
    fn default() -> Self {
        BayesState::new(1.0, 1.0)
    }
}

/// Posterior bookkeeping; only first-transmission feedback may be fed here.
pub fn bayes_update(state: &mut BayesState, c_at_tx: CqiValue, m: McsIndex, ack: bool) {
    let i = BayesState::idx(c_at_tx, m);
    if ack {
        state.alpha[i] += 1.0;
    } else {
        state.beta[i] += 1.0;
    }
}

/// Thompson-sampling selection with an injectable draw function
/// (`draw(alpha, beta) -> p̃`); ties break toward the lower MCS.
pub fn bayes_select_with(
    state: &BayesState,
    c: CqiValue,
    n_rb: u32,
    tables: &LinkTables,
    draw: &mut dyn FnMut(f64, f64) -> f64,
) -> McsIndex {
    let mut best = McsIndex::new(0);
    let mut best_score = f64::NEG_INFINITY;
    for m in McsIndex::all() {
        let (a, b) = state.counts(c, m);
        let p = draw(a, b);
        let score = p * tbs(m, n_rb, tables) as f64;
        if score > best_score {
            best_score = score;
            best = m;
        }
    }
    best
}

/// Production selection: p̃ ~ Beta(alpha, beta) per arm.
pub fn bayes_select(
    state: &BayesState,
    c: CqiValue,
    n_rb: u32,
    tables: &LinkTables,
    rng: &mut ChaCha8Rng,
) -> McsIndex {
    bayes_select_with(state, c, n_rb, tables, &mut |a, b| {
        Beta::new(a, b).expect("positive Beta parameters").sample(rng)
    })
}

/// Thompson-sampling agent. Needs to remember which CQI backed each of its
/// decisions so delayed first-transmission feedback updates the right arm.
#[derive(Debug, Clone)]
pub struct BayesAgent {
    pub state: BayesState,
    tables: LinkTables,
    current_cqi: CqiValue,
    /// CQI in effect when the decision of TTI t was made (indexed by t).
    cqi_at_decision: Vec<CqiValue>,
    /// TTIs between a decision request and its transmission.
    decision_lag: u64,
    n_rb: u32,
    rng: ChaCha8Rng,
}

impl BayesAgent {
    pub fn new(
        tables: LinkTables,
        initial_cqi: CqiValue,
        prior_alpha: f64,
        prior_beta: f64,
        decision_lag: u64,
        n_rb: u32,
        seed: u64,
    ) -> Self {
        BayesAgent {
            state: BayesState::new(prior_alpha, prior_beta),
            tables,
            current_cqi: initial_cqi,
            cqi_at_decision: Vec::new(),
            decision_lag,
            n_rb,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl LinkAdapter for BayesAgent {
    fn on_cqi(&mut self, report: &CqiReport) {
        self.current_cqi = report.value;
    }

    fn on_feedback(&mut self, ev: &FeedbackEvent) {
        if ev.rtx_count != 1 {
            return;
        }
        // The TB sent at origin_tti executed the decision made decision_lag
        // TTIs earlier; startup transmissions predate any decision.
        let Some(dec_t) = ev.origin_tti.checked_sub(self.decision_lag) else {
            return;
        };
        let Some(&c) = self.cqi_at_decision.get(dec_t as usize) else {
            return;
        };
        bayes_update(&mut self.state, c, ev.mcs, ev.ack);
    }

    fn decide(&mut self, t: Tti) -> McsDecision {
        debug_assert_eq!(self.cqi_at_decision.len() as u64, t);
        self.cqi_at_decision.push(self.current_cqi);
        bayes_select(
            &self.state,
            self.current_cqi,
            self.n_rb,
            &self.tables,
            &mut self.rng,
        )
        .into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn posterior_counts_follow_feedback() {
        let mut s = BayesState::default();
        let c = CqiValue::new(5);
        let m = McsIndex::new(10);
        assert_eq!(s.counts(c, m), (1.0, 1.0));
        bayes_update(&mut s, c, m, true);
        assert_eq!(s.counts(c, m), (2.0, 1.0));
        bayes_update(&mut s, c, m, false);
        assert_eq!(s.counts(c, m), (2.0, 2.0));
        // Other arms untouched.
        assert_eq!(s.counts(CqiValue::new(6), m), (1.0, 1.0));
    }

    #[test]
    fn uniform_draws_pick_the_biggest_tb() {
        let s = BayesState::default();
        let t = LinkTables::default();
        let m = bayes_select_with(&s, CqiValue::new(7), 50, &t, &mut |_, _| 0.5);
        assert_eq!(m.value(), 27);
    }

    #[test]
    fn posterior_mean_draws_avoid_a_burned_arm() {
        let mut s = BayesState::default();
        let t = LinkTables::default();
        let c = CqiValue::new(7);
        s.set_counts(c, McsIndex::new(27), 1.0, 1e6);
        // Draw at the posterior mean: arm 27 is hopeless, the next TB size wins.
        let m = bayes_select_with(&s, c, 50, &t, &mut |a, b| a / (a + b));
        assert_eq!(m.value(), 26);
    }

    #[test]
    fn selection_is_deterministic_per_seed() {
        let t = LinkTables::default();
        let mk = |seed| {
            let mut agent = BayesAgent::new(t.clone(), CqiValue::new(7), 1.0, 1.0, 4, 50, seed);
            (0..200).map(|tti| agent.decide(tti).mcs.value()).collect::<Vec<_>>()
        };
        assert_eq!(mk(3), mk(3));
        assert_ne!(mk(3), mk(4));
    }

    #[test]
    fn retransmission_feedback_is_ignored() {
        let t = LinkTables::default();
        let mut agent = BayesAgent::new(t, CqiValue::new(7), 1.0, 1.0, 0, 50, 1);
        agent.decide(0);
        let before = agent.state.clone();
        agent.on_feedback(&FeedbackEvent {
            tti_delivered: 8,
            ack: false,
            mcs: McsIndex::new(3),
            tb_bits: 100,
            rtx_count: 2,
            origin_tti: 0,
        });
        assert_eq!(agent.state, before);
        agent.on_feedback(&FeedbackEvent {
            tti_delivered: 8,
            ack: false,
            mcs: McsIndex::new(3),
            tb_bits: 100,
            rtx_count: 1,
            origin_tti: 0,
        });
        assert_ne!(agent.state, before);
    }
}
