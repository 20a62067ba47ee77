//! Delay metric: how far the decision net's value function lags the
//! trainer's live net, measured as max |Q_decision - Q_main| over a fixed
//! probe set and every action. The true metric is a sup over all states;
//! this is an empirical lower bound on a frozen sample, and is reported as
//! such.

use crate::dqn::{QNet, StateWindow};
use crate::scalar::Scalar;

/// Max absolute Q discrepancy across `probes` x all actions. Empty probe
/// sets return 0 (nothing measurable).
pub fn estimate_delay_metric<S: Scalar>(
    main: &QNet<S>,
    decision: &QNet<S>,
    probes: &[StateWindow],
) -> f64 {
    let mut worst = 0.0f64;
    for w in probes {
        let qm = main.forward(w);
        let qd = decision.forward(w);
        for (m, d) in qm.iter().zip(qd.iter()) {
            let diff = (*m - *d).abs().to_f64();
            if diff > worst {
                worst = diff;
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqn::FeatureFrame;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn probe_set(n: usize, l: usize, seed: u64) -> Vec<StateWindow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let frames = (0..=l)
                    .map(|_| FeatureFrame {
                        c: rng.gen_range(0.0f32..1.0),
                        ack: rng.gen_range(0.0f32..1.0),
                        m: rng.gen_range(0.0f32..1.0),
                        delta: rng.gen_range(-0.5f32..0.5),
                    })
                    .collect();
                StateWindow::from_frames_newest_first(frames)
            })
            .collect()
    }

    #[test]
    fn identical_nets_measure_zero_exactly() {
        let net: QNet<f32> = QNet::init(16, 4);
        let probes = probe_set(32, 5, 9);
        assert_eq!(estimate_delay_metric(&net, &net.clone(), &probes), 0.0);
    }

    #[test]
    fn head_bias_shift_is_measured_exactly() {
        // Perturbing only one output-head bias by +0.5 moves exactly that
        // action's Q by 0.5 on every state: the max must be 0.5.
        let main: QNet<f64> = QNet::init(8, 11);
        let mut decision = main.clone();
        decision.head_b[3] += 0.5;
        let probes = probe_set(16, 4, 10);
        let d = estimate_delay_metric(&main, &decision, &probes);
        assert!((d - 0.5).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn empty_probe_set_is_zero() {
        let a: QNet<f32> = QNet::init(4, 1);
        let b: QNet<f32> = QNet::init(4, 2);
        assert_eq!(estimate_delay_metric(&a, &b, &[]), 0.0);
    }

    #[test]
    fn metric_is_symmetric_and_nonnegative() {
        let a: QNet<f64> = QNet::init(8, 21);
        let b: QNet<f64> = QNet::init(8, 22);
        let probes = probe_set(8, 3, 23);
        let ab = estimate_delay_metric(&a, &b, &probes);
        let ba = estimate_delay_metric(&b, &a, &probes);
        assert!(ab > 0.0);
        assert_eq!(ab, ba);
    }
}
