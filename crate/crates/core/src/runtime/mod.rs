//! Decoupled learning runtime: a latency-bounded inference role holding two
//! swappable decision nets, and a trainer role that owns the replay buffer,
//! the optimizer, and the target net. The two communicate only through
//! parameter and experience messages.
//!
//! Two execution modes share these cores:
//! * lockstep — trainer ticks interleaved logically with the simulator,
//!   fully deterministic; used for every reproducible experiment;
//! * real-time ([`RealtimeRuntime`]) — separate threads, wall-clock decision
//!   deadline with previous-MCS fallback; used for latency measurements.

pub mod audit;
pub mod delay;
pub mod msg;
mod realtime;
mod tcp;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{LinkAdapter, McsDecision};
use crate::dqn::{
    select_action, sync, train_step, Adam, Experience, Hyperparams, ObservationLog, QNet,
    ReplayBuffer,
};
use crate::link::{CqiValue, McsIndex};
use crate::sim::{CqiReport, FeedbackEvent, SimConfig, Tti};

pub use audit::{write_audit_jsonl, AuditEvent, DeadlineStats};
pub use delay::estimate_delay_metric;
pub use msg::{ControlMsg, MsgError, ParamMsg, WireMsg};
pub use realtime::{RealtimeOpts, RealtimeReport, RealtimeRuntime, Transport};
pub use tcp::spawn_tcp_trainer;

/// Probe-set size for the delay metric, frozen at first estimate.
pub const PROBE_SET_SIZE: usize = 256;

/// Everything needed to stand up a runtime against a simulator config.
#[derive(Debug, Clone)]
pub struct RuntimeConfig {
    pub hp: Hyperparams,
    /// TTIs between making a decision and it going over the air
    /// (max of the tx delay and the modeled decision delay).
    pub pipeline_lag: u64,
    pub d_ack: u64,
    pub n_rb: u32,
    pub initial_mcs: McsIndex,
    pub initial_cqi: CqiValue,
    pub seed: u64,
    /// TTIs between delay-metric probes; 0 disables periodic probing.
    pub probe_interval: u64,
    /// Test hook: replace each training step with a stall of this length.
    pub train_stall: Option<Duration>,
}

impl RuntimeConfig {
    pub fn new(hp: Hyperparams, sim: &SimConfig, seed: u64) -> Self {
        RuntimeConfig {
            hp,
            pipeline_lag: sim.decision_lag(),
            d_ack: sim.d_ack,
            n_rb: sim.n_rb,
            initial_mcs: sim.initial_mcs,
            initial_cqi: sim.initial_cqi,
            seed,
            probe_interval: 0,
            train_stall: None,
        }
    }
}

/// Why a published parameter set was not swapped in.
#[derive(Debug, PartialEq)]
pub enum ParamReject {
    Checksum { header: u64, computed: u64 },
    Stale { current: u64, got: u64 },
    Decode(String),
    Shape { expected: usize, got: usize },
}

impl std::fmt::Display for ParamReject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamReject::Checksum { header, computed } => {
                write!(f, "checksum mismatch: header {header:#x}, computed {computed:#x}")
            }
            ParamReject::Stale { current, got } => {
                write!(f, "stale version {got} <= {current}")
            }
            ParamReject::Decode(e) => write!(f, "snapshot decode: {e}"),
            ParamReject::Shape { expected, got } => {
                write!(f, "hidden width {got} does not match {expected}")
            }
        }
    }
}

/// Two decision nets; one serves inference while the other receives the
/// next parameter snapshot, then they swap. Decisions always read a fully
/// decoded, checksum-verified net.
#[derive(Debug, Clone)]
pub struct DecisionPair {
    nets: [QNet<f32>; 2],
    active: usize,
    last_version: u64,
}

impl DecisionPair {
    pub fn new(net: QNet<f32>) -> Self {
        DecisionPair {
            nets: [net.clone(), net],
            active: 0,
            last_version: 0,
        }
    }

    pub fn active(&self) -> &QNet<f32> {
        &self.nets[self.active]
    }

    pub fn version(&self) -> u64 {
        self.last_version
    }

    /// Verify, decode into the loading slot, swap. Stale or corrupt
    /// messages leave the active net untouched.
    pub fn apply(&mut self, msg: &ParamMsg) -> Result<u64, ParamReject> {
        let computed = crate::dqn::snapshot::fnv1a64(&msg.snapshot);
        if computed != msg.checksum {
            return Err(ParamReject::Checksum {
                header: msg.checksum,
                computed,
            });
        }
        if msg.version <= self.last_version {
            return Err(ParamReject::Stale {
                current: self.last_version,
                got: msg.version,
            });
        }
        let net = crate::dqn::snapshot::decode(&msg.snapshot)
            .map_err(|e| ParamReject::Decode(e.to_string()))?;
        let expected = self.nets[self.active].hidden;
        if net.hidden != expected {
            return Err(ParamReject::Shape {
                expected,
                got: net.hidden,
            });
        }
        let loading = 1 - self.active;
        self.nets[loading] = net;
        self.active = loading;
        self.last_version = msg.version;
        Ok(msg.version)
    }
}

/// The latency-critical role: answers MCS queries from the observation
/// window using the active decision net. Never trains, never blocks on the
/// trainer.
pub struct InferenceCore {
    pub pair: DecisionPair,
    pub obs: ObservationLog,
    hp: Hyperparams,
    rng: ChaCha8Rng,
    current_cqi: CqiValue,
    prev_mcs: McsIndex,
    /// Decision labels whose feedback has landed; aligned at the next
    /// decision, once the frame closing their next-state window is sealed.
    pending_labels: Vec<Tti>,
    completed: Vec<(Tti, Experience)>,
    pub decisions: u64,
    pub explored: u64,
    pub events: Vec<AuditEvent>,
}

impl InferenceCore {
    pub fn new(rc: &RuntimeConfig) -> Self {
        rc.hp.validate().expect("invalid hyperparameters");
        assert!(
            rc.pipeline_lag + rc.d_ack >= 1,
            "the runtime needs at least one TTI between decision and feedback"
        );
        let net = QNet::init(rc.hp.hidden, rc.seed);
        InferenceCore {
            pair: DecisionPair::new(net),
            obs: ObservationLog::new(rc.pipeline_lag, rc.d_ack, rc.hp.history_len, rc.n_rb),
            hp: rc.hp.clone(),
            rng: ChaCha8Rng::seed_from_u64(rc.seed.wrapping_add(1)),
            current_cqi: rc.initial_cqi,
            prev_mcs: rc.initial_mcs,
            pending_labels: Vec::new(),
            completed: Vec::new(),
            decisions: 0,
            explored: 0,
            events: Vec::new(),
        }
    }

    pub fn on_cqi(&mut self, report: &CqiReport) {
        self.current_cqi = report.value;
    }

    /// Ingest delivered feedback; returns the label of the decision it
    /// closes (feedback during the startup transient yields none). The
    /// experience itself becomes available from [`drain_experiences`] after
    /// the next decision, when its next-state window is complete.
    ///
    /// [`drain_experiences`]: InferenceCore::drain_experiences
    pub fn on_feedback(&mut self, ev: &FeedbackEvent) -> Option<Tti> {
        let label = self.obs.record_feedback(ev)?;
        self.pending_labels.push(label);
        Some(label)
    }

    /// Pick the MCS for wall-clock TTI `t` from the window ending at `t` —
    /// the freshest state the reporting chain allows.
    pub fn decide(&mut self, t: Tti) -> McsDecision {
        self.obs.record_cqi(t, self.current_cqi);
        let s = self.obs.window_ending(t as i64);
        let eps = self.hp.epsilon(t);
        let (a, explored) = select_action(self.pair.active(), &s, eps, &mut self.rng);
        let m = McsIndex::new(a as u8);
        self.prev_mcs = m;
        self.decisions += 1;
        if explored {
            self.explored += 1;
        }
        // Sealing this TTI's frame may have completed the next-state window
        // of decisions whose feedback already landed.
        if !self.pending_labels.is_empty() {
            let pending = std::mem::take(&mut self.pending_labels);
            for label in pending {
                match self.obs.align_experience(label) {
                    Ok(e) => self.completed.push((label, e)),
                    Err(_) => self.pending_labels.push(label),
                }
            }
        }
        McsDecision {
            mcs: m,
            fallback: false,
        }
    }

    /// Experiences aligned since the last drain, in completion order.
    pub fn drain_experiences(&mut self) -> Vec<(Tti, Experience)> {
        std::mem::take(&mut self.completed)
    }

    /// The value transmitted when a decision misses its deadline.
    pub fn fallback_mcs(&self) -> McsIndex {
        self.prev_mcs
    }

    /// Apply a published parameter set, recording the outcome. Returns
    /// whether the swap happened.
    pub fn apply_params(&mut self, t: Tti, msg: &ParamMsg) -> bool {
        match self.pair.apply(msg) {
            Ok(version) => {
                self.events.push(AuditEvent::ParamApplied { t, version });
                true
            }
            Err(reject) => {
                self.events.push(AuditEvent::ParamDropped {
                    t,
                    version: msg.version,
                    reason: reject.to_string(),
                });
                false
            }
        }
    }
}

/// The throughput-oriented role: replay buffer, online/target nets, Adam,
/// the periodic sync/publish cadence, and the delay-metric probes.
pub struct TrainerCore {
    pub hp: Hyperparams,
    pub main: QNet<f32>,
    pub target: QNet<f32>,
    adam: Adam<f32>,
    pub replay: ReplayBuffer,
    rng: ChaCha8Rng,
    pub version: u64,
    /// Copy of the last published parameters (what the decision side will
    /// converge to); reference point for probes in threaded mode.
    pub published: QNet<f32>,
    probes: Vec<crate::dqn::StateWindow>,
    probe_interval: u64,
    train_stall: Option<Duration>,
    pub events: Vec<AuditEvent>,
    /// (t, delta) between-sync probe samples against the decision net.
    pub delta_samples: Vec<(Tti, f64)>,
    /// (t, delta) measured right after each sync/apply; zero by contract.
    pub delta_at_sync: Vec<(Tti, f64)>,
    pub experiences_seen: u64,
}

impl TrainerCore {
    pub fn new(rc: &RuntimeConfig) -> Self {
        rc.hp.validate().expect("invalid hyperparameters");
        let main: QNet<f32> = QNet::init(rc.hp.hidden, rc.seed);
        TrainerCore {
            main: main.clone(),
            target: main.clone(),
            adam: Adam::new(main.param_count(), rc.hp.lr),
            replay: ReplayBuffer::new(rc.hp.buffer_capacity),
            rng: ChaCha8Rng::seed_from_u64(rc.seed.wrapping_add(2)),
            version: 0,
            published: main,
            probes: Vec::new(),
            probe_interval: rc.probe_interval,
            train_stall: rc.train_stall,
            events: Vec::new(),
            delta_samples: Vec::new(),
            delta_at_sync: Vec::new(),
            experiences_seen: 0,
            hp: rc.hp.clone(),
        }
    }

    pub fn push_experience(&mut self, mut exp: Experience) {
        self.experiences_seen += 1;
        // Normalize into trainable units here rather than at alignment, so
        // the wire format and the audit trail keep the raw reward.
        exp.r /= self.hp.reward_scale as f32;
        self.replay.push(exp);
    }

    /// Average of the between-sync probe samples (the run-level staleness
    /// number).
    pub fn delta_run_avg(&self) -> Option<f64> {
        if self.delta_samples.is_empty() {
            return None;
        }
        Some(self.delta_samples.iter().map(|(_, d)| d).sum::<f64>() / self.delta_samples.len() as f64)
    }

    fn maybe_freeze_probes(&mut self) {
        if !self.probes.is_empty() || self.replay.len() < PROBE_SET_SIZE {
            return;
        }
        // Sampled uniformly once, then frozen for the rest of the run so
        // successive estimates are comparable.
        let idx = rand::seq::index::sample(&mut self.rng, self.replay.len(), PROBE_SET_SIZE);
        self.probes = idx.into_iter().map(|i| self.replay.get(i).s.clone()).collect();
    }

    /// One logical TTI of trainer work: probe, train every T, sync+publish
    /// every U. Returns the parameter message to deliver when published.
    /// `decision` is the net currently serving inference when it is
    /// reachable (lockstep); threaded mode probes against `published`.
    pub fn tick(&mut self, t: Tti, decision: Option<&QNet<f32>>) -> Option<ParamMsg> {
        if self.probe_interval > 0 && t % self.probe_interval == 0 {
            self.maybe_freeze_probes();
            if !self.probes.is_empty() {
                let reference = decision.unwrap_or(&self.published);
                let delta = estimate_delay_metric(&self.main, reference, &self.probes);
                self.events.push(AuditEvent::DeltaProbe {
                    t,
                    delta,
                    at_sync: false,
                });
                self.delta_samples.push((t, delta));
            }
        }

        if t % self.hp.train_interval == 0 {
            if let Some(stall) = self.train_stall {
                std::thread::sleep(stall);
                self.events.push(AuditEvent::TrainStalled {
                    t,
                    millis: stall.as_millis() as u64,
                });
            } else if self.replay.len() < self.hp.batch {
                self.events.push(AuditEvent::TrainSkipped {
                    t,
                    stored: self.replay.len(),
                });
            } else {
                let batch = self.replay.sample(self.hp.batch, &mut self.rng);
                match train_step(&mut self.main, &self.target, &batch, self.hp.gamma, &mut self.adam)
                {
                    Ok(loss) => self.events.push(AuditEvent::Train { t, loss }),
                    Err(e) => self.events.push(AuditEvent::TrainFailed {
                        t,
                        reason: e.to_string(),
                    }),
                }
            }
        }

        if t % self.hp.update_interval == 0 {
            sync(&mut self.target, &self.main);
            self.version += 1;
            self.published = self.main.clone();
            self.events.push(AuditEvent::Sync {
                t,
                version: self.version,
            });
            return Some(ParamMsg::from_net(self.version, &self.main));
        }
        None
    }

    /// Record the at-sync delay metric against the net actually serving
    /// decisions. Parameter equality short-circuits to an exact 0 (the
    /// forward pass is deterministic); anything else is measured honestly.
    pub fn record_sync_delta(&mut self, t: Tti, decision: &QNet<f32>) {
        let delta = if *decision == self.main {
            0.0
        } else {
            estimate_delay_metric(&self.main, decision, &self.probes)
        };
        self.events.push(AuditEvent::DeltaProbe {
            t,
            delta,
            at_sync: true,
        });
        self.delta_at_sync.push((t, delta));
    }

    /// Threaded-mode variant: the decision net is in another thread, so the
    /// published snapshot (which the decision side will swap to) is the
    /// reference.
    pub fn record_sync_delta_vs_published(&mut self, t: Tti) {
        let delta = if self.published == self.main {
            0.0
        } else {
            estimate_delay_metric(&self.main, &self.published, &self.probes)
        };
        self.events.push(AuditEvent::DeltaProbe {
            t,
            delta,
            at_sync: true,
        });
        self.delta_at_sync.push((t, delta));
    }
}

/// Single-threaded runtime: trainer work happens inside `end_of_tti`, in a
/// fixed order, so runs are exactly reproducible. This is the reference
/// semantics the threaded mode must match bit-for-bit.
pub struct LockstepRuntime {
    pub inf: InferenceCore,
    pub trainer: TrainerCore,
}

impl LockstepRuntime {
    pub fn new(rc: &RuntimeConfig) -> Self {
        LockstepRuntime {
            inf: InferenceCore::new(rc),
            trainer: TrainerCore::new(rc),
        }
    }

    /// All audit events, inference-side then trainer-side.
    pub fn into_events(self) -> Vec<AuditEvent> {
        let mut events = self.inf.events;
        events.extend(self.trainer.events);
        events.sort_by_key(|e| e.tti());
        events
    }
}

impl LinkAdapter for LockstepRuntime {
    fn on_cqi(&mut self, report: &CqiReport) {
        self.inf.on_cqi(report);
    }

    fn on_feedback(&mut self, ev: &FeedbackEvent) {
        self.inf.on_feedback(ev);
    }

    fn decide(&mut self, t: Tti) -> McsDecision {
        let d = self.inf.decide(t);
        for (_, exp) in self.inf.drain_experiences() {
            self.trainer.push_experience(exp);
        }
        d
    }

    fn end_of_tti(&mut self, t: Tti) {
        if let Some(msg) = self.trainer.tick(t, Some(self.inf.pair.active())) {
            if self.inf.apply_params(t, &msg) {
                // Through-the-wire check: the decision net must now equal
                // the trainer's main net exactly.
                let active = self.inf.pair.active().clone();
                self.trainer.record_sync_delta(t, &active);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqn::{FeatureFrame, StateWindow};
    use rand::Rng;

    fn test_rc(seed: u64) -> RuntimeConfig {
        let hp = Hyperparams {
            hidden: 8,
            history_len: 3,
            batch: 4,
            buffer_capacity: 64,
            ..Hyperparams::default()
        };
        RuntimeConfig::new(hp, &SimConfig::default(), seed)
    }

    fn dummy_exp(rng: &mut ChaCha8Rng, l: usize) -> Experience {
        let mk = |rng: &mut ChaCha8Rng| {
            let frames = (0..=l)
                .map(|_| FeatureFrame {
                    c: rng.gen_range(0.0f32..1.0),
                    ack: rng.gen_range(0.0f32..1.0),
                    m: rng.gen_range(0.0f32..1.0),
                    delta: 0.0,
                })
                .collect();
            StateWindow::from_frames_newest_first(frames)
        };
        Experience {
            s: mk(rng),
            a: McsIndex::new(rng.gen_range(0..28)),
            r: rng.gen_range(-0.1f32..1.0),
            s_next: mk(rng),
        }
    }

    #[test]
    fn pair_swaps_only_on_valid_fresh_params() {
        let base: QNet<f32> = QNet::init(8, 1);
        let mut pair = DecisionPair::new(base.clone());
        let newer: QNet<f32> = QNet::init(8, 2);
        let msg1 = ParamMsg::from_net(1, &newer);
        assert_eq!(pair.apply(&msg1), Ok(1));
        assert_eq!(pair.active(), &newer);
        // Replay of the same version is stale.
        assert!(matches!(pair.apply(&msg1), Err(ParamReject::Stale { .. })));
        assert_eq!(pair.active(), &newer);
        // Corruption is caught by the checksum before any swap.
        let third: QNet<f32> = QNet::init(8, 3);
        let mut bad = ParamMsg::from_net(2, &third);
        bad.snapshot[40] ^= 0x10;
        assert!(matches!(pair.apply(&bad), Err(ParamReject::Checksum { .. })));
        assert_eq!(pair.active(), &newer);
        // Two rapid valid messages: the latest wins.
        let msg2 = ParamMsg::from_net(2, &third);
        let fourth: QNet<f32> = QNet::init(8, 4);
        let msg3 = ParamMsg::from_net(3, &fourth);
        pair.apply(&msg2).unwrap();
        pair.apply(&msg3).unwrap();
        assert_eq!(pair.active(), &fourth);
        assert_eq!(pair.version(), 3);
    }

    #[test]
    fn wrong_width_snapshot_is_rejected() {
        let mut pair = DecisionPair::new(QNet::init(8, 1));
        let narrow: QNet<f32> = QNet::init(4, 2);
        let msg = ParamMsg::from_net(1, &narrow);
        assert!(matches!(pair.apply(&msg), Err(ParamReject::Shape { .. })));
    }

    #[test]
    fn tick_cadence_matches_intervals() {
        // T=50, U=500 over 5000 TTIs: 100 training ticks (counting skips)
        // and 10 parameter publishes.
        let mut rc = test_rc(7);
        rc.hp.train_interval = 50;
        rc.hp.update_interval = 500;
        let mut trainer = TrainerCore::new(&rc);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..8 {
            trainer.push_experience(dummy_exp(&mut rng, rc.hp.history_len));
        }
        let mut published = 0;
        for t in 0..5000u64 {
            if trainer.tick(t, None).is_some() {
                published += 1;
            }
        }
        let train_ticks = trainer
            .events
            .iter()
            .filter(|e| {
                matches!(
                    e,
                    AuditEvent::Train { .. }
                        | AuditEvent::TrainSkipped { .. }
                        | AuditEvent::TrainFailed { .. }
                )
            })
            .count();
        let syncs = trainer
            .events
            .iter()
            .filter(|e| matches!(e, AuditEvent::Sync { .. }))
            .count();
        assert_eq!(train_ticks, 100);
        assert_eq!(syncs, 10);
        assert_eq!(published, 10);
        assert_eq!(trainer.version, 10);
    }

    #[test]
    fn stall_hook_replaces_training_and_is_audited() {
        let mut rc = test_rc(5);
        rc.train_stall = Some(Duration::from_millis(2));
        rc.hp.train_interval = 1;
        rc.hp.update_interval = 1000;
        let mut trainer = TrainerCore::new(&rc);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            trainer.push_experience(dummy_exp(&mut rng, rc.hp.history_len));
        }
        let before = trainer.main.clone();
        let start = std::time::Instant::now();
        trainer.tick(1, None);
        assert!(start.elapsed() >= Duration::from_millis(2));
        assert_eq!(trainer.main, before);
        assert!(matches!(
            trainer.events.last(),
            Some(AuditEvent::TrainStalled { t: 1, .. })
        ));
    }

    #[test]
    fn buffer_underfull_skips_training_and_leaves_params() {
        let rc = test_rc(6);
        let mut trainer = TrainerCore::new(&rc);
        let before = trainer.main.clone();
        trainer.tick(rc.hp.train_interval, None);
        assert_eq!(trainer.main, before);
        assert!(trainer
            .events
            .iter()
            .any(|e| matches!(e, AuditEvent::TrainSkipped { .. })));
    }

    #[test]
    fn lockstep_sync_leaves_decision_net_equal_to_main() {
        let mut rc = test_rc(11);
        rc.hp.train_interval = 5;
        rc.hp.update_interval = 20;
        let mut rt = LockstepRuntime::new(&rc);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..8 {
            rt.trainer.push_experience(dummy_exp(&mut rng, rc.hp.history_len));
        }
        for t in 0..100u64 {
            rt.end_of_tti(t);
        }
        // Training continues between publishes, so the decision net tracks
        // the last published params, and at each sync instant it matched
        // main exactly (the recorded deltas below).
        assert_eq!(rt.inf.pair.active(), &rt.trainer.published);
        assert!(!rt.trainer.delta_at_sync.is_empty());
        assert!(rt.trainer.delta_at_sync.iter().all(|(_, d)| *d == 0.0));
        // Training moved the params away from initialization.
        assert_ne!(&rt.trainer.main, &QNet::init(8, 11));
    }
}
