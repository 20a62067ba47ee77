//! Real-time two-role runtime: inference and trainer on separate threads,
//! talking only through message channels (or TCP via the pump threads in
//! [`super::tcp`]). The simulator calls `decide` and waits at most the
//! configured deadline; a miss transmits the previous MCS and the late
//! answer, if it ever materializes, is discarded with an audit record.
//!
//! With the deadline disabled and the per-TTI barrier enabled, this mode is
//! bit-identical to [`super::LockstepRuntime`] — decoupling changes timing,
//! not semantics.

use std::sync::mpsc::{channel, sync_channel, Receiver, Sender, SyncSender};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::agents::{LinkAdapter, McsDecision};
use crate::link::McsIndex;
use crate::sim::{CqiReport, FeedbackEvent, Tti};

use super::audit::{AuditEvent, DeadlineStats};
use super::msg::ParamMsg;
use super::{InferenceCore, RuntimeConfig, TrainerCore};

/// How the two roles exchange messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    /// In-process channels (default).
    Channel,
    /// Loopback TCP using the framed wire protocol.
    Tcp,
}

#[derive(Debug, Clone)]
pub struct RealtimeOpts {
    /// Decision deadline; `None` blocks until the answer arrives (used for
    /// the determinism equivalence check).
    pub deadline: Option<Duration>,
    /// Barrier on trainer completion every TTI: deterministic, not real-time.
    pub deterministic: bool,
    /// Optional sleep per TTI to emulate the radio timescale.
    pub tti_pace: Option<Duration>,
    pub transport: Transport,
}

impl Default for RealtimeOpts {
    fn default() -> Self {
        RealtimeOpts {
            deadline: Some(Duration::from_micros(500)),
            deterministic: false,
            tti_pace: None,
            transport: Transport::Channel,
        }
    }
}

pub(super) enum InfCmd {
    Cqi(CqiReport),
    Feedback(FeedbackEvent),
    Decide { t: Tti, reply: SyncSender<u8> },
    Stop,
}

pub(super) enum TrnCmd {
    Exp(Tti, crate::dqn::Experience),
    Tick(Tti),
    Stop,
}

/// Everything joined back together after a run.
pub struct RealtimeReport {
    pub inf: InferenceCore,
    pub trainer: TrainerCore,
    pub events: Vec<AuditEvent>,
    pub stats: DeadlineStats,
}

pub struct RealtimeRuntime {
    inf_tx: Sender<InfCmd>,
    trn_tx: Sender<TrnCmd>,
    inf_handle: Option<JoinHandle<InferenceCore>>,
    trn_handle: Option<JoinHandle<TrainerCore>>,
    pump_handles: Vec<JoinHandle<()>>,
    tick_ack_rx: Option<Receiver<()>>,
    pub stats: DeadlineStats,
    /// Simulator-side events (fallbacks).
    pub events: Vec<AuditEvent>,
    last_mcs: McsIndex,
    deadline: Option<Duration>,
    tti_pace: Option<Duration>,
}

fn inference_thread(
    mut core: InferenceCore,
    rx: Receiver<InfCmd>,
    params_rx: Receiver<ParamMsg>,
    trn_tx: Sender<TrnCmd>,
) -> InferenceCore {
    while let Ok(cmd) = rx.recv() {
        match cmd {
            InfCmd::Cqi(report) => core.on_cqi(&report),
            InfCmd::Feedback(ev) => {
                core.on_feedback(&ev);
            }
            InfCmd::Decide { t, reply } => {
                // Apply any published parameters before answering, newest
                // last so versions stay ordered.
                while let Ok(pm) = params_rx.try_recv() {
                    core.apply_params(t, &pm);
                }
                let d = core.decide(t);
                // Ship completed experiences before replying: the simulator
                // sends the trainer tick only after the reply, so this keeps
                // the trainer's message order deterministic.
                for (label, exp) in core.drain_experiences() {
                    // Trainer gone means shutdown is in progress; drop.
                    let _ = trn_tx.send(TrnCmd::Exp(label, exp));
                }
                if reply.send(d.mcs.value()).is_err() {
                    // The simulator timed out and moved on; the decision is
                    // discarded.
                    core.events.push(AuditEvent::LateDecision { t });
                }
            }
            InfCmd::Stop => break,
        }
    }
    core
}

fn trainer_thread(
    mut core: TrainerCore,
    rx: Receiver<TrnCmd>,
    params_tx: Sender<ParamMsg>,
    tick_ack_tx: Option<Sender<()>>,
) -> TrainerCore {
    while let Ok(cmd) = rx.recv() {
        match cmd {
            TrnCmd::Exp(_, exp) => core.push_experience(exp),
            TrnCmd::Tick(t) => {
                if let Some(msg) = core.tick(t, None) {
                    core.record_sync_delta_vs_published(t);
                    let _ = params_tx.send(msg);
                }
                if let Some(ack) = &tick_ack_tx {
                    let _ = ack.send(());
                }
            }
            TrnCmd::Stop => break,
        }
    }
    core
}

impl RealtimeRuntime {
    pub fn spawn(rc: &RuntimeConfig, opts: &RealtimeOpts) -> Self {
        let (inf_tx, inf_rx) = channel::<InfCmd>();
        let (trn_tx, trn_rx) = channel::<TrnCmd>();
        let (params_tx, params_rx) = channel::<ParamMsg>();
        let (tick_ack_tx, tick_ack_rx) = if opts.deterministic {
            let (tx, rx) = channel::<()>();
            (Some(tx), Some(rx))
        } else {
            (None, None)
        };

        let inf_core = InferenceCore::new(rc);
        let last_mcs = rc.initial_mcs;
        let trn_tx_for_inf = trn_tx.clone();
        let inf_handle = std::thread::Builder::new()
            .name("inference".into())
            .spawn(move || inference_thread(inf_core, inf_rx, params_rx, trn_tx_for_inf))
            .expect("spawn inference thread");

        let mut pump_handles = Vec::new();
        let trn_handle = match opts.transport {
            Transport::Channel => {
                let trn_core = TrainerCore::new(rc);
                std::thread::Builder::new()
                    .name("trainer".into())
                    .spawn(move || trainer_thread(trn_core, trn_rx, params_tx, tick_ack_tx))
                    .expect("spawn trainer thread")
            }
            Transport::Tcp => {
                let listener =
                    std::net::TcpListener::bind("127.0.0.1:0").expect("bind loopback listener");
                let addr = listener.local_addr().unwrap();
                let handle =
                    super::tcp::spawn_tcp_trainer(listener, rc.clone(), opts.deterministic);
                let stream = std::net::TcpStream::connect(addr).expect("connect to trainer");
                stream.set_nodelay(true).ok();
                let (writer, reader) =
                    super::tcp::spawn_client_pumps(stream, trn_rx, params_tx, tick_ack_tx);
                pump_handles.push(writer);
                pump_handles.push(reader);
                handle
            }
        };

        let deadline = opts.deadline;
        RealtimeRuntime {
            inf_tx,
            trn_tx,
            inf_handle: Some(inf_handle),
            trn_handle: Some(trn_handle),
            pump_handles,
            tick_ack_rx,
            stats: DeadlineStats::new(deadline.unwrap_or(Duration::from_micros(500))),
            events: Vec::new(),
            last_mcs,
            deadline,
            tti_pace: opts.tti_pace,
        }
    }

    /// Stop both roles and collect their state and audit trails.
    pub fn finish(mut self) -> RealtimeReport {
        let _ = self.inf_tx.send(InfCmd::Stop);
        let _ = self.trn_tx.send(TrnCmd::Stop);
        let inf = self
            .inf_handle
            .take()
            .unwrap()
            .join()
            .expect("inference thread panicked");
        let trainer = self
            .trn_handle
            .take()
            .unwrap()
            .join()
            .expect("trainer thread panicked");
        for h in self.pump_handles.drain(..) {
            let _ = h.join();
        }
        let mut events = self.events;
        events.extend(inf.events.iter().cloned());
        events.extend(trainer.events.iter().cloned());
        events.sort_by_key(|e| e.tti());
        RealtimeReport {
            inf,
            trainer,
            events,
            stats: self.stats,
        }
    }
}

impl LinkAdapter for RealtimeRuntime {
    fn on_cqi(&mut self, report: &CqiReport) {
        let _ = self.inf_tx.send(InfCmd::Cqi(*report));
    }

    fn on_feedback(&mut self, ev: &FeedbackEvent) {
        let _ = self.inf_tx.send(InfCmd::Feedback(*ev));
    }

    fn decide(&mut self, t: Tti) -> McsDecision {
        let started = Instant::now();
        let (reply_tx, reply_rx) = sync_channel::<u8>(1);
        let sent = self.inf_tx.send(InfCmd::Decide { t, reply: reply_tx });
        let answer = if sent.is_err() {
            None
        } else {
            match self.deadline {
                Some(d) => reply_rx.recv_timeout(d).ok(),
                None => reply_rx.recv().ok(),
            }
        };
        let latency = started.elapsed();
        match answer {
            Some(v) => {
                let m = McsIndex::new(v);
                self.last_mcs = m;
                self.stats.record(latency, false);
                McsDecision {
                    mcs: m,
                    fallback: false,
                }
            }
            None => {
                self.stats.record(latency, true);
                self.events.push(AuditEvent::Fallback { t });
                McsDecision {
                    mcs: self.last_mcs,
                    fallback: true,
                }
            }
        }
    }

    fn end_of_tti(&mut self, t: Tti) {
        let _ = self.trn_tx.send(TrnCmd::Tick(t));
        if let Some(ack) = &self.tick_ack_rx {
            // Deterministic barrier: trainer work for this TTI completes
            // before the next decision is issued.
            let _ = ack.recv();
        }
        if let Some(pace) = self.tti_pace {
            std::thread::sleep(pace);
        }
    }
}
