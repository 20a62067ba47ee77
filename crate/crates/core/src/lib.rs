//! Single-UE downlink link-adaptation simulator at TTI granularity.
//!
//! The crate is organised in layers:
//!
//! - [`link`]: static link-level maps (CQI/SNR, MCS thresholds, BLER curve,
//!   transport block sizing, chase-combining gain).
//! - [`trace`]: SNR trace generation (static / mobile / mobile-to-static) and
//!   trace CSV I/O.
//! - [`sim`]: the HARQ transmission loop with feedback, CQI and decision
//!   delays, plus per-TTI metrics.
//! - [`agents`]: MCS selection policies — fixed, genie oracle, inner-loop,
//!   outer-loop (OLLA) and Thompson-sampling baselines.
//! - [`dqn`]: recurrent Q-network, replay, alignment of delayed feedback into
//!   training experiences, hand-rolled BPTT and Adam.
//! - [`runtime`]: the decoupled inference/training runtime (lockstep,
//!   two-thread, and TCP-socketed variants) with parameter snapshots and a
//!   policy-lag probe.
//! - [`harness`]: config resolution, experiment/sweep drivers, summary and
//!   artifact output.
//!
//! The numeric core ([`dqn::QNet`] and the training ops) is generic over the
//! scalar type. The deployed runtime instantiates `f32` — matching the wire
//! format of parameter snapshots, so a published snapshot round-trips without
//! loss — while tests instantiate `f64` for high-precision gradient oracles.

#![forbid(unsafe_code)]

pub mod agents;
pub mod config;
pub mod dqn;
pub mod harness;
pub mod link;
pub mod runtime;
pub mod scalar;
pub mod sim;
pub mod trace;

pub use scalar::Scalar;

/// Scalar type used by the deployed runtime (matches the snapshot wire format).
pub type RunScalar = f32;
/// Scalar type used by high-precision test oracles.
pub type WideScalar = f64;

/// Q-network at runtime precision.
pub type RunQNet = dqn::QNet<RunScalar>;
/// Q-network at oracle precision.
pub type WideQNet = dqn::QNet<WideScalar>;
