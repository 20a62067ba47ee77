//! Bookkeeping that turns delayed per-TTI observations into aligned
//! training experiences.
//!
//! Frame timing: the frame `z_t` holds exactly what the decision at `t` can
//! see — the CQI in effect at `t`, its one-step slope, and the ACK/MCS of
//! the feedback ingested since the previous decision. Only the action path
//! carries the control delay; the observation path stays as fresh as the
//! reporting chain allows, so making the pipeline longer degrades the
//! decisions without also blinding the state.
//!
//! The experience anchored at `t` is `[s(t), a, r, s(t + D)]` with
//! `D = d_tx + d_ack`: `s(t)` is the window the pipeline saw when it chose
//! `a` (transmitted at `t + d_tx`), `r` comes from that transmission's
//! feedback at `t + d_tx + d_ack`, and `s(t + D)` is the window in effect
//! when the feedback lands. The tuple becomes alignable once `z_{t+D}` is
//! sealed, i.e. at the decision following the feedback delivery.

use thiserror::Error;

use crate::link::{CqiValue, McsIndex};
use crate::sim::{FeedbackEvent, Tti};

use super::feature::{build_frame, build_frame_pending, reward, FeatureFrame, StateWindow};

/// Executed action and outcome behind a completed decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxOutcome {
    pub mcs: McsIndex,
    pub ack: bool,
    pub tb_bits: u64,
    pub rtx: u32,
}

/// Aligned training tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub s: StateWindow,
    pub a: McsIndex,
    pub r: f32,
    pub s_next: StateWindow,
}

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("experience at tti {t}: feedback not delivered yet")]
    NotReady { t: Tti },
    #[error("experience at tti {t}: next-state frame not sealed yet")]
    WindowPending { t: Tti },
    #[error("experience at tti {t}: no CQI recorded (bookkeeping bug)")]
    MissingCqi { t: Tti },
}

/// Indexed observation history of one run.
pub struct ObservationLog {
    d_tx: u64,
    d_ack: u64,
    history_len: usize,
    n_rb: u32,
    /// CQI in effect at each decision TTI (grows by one per TTI).
    cqi: Vec<CqiValue>,
    /// One sealed frame per decision TTI, in lockstep with `cqi`.
    frames: Vec<FeatureFrame>,
    /// Executed action and outcome, indexed by decision TTI.
    outcomes: Vec<Option<TxOutcome>>,
    /// Feedback delivered since the last frame was sealed; folded into the
    /// next frame.
    pending_fb: Option<(bool, McsIndex)>,
}

impl ObservationLog {
    pub fn new(d_tx: u64, d_ack: u64, history_len: usize, n_rb: u32) -> Self {
        ObservationLog {
            d_tx,
            d_ack,
            history_len,
            n_rb,
            cqi: Vec::new(),
            frames: Vec::new(),
            outcomes: Vec::new(),
            pending_fb: None,
        }
    }

    /// Total decision-to-feedback horizon `D = d_tx + d_ack`.
    pub fn horizon(&self) -> u64 {
        self.d_tx + self.d_ack
    }

    /// Record the CQI the decision at `t` sees and seal the frame `z_t`.
    /// Must be called once per TTI in order, after any feedback delivered
    /// ahead of the decision has been recorded.
    pub fn record_cqi(&mut self, t: Tti, c: CqiValue) {
        assert_eq!(self.cqi.len() as u64, t, "record_cqi must run every TTI");
        let prev = self.cqi.last().copied().unwrap_or(c);
        let frame = match self.pending_fb.take() {
            Some((ack, m)) => build_frame(c, ack, m, prev),
            None => build_frame_pending(c, prev),
        };
        self.frames.push(frame);
        self.cqi.push(c);
    }

    /// Record a delivered feedback. It feeds the next sealed frame, and —
    /// for transmissions that executed a pipelined decision — the outcome
    /// of the decision it traces back to, whose label is returned. Startup
    /// transmissions that predate the pipeline yield no label.
    pub fn record_feedback(&mut self, ev: &FeedbackEvent) -> Option<Tti> {
        debug_assert!(self.pending_fb.is_none(), "one feedback per TTI");
        self.pending_fb = Some((ev.ack, ev.mcs));
        let label = ev.origin_tti.checked_sub(self.d_tx)?;
        let idx = label as usize;
        if self.outcomes.len() <= idx {
            self.outcomes.resize(idx + 1, None);
        }
        debug_assert!(self.outcomes[idx].is_none(), "one feedback per transmission");
        self.outcomes[idx] = Some(TxOutcome {
            mcs: ev.mcs,
            ack: ev.ack,
            tb_bits: ev.tb_bits,
            rtx: ev.rtx_count,
        });
        Some(label)
    }

    /// Window whose newest frame is `z_end` (zero-padded before the start
    /// of the run).
    pub fn window_ending(&self, end: i64) -> StateWindow {
        let mut frames = Vec::with_capacity(self.history_len + 1);
        for k in 0..=self.history_len as i64 {
            let label = end - k;
            let f = if label < 0 {
                FeatureFrame::zeros()
            } else {
                self.frames
                    .get(label as usize)
                    .copied()
                    .unwrap_or_else(FeatureFrame::zeros)
            };
            frames.push(f);
        }
        StateWindow::from_frames_newest_first(frames)
    }

    /// Build the experience anchored at `t`: the window the decision at `t`
    /// saw, the executed action, the reward from the feedback at `t + D`,
    /// and the window in effect at feedback time. Callable once the
    /// feedback has been recorded and the frame `z_{t+D}` is sealed.
    pub fn align_experience(&self, t: Tti) -> Result<Experience, AlignError> {
        if (self.cqi.len() as u64) <= t {
            return Err(AlignError::MissingCqi { t });
        }
        let outcome = self
            .outcomes
            .get(t as usize)
            .copied()
            .flatten()
            .ok_or(AlignError::NotReady { t })?;
        let horizon = self.horizon();
        if (self.frames.len() as u64) <= t + horizon {
            return Err(AlignError::WindowPending { t });
        }
        let s = self.window_ending(t as i64);
        let s_next = self.window_ending((t + horizon) as i64);
        let r = reward(outcome.tb_bits, outcome.rtx, self.n_rb, outcome.ack) as f32;
        Ok(Experience {
            s,
            a: outcome.mcs,
            r,
            s_next,
        })
    }

    pub fn outcome(&self, t: Tti) -> Option<TxOutcome> {
        self.outcomes.get(t as usize).copied().flatten()
    }
}
