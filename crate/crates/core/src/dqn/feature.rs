//! Feature frames, state windows, and the reward.

use serde::{Deserialize, Serialize};

use crate::link::{CqiValue, McsIndex};
use crate::scalar::{s, Scalar};

/// One TTI's observation, normalized into [-1, 1] components:
/// `[cqi/15, ack, mcs/27, delta_cqi/15]`.
///
/// Stored at `f32` (the wire precision); widened on demand for the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    pub c: f32,
    pub ack: f32,
    pub m: f32,
    pub delta: f32,
}

impl FeatureFrame {
    pub const DIM: usize = 4;

    pub fn zeros() -> Self {
        FeatureFrame {
            c: 0.0,
            ack: 0.0,
            m: 0.0,
            delta: 0.0,
        }
    }

    pub fn to_array<S: Scalar>(self) -> [S; 4] {
        [
            s(self.c as f64),
            s(self.ack as f64),
            s(self.m as f64),
            s(self.delta as f64),
        ]
    }
}

/// Normalized per-TTI observation: the CQI in effect at this TTI, its
/// one-step slope, and the ACK/MCS of the feedback that arrived this TTI.
pub fn build_frame(c: CqiValue, ack: bool, m: McsIndex, prev_c: CqiValue) -> FeatureFrame {
    FeatureFrame {
        c: c.value() as f32 / 15.0,
        ack: ack as u8 as f32,
        m: m.value() as f32 / 27.0,
        delta: (c.value() as f32 - prev_c.value() as f32) / 15.0,
    }
}

/// Frame for a TTI where no feedback arrived (the startup transient before
/// the first report lands). The ACK channel sits at the midpoint so it reads
/// as neither ACK nor NACK.
pub fn build_frame_pending(c: CqiValue, prev_c: CqiValue) -> FeatureFrame {
    FeatureFrame {
        c: c.value() as f32 / 15.0,
        ack: 0.5,
        m: 0.0,
        delta: (c.value() as f32 - prev_c.value() as f32) / 15.0,
    }
}

/// Fixed-length frame history `[z_t, z_{t-1}, ..., z_{t-l}]`, newest first.
/// The network consumes it oldest-to-newest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateWindow {
    /// length l+1, decreasing TTI order.
    pub frames: Vec<FeatureFrame>,
}

impl StateWindow {
    pub fn zeros(history_len: usize) -> Self {
        StateWindow {
            frames: vec![FeatureFrame::zeros(); history_len + 1],
        }
    }

    pub fn from_frames_newest_first(frames: Vec<FeatureFrame>) -> Self {
        assert!(!frames.is_empty());
        StateWindow { frames }
    }

    /// l (window holds l+1 frames).
    pub fn history_len(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &FeatureFrame> {
        self.frames.iter().rev()
    }
}

/// Per-feedback reward: ACK earns TB bits discounted by transmissions and
/// bandwidth, NACK costs the transmissions wasted so far.
///
/// `rtx` is the transmission count of the TB (1 = clean first transmission).
/// Panics on `rtx = 0` or `rb = 0` (caller bookkeeping bug).
pub fn reward(tb_bits: u64, rtx: u32, rb: u32, ack: bool) -> f64 {
    assert!(rtx >= 1, "transmission count starts at 1");
    assert!(rb >= 1, "resource blocks must be positive");
    if ack {
        tb_bits as f64 / (rtx as f64 * rb as f64)
    } else {
        -(rtx as f64) / rb as f64
    }
}
