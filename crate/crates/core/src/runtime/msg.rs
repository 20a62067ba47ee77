//! Wire protocol between the trainer and inference roles.
//!
//! Every message is one length-prefixed frame:
//!
//! ```text
//! u32 LE  frame length = 1 + payload length
//! u8      message type: 1 = params, 2 = experience batch, 3 = control
//! bytes   payload
//! ```
//!
//! The same frames flow over in-process channels (as decoded structs) and
//! TCP (as bytes); the encoding is bit-exact either way. Parameter payloads
//! carry an FNV-1a checksum verified before any swap.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::dqn::snapshot::{self, SnapshotError};
use crate::dqn::{Experience, FeatureFrame, QNet, StateWindow};
use crate::link::McsIndex;
use crate::sim::Tti;

pub const MSG_PARAMS: u8 = 1;
pub const MSG_EXPERIENCES: u8 = 2;
pub const MSG_CONTROL: u8 = 3;

/// Frames larger than this are treated as stream corruption.
const MAX_FRAME: u32 = 256 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum MsgError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("unknown message type {0}")]
    BadType(u8),
    #[error("unknown control code {0}")]
    BadControl(u8),
    #[error("frame of {0} bytes exceeds the protocol limit")]
    FrameTooLarge(u32),
    #[error("payload truncated at byte {at}")]
    Truncated { at: usize },
    #[error("parameter checksum mismatch: header {header:#018x}, computed {computed:#018x}")]
    Checksum { header: u64, computed: u64 },
    #[error("parameter snapshot: {0}")]
    Snapshot(#[from] SnapshotError),
}

/// Versioned parameter snapshot (interface carrying net weights).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMsg {
    pub version: u64,
    pub checksum: u64,
    pub snapshot: Vec<u8>,
}

impl ParamMsg {
    pub fn from_net(version: u64, net: &QNet<f32>) -> Self {
        let snapshot = snapshot::encode(net);
        let checksum = snapshot::fnv1a64(&snapshot);
        ParamMsg {
            version,
            checksum,
            snapshot,
        }
    }

    /// Verify the checksum and decode. Used by the inference side before
    /// any swap: a corrupt snapshot must never reach a decision net.
    pub fn decode_verified(&self) -> Result<QNet<f32>, MsgError> {
        let computed = snapshot::fnv1a64(&self.snapshot);
        if computed != self.checksum {
            return Err(MsgError::Checksum {
                header: self.checksum,
                computed,
            });
        }
        Ok(snapshot::decode(&self.snapshot)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMsg {
    Stop,
    Tick(Tti),
    TickDone(Tti),
}

/// One experience with the TTI it was aligned at.
pub type StampedExperience = (Tti, Experience);

#[derive(Debug, Clone, PartialEq)]
pub enum WireMsg {
    Params(ParamMsg),
    Experiences(Vec<StampedExperience>),
    Control(ControlMsg),
}

fn put_window(out: &mut Vec<u8>, w: &StateWindow) {
    out.extend_from_slice(&(w.frames.len() as u16).to_le_bytes());
    for f in &w.frames {
        out.extend_from_slice(&f.c.to_le_bytes());
        out.extend_from_slice(&f.ack.to_le_bytes());
        out.extend_from_slice(&f.m.to_le_bytes());
        out.extend_from_slice(&f.delta.to_le_bytes());
    }
}

/// Encode a full frame, length prefix included.
pub fn encode_msg(msg: &WireMsg) -> Vec<u8> {
    let mut payload = Vec::new();
    let ty = match msg {
        WireMsg::Params(p) => {
            payload.extend_from_slice(&p.version.to_le_bytes());
            payload.extend_from_slice(&p.checksum.to_le_bytes());
            payload.extend_from_slice(&p.snapshot);
            MSG_PARAMS
        }
        WireMsg::Experiences(batch) => {
            payload.extend_from_slice(&(batch.len() as u32).to_le_bytes());
            for (origin, exp) in batch {
                payload.extend_from_slice(&origin.to_le_bytes());
                payload.push(exp.a.value());
                payload.extend_from_slice(&exp.r.to_le_bytes());
                put_window(&mut payload, &exp.s);
                put_window(&mut payload, &exp.s_next);
            }
            MSG_EXPERIENCES
        }
        WireMsg::Control(c) => {
            let (code, t) = match c {
                ControlMsg::Stop => (0u8, 0u64),
                ControlMsg::Tick(t) => (1, *t),
                ControlMsg::TickDone(t) => (2, *t),
            };
            payload.push(code);
            payload.extend_from_slice(&t.to_le_bytes());
            MSG_CONTROL
        }
    };
    let mut frame = Vec::with_capacity(5 + payload.len());
    frame.extend_from_slice(&(1 + payload.len() as u32).to_le_bytes());
    frame.push(ty);
    frame.extend_from_slice(&payload);
    frame
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MsgError> {
        if self.pos + n > self.buf.len() {
            return Err(MsgError::Truncated { at: self.buf.len() });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, MsgError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, MsgError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, MsgError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, MsgError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32, MsgError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn window(&mut self) -> Result<StateWindow, MsgError> {
        let n = self.u16()? as usize;
        let mut frames = Vec::with_capacity(n);
        for _ in 0..n {
            frames.push(FeatureFrame {
                c: self.f32()?,
                ack: self.f32()?,
                m: self.f32()?,
                delta: self.f32()?,
            });
        }
        Ok(StateWindow::from_frames_newest_first(frames))
    }
}

/// Decode the body of a frame (type byte + payload, length prefix already
/// stripped).
pub fn decode_body(body: &[u8]) -> Result<WireMsg, MsgError> {
    let mut cur = Cursor { buf: body, pos: 0 };
    let ty = cur.u8()?;
    let msg = match ty {
        MSG_PARAMS => {
            let version = cur.u64()?;
            let checksum = cur.u64()?;
            let snapshot = cur.take(body.len() - cur.pos)?.to_vec();
            WireMsg::Params(ParamMsg {
                version,
                checksum,
                snapshot,
            })
        }
        MSG_EXPERIENCES => {
            let count = cur.u32()? as usize;
            let mut batch = Vec::with_capacity(count);
            for _ in 0..count {
                let origin = cur.u64()?;
                let a = McsIndex::new(cur.u8()?);
                let r = cur.f32()?;
                let s = cur.window()?;
                let s_next = cur.window()?;
                batch.push((origin, Experience { s, a, r, s_next }));
            }
            if cur.pos != body.len() {
                return Err(MsgError::Truncated { at: cur.pos });
            }
            WireMsg::Experiences(batch)
        }
        MSG_CONTROL => {
            let code = cur.u8()?;
            let t = cur.u64()?;
            WireMsg::Control(match code {
                0 => ControlMsg::Stop,
                1 => ControlMsg::Tick(t),
                2 => ControlMsg::TickDone(t),
                other => return Err(MsgError::BadControl(other)),
            })
        }
        other => return Err(MsgError::BadType(other)),
    };
    Ok(msg)
}

/// Write one frame to a byte sink.
pub fn write_msg<W: Write>(w: &mut W, msg: &WireMsg) -> Result<(), MsgError> {
    let frame = encode_msg(msg);
    w.write_all(&frame)?;
    w.flush()?;
    Ok(())
}

/// Blocking read of one frame. `Ok(None)` means the peer closed the stream
/// cleanly between frames.
pub fn read_msg<R: Read>(r: &mut R) -> Result<Option<WireMsg>, MsgError> {
    let mut len_buf = [0u8; 4];
    match r.read_exact(&mut len_buf) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_le_bytes(len_buf);
    if len == 0 || len > MAX_FRAME {
        return Err(MsgError::FrameTooLarge(len));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    decode_body(&body).map(Some)
}
