//! Loopback-TCP transport for the two-role runtime. The trainer sits behind
//! a socket speaking the framed wire protocol, so experiences and parameters
//! cross a real serialize/checksum/deserialize boundary instead of moving as
//! in-process references.

use std::io::{BufReader, BufWriter};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{Receiver, Sender};
use std::thread::JoinHandle;

use super::msg::{read_msg, write_msg, ControlMsg, ParamMsg, WireMsg};
use super::realtime::TrnCmd;
use super::{RuntimeConfig, TrainerCore};

/// Serve one trainer on the first accepted connection. Experience frames are
/// buffered, control ticks drive training/publishing, and each published
/// parameter set goes back as a param frame. With `send_tick_acks` every
/// tick is answered with a tick-done frame (the deterministic barrier).
/// Returns the trainer state when the peer stops or disconnects.
pub fn spawn_tcp_trainer(
    listener: TcpListener,
    rc: RuntimeConfig,
    send_tick_acks: bool,
) -> JoinHandle<TrainerCore> {
    std::thread::Builder::new()
        .name("tcp-trainer".into())
        .spawn(move || {
            let (stream, _peer) = listener.accept().expect("accept trainer connection");
            stream.set_nodelay(true).ok();
            serve_trainer(stream, &rc, send_tick_acks)
        })
        .expect("spawn tcp trainer thread")
}

fn serve_trainer(stream: TcpStream, rc: &RuntimeConfig, send_tick_acks: bool) -> TrainerCore {
    let mut core = TrainerCore::new(rc);
    let mut reader = BufReader::new(stream.try_clone().expect("clone trainer stream"));
    let mut writer = BufWriter::new(stream);
    loop {
        match read_msg(&mut reader) {
            Ok(Some(WireMsg::Experiences(batch))) => {
                for (_, exp) in batch {
                    core.push_experience(exp);
                }
            }
            Ok(Some(WireMsg::Control(ControlMsg::Tick(t)))) => {
                if let Some(msg) = core.tick(t, None) {
                    core.record_sync_delta_vs_published(t);
                    if write_msg(&mut writer, &WireMsg::Params(msg)).is_err() {
                        break;
                    }
                }
                if send_tick_acks
                    && write_msg(&mut writer, &WireMsg::Control(ControlMsg::TickDone(t))).is_err()
                {
                    break;
                }
            }
            Ok(Some(WireMsg::Control(ControlMsg::Stop))) => break,
            // Params and tick-done only ever flow trainer -> inference.
            Ok(Some(_)) => break,
            // Clean EOF or a broken/garbled stream both end the session.
            Ok(None) | Err(_) => break,
        }
    }
    core
}

/// Bridge the in-process command channels onto the socket: one pump drains
/// trainer commands into frames, the other turns incoming frames back into
/// parameter messages and tick acks.
pub(super) fn spawn_client_pumps(
    stream: TcpStream,
    trn_rx: Receiver<TrnCmd>,
    params_tx: Sender<ParamMsg>,
    tick_ack_tx: Option<Sender<()>>,
) -> (JoinHandle<()>, JoinHandle<()>) {
    let mut writer = BufWriter::new(stream.try_clone().expect("clone client stream"));
    let writer_handle = std::thread::Builder::new()
        .name("tcp-writer".into())
        .spawn(move || {
            while let Ok(cmd) = trn_rx.recv() {
                let msg = match cmd {
                    TrnCmd::Exp(t, exp) => WireMsg::Experiences(vec![(t, exp)]),
                    TrnCmd::Tick(t) => WireMsg::Control(ControlMsg::Tick(t)),
                    TrnCmd::Stop => {
                        let _ = write_msg(&mut writer, &WireMsg::Control(ControlMsg::Stop));
                        break;
                    }
                };
                if write_msg(&mut writer, &msg).is_err() {
                    break;
                }
            }
        })
        .expect("spawn tcp writer pump");

    let mut reader = BufReader::new(stream);
    let reader_handle = std::thread::Builder::new()
        .name("tcp-reader".into())
        .spawn(move || loop {
            match read_msg(&mut reader) {
                Ok(Some(WireMsg::Params(p))) => {
                    if params_tx.send(p).is_err() {
                        break;
                    }
                }
                Ok(Some(WireMsg::Control(ControlMsg::TickDone(_)))) => {
                    if let Some(ack) = &tick_ack_tx {
                        let _ = ack.send(());
                    }
                }
                Ok(Some(_)) => break,
                Ok(None) | Err(_) => break,
            }
        })
        .expect("spawn tcp reader pump");

    (writer_handle, reader_handle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqn::{Experience, FeatureFrame, Hyperparams, StateWindow};
    use crate::link::McsIndex;
    use crate::sim::SimConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc_small(seed: u64) -> RuntimeConfig {
        let hp = Hyperparams {
            hidden: 8,
            history_len: 3,
            batch: 8,
            buffer_capacity: 256,
            train_interval: 10,
            update_interval: 50,
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

    /// The socket boundary must not change training at all: same experience
    /// and tick sequence, bit-identical published parameters.
    #[test]
    fn tcp_trainer_matches_in_process_trainer_bitwise() {
        let rc = rc_small(41);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let exps: Vec<Experience> = (0..64).map(|_| dummy_exp(&mut rng, 3)).collect();

        // Reference: in-process trainer.
        let mut local = TrainerCore::new(&rc);
        let mut local_published = Vec::new();
        for (i, e) in exps.iter().enumerate() {
            local.push_experience(e.clone());
            if let Some(msg) = local.tick(i as u64, None) {
                local_published.push(msg);
            }
        }

        // Same sequence over TCP.
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = spawn_tcp_trainer(listener, rc.clone(), true);
        let stream = TcpStream::connect(addr).unwrap();
        let mut writer = BufWriter::new(stream.try_clone().unwrap());
        let mut reader = BufReader::new(stream);
        let mut remote_published = Vec::new();
        for (i, e) in exps.iter().enumerate() {
            write_msg(&mut writer, &WireMsg::Experiences(vec![(i as u64, e.clone())])).unwrap();
            write_msg(&mut writer, &WireMsg::Control(ControlMsg::Tick(i as u64))).unwrap();
            loop {
                match read_msg(&mut reader).unwrap().expect("ack expected") {
                    WireMsg::Params(p) => remote_published.push(p),
                    WireMsg::Control(ControlMsg::TickDone(t)) => {
                        assert_eq!(t, i as u64);
                        break;
                    }
                    other => panic!("unexpected frame {other:?}"),
                }
            }
        }
        write_msg(&mut writer, &WireMsg::Control(ControlMsg::Stop)).unwrap();
        let remote = handle.join().unwrap();

        assert!(!local_published.is_empty());
        assert_eq!(local_published.len(), remote_published.len());
        for (a, b) in local_published.iter().zip(remote_published.iter()) {
            assert_eq!(a.version, b.version);
            assert_eq!(a.checksum, b.checksum);
            assert_eq!(a.snapshot, b.snapshot);
        }
        assert_eq!(local.main, remote.main);
        assert_eq!(local.version, remote.version);
    }

    #[test]
    fn disconnect_without_stop_returns_trainer_state() {
        let rc = rc_small(5);
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = spawn_tcp_trainer(listener, rc, false);
        {
            let stream = TcpStream::connect(addr).unwrap();
            let mut writer = BufWriter::new(stream);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let e = dummy_exp(&mut rng, 3);
            write_msg(&mut writer, &WireMsg::Experiences(vec![(0, e)])).unwrap();
            // Dropped here: clean EOF, no stop frame.
        }
        let core = handle.join().unwrap();
        assert_eq!(core.experiences_seen, 1);
    }
}
