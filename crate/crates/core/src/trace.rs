//! Synthetic SNR trace generation and trace CSV I/O.
//!
//! Three scenario kinds:
//!
//! - `static`: constant mean SNR plus small i.i.d. Gaussian measurement
//!   jitter (stationary UE).
//! - `mobile`: a bounded random-walk mean overlaid with a Rayleigh-style
//!   fast-fading envelope (complex AR(1) Gaussian channel gain, reported
//!   in dB).
//! - `mobile-to-static`: the mobile process up to a switch TTI, then the
//!   static process (the UE stops moving).
//!
//! Generation is fully deterministic given `(kind, length, seed)`.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scenario tag for trace generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceKind {
    Static,
    Mobile,
    MobileToStatic,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TraceKind::Static => "static",
            TraceKind::Mobile => "mobile",
            TraceKind::MobileToStatic => "mobile-to-static",
        };
        f.write_str(s)
    }
}

impl FromStr for TraceKind {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, TraceError> {
        match s {
            "static" => Ok(TraceKind::Static),
            "mobile" => Ok(TraceKind::Mobile),
            "mobile-to-static" | "mobile_to_static" => Ok(TraceKind::MobileToStatic),
            other => Err(TraceError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("unknown trace kind `{0}` (expected static | mobile | mobile-to-static)")]
    UnknownKind(String),
    #[error("trace file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace file parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Generator parameters. Defaults are calibrated so that the mobile scenario
/// produces deep, TTI-correlated fades that a periodic mean-CQI report cannot
/// resolve, while the static scenario is benign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceGenConfig {
    /// Mean SNR of the static scenario (dB).
    pub static_mean_db: f64,
    /// Std-dev of i.i.d. Gaussian jitter in the static scenario (dB).
    pub static_jitter_db: f64,
    /// Per-TTI std-dev of the mobile scenario's random-walk mean (dB).
    pub walk_sigma_db: f64,
    /// Random-walk reflection bounds (dB).
    pub mean_min_db: f64,
    pub mean_max_db: f64,
    /// Starting mean of the mobile walk (dB).
    pub mobile_start_db: f64,
    /// Fading coherence time: AR(1) correlation e^(-1/coherence) per TTI.
    pub fading_coherence_ttis: f64,
    /// Multiplier on the fading envelope in dB (1.0 = Rayleigh).
    pub fading_scale: f64,
    /// TTI at which mobile-to-static switches to the static process.
    pub switch_tti: u64,
}

impl Default for TraceGenConfig {
    fn default() -> Self {
        TraceGenConfig {
            static_mean_db: 18.0,
            static_jitter_db: 0.4,
            walk_sigma_db: 0.02,
            mean_min_db: 7.0,
            mean_max_db: 21.0,
            mobile_start_db: 14.0,
            fading_coherence_ttis: 60.0,
            fading_scale: 1.0,
            switch_tti: 70_000,
        }
    }
}

/// Per-TTI ground-truth downlink SNR sequence in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrTrace {
    pub samples: Vec<f64>,
    /// Scenario tag (`static` | `mobile` | `mobile-to-static`) or `file`.
    pub label: String,
    pub seed: u64,
}

impl SnrTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Linear-power floor for the fading envelope so the dB conversion stays
/// finite (-60 dB worst case).
const FADE_FLOOR: f64 = 1e-6;

struct MobileState {
    mean_db: f64,
    g_re: f64,
    g_im: f64,
}

impl MobileState {
    fn new(p: &TraceGenConfig, rng: &mut ChaCha8Rng) -> Self {
        // Start the complex gain in its stationary distribution CN(0, 1).
        let n1: f64 = StandardNormal.sample(rng);
        let n2: f64 = StandardNormal.sample(rng);
        MobileState {
            mean_db: p.mobile_start_db,
            g_re: n1 * std::f64::consts::FRAC_1_SQRT_2,
            g_im: n2 * std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    fn step(&mut self, p: &TraceGenConfig, rng: &mut ChaCha8Rng) -> f64 {
        // Bounded random walk of the local-mean SNR (path loss / shadowing).
        let w: f64 = StandardNormal.sample(rng);
        self.mean_db += p.walk_sigma_db * w;
        self.mean_db = reflect(self.mean_db, p.mean_min_db, p.mean_max_db);

        // AR(1) complex Gaussian gain -> Rayleigh envelope, coherence in TTIs.
        let rho = (-1.0 / p.fading_coherence_ttis).exp();
        let innov = (1.0 - rho * rho).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
        let n1: f64 = StandardNormal.sample(rng);
        let n2: f64 = StandardNormal.sample(rng);
        self.g_re = rho * self.g_re + innov * n1;
        self.g_im = rho * self.g_im + innov * n2;

        let power = (self.g_re * self.g_re + self.g_im * self.g_im).max(FADE_FLOOR);
        self.mean_db + p.fading_scale * 10.0 * power.log10()
    }
}

fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        (2.0 * lo - x).min(hi)
    } else if x > hi {
        (2.0 * hi - x).max(lo)
    } else {
        x
    }
}

/// Generate a synthetic SNR trace. Deterministic given `(kind, length, seed)`.
pub fn generate_trace(
    kind: TraceKind,
    length: usize,
    seed: u64,
    params: &TraceGenConfig,
) -> SnrTrace {
    assert!(length >= 1, "trace length must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(length);

    match kind {
        TraceKind::Static => {
            for _ in 0..length {
                samples.push(static_sample(params, &mut rng));
            }
        }
        TraceKind::Mobile => {
            let mut st = MobileState::new(params, &mut rng);
            for _ in 0..length {
                samples.push(st.step(params, &mut rng));
            }
        }
        TraceKind::MobileToStatic => {
            let switch = params.switch_tti as usize;
            let mut st = MobileState::new(params, &mut rng);
            for t in 0..length {
                if t < switch {
                    samples.push(st.step(params, &mut rng));
                } else {
                    samples.push(static_sample(params, &mut rng));
                }
            }
        }
    }

    debug_assert!(samples.iter().all(|s| s.is_finite()));
    SnrTrace {
        samples,
        label: kind.to_string(),
        seed,
    }
}

fn static_sample(p: &TraceGenConfig, rng: &mut ChaCha8Rng) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    p.static_mean_db + p.static_jitter_db * n
}

// ---------------------------------------------------------------------------
// Trace CSV I/O
// ---------------------------------------------------------------------------

/// Write a trace as CSV (`tti,snr_db`, contiguous TTIs from 0).
pub fn write_trace_csv(trace: &SnrTrace, path: &Path) -> Result<(), TraceError> {
    let mut out = String::with_capacity(trace.len() * 16 + 16);
    out.push_str("tti,snr_db\n");
    for (t, s) in trace.samples.iter().enumerate() {
        out.push_str(&format!("{t},{s:.6}\n"));
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Read a trace CSV produced by [`write_trace_csv`] (or any file with the
/// same header and contiguous TTI indices starting at 0).
pub fn read_trace_csv(path: &Path) -> Result<SnrTrace, TraceError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "tti,snr_db" => {}
        Some((_, h)) => {
            return Err(TraceError::Parse {
                line: 1,
                reason: format!("expected header `tti,snr_db`, got `{h}`"),
            })
        }
        None => {
            return Err(TraceError::Parse {
                line: 1,
                reason: "empty file".to_string(),
            })
        }
    }

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (tti_s, snr_s) = line.split_once(',').ok_or_else(|| TraceError::Parse {
            line: lineno,
            reason: "expected `tti,snr_db` row".to_string(),
        })?;
        let tti: usize = tti_s.trim().parse().map_err(|e| TraceError::Parse {
            line: lineno,
            reason: format!("bad tti: {e}"),
        })?;
        if tti != samples.len() {
            return Err(TraceError::Parse {
                line: lineno,
                reason: format!("non-contiguous tti {tti}, expected {}", samples.len()),
            });
        }
        let snr: f64 = snr_s.trim().parse().map_err(|e| TraceError::Parse {
            line: lineno,
            reason: format!("bad snr_db: {e}"),
        })?;
        if !snr.is_finite() {
            return Err(TraceError::Parse {
                line: lineno,
                reason: "non-finite snr_db".to_string(),
            });
        }
        samples.push(snr);
    }
    if samples.is_empty() {
        return Err(TraceError::Parse {
            line: 2,
            reason: "trace has no samples".to_string(),
        });
    }
    Ok(SnrTrace {
        samples,
        label: "file".to_string(),
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn generation_is_deterministic() {
        let p = TraceGenConfig::default();
        for kind in [TraceKind::Static, TraceKind::Mobile, TraceKind::MobileToStatic] {
            let a = generate_trace(kind, 500, 1, &p);
            let b = generate_trace(kind, 500, 1, &p);
            assert_eq!(a, b, "{kind} must regenerate identically");
            let c = generate_trace(kind, 500, 2, &p);
            assert_ne!(a.samples, c.samples, "{kind} must depend on seed");
        }
    }

    #[test]
    fn static_jitter_matches_config() {
        let p = TraceGenConfig::default();
        let tr = generate_trace(TraceKind::Static, 100_000, 7, &p);
        let sd = var(&tr.samples).sqrt();
        assert!(
            sd <= p.static_jitter_db * 1.1,
            "static sd {sd} vs jitter {}",
            p.static_jitter_db
        );
        assert!(sd >= p.static_jitter_db * 0.9);
        let mean = tr.samples.iter().sum::<f64>() / tr.samples.len() as f64;
        assert!((mean - p.static_mean_db).abs() < 0.1);
    }

    #[test]
    fn mobile_to_static_variance_drops_after_switch() {
        let p = TraceGenConfig::default();
        let tr = generate_trace(TraceKind::MobileToStatic, 100_000, 3, &p);
        let before = var(&tr.samples[..70_000]);
        let after = var(&tr.samples[75_000..100_000]);
        assert!(
            after < before,
            "variance after switch ({after}) must drop below mobile variance ({before})"
        );
    }

    #[test]
    fn mobile_mean_stays_in_bounds() {
        // The fading envelope adds on top of the walk, but the walk itself is
        // reflected; the composite should stay within the walk bounds plus a
        // generous fading allowance.
        let p = TraceGenConfig::default();
        let tr = generate_trace(TraceKind::Mobile, 100_000, 11, &p);
        assert!(tr.samples.iter().all(|s| s.is_finite()));
        let hi = p.mean_max_db + 15.0;
        let lo = p.mean_min_db - 65.0; // fade floor is -60 dB
        assert!(tr.samples.iter().all(|&s| s > lo && s < hi));
    }

    #[test]
    fn kind_parses_and_rejects() {
        assert_eq!("static".parse::<TraceKind>().unwrap(), TraceKind::Static);
        assert_eq!("mobile".parse::<TraceKind>().unwrap(), TraceKind::Mobile);
        assert_eq!(
            "mobile-to-static".parse::<TraceKind>().unwrap(),
            TraceKind::MobileToStatic
        );
        assert!("walking".parse::<TraceKind>().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let tr = generate_trace(TraceKind::Mobile, 257, 5, &TraceGenConfig::default());
        write_trace_csv(&tr, &path).unwrap();
        let rt = read_trace_csv(&path).unwrap();
        assert_eq!(rt.len(), tr.len());
        // Values survive at the printed precision.
        for (a, b) in tr.samples.iter().zip(rt.samples.iter()) {
            assert!((a - b).abs() < 5e-7);
        }
    }

    #[test]
    fn csv_rejects_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "tti,snr_db\n0,1.0\n2,2.0\n").unwrap();
        assert!(matches!(
            read_trace_csv(&path),
            Err(TraceError::Parse { line: 3, .. })
        ));
        std::fs::write(&path, "wrong,header\n").unwrap();
        assert!(read_trace_csv(&path).is_err());
    }
}
