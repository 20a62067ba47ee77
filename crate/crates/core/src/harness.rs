//! Experiment driver: build the trace and agent a [`ResolvedConfig`]
//! describes, run the simulator, and emit the artifact set — per-TTI metrics
//! CSV, audit JSONL, one-row summary CSV, and the resolved config echo —
//! under a fresh run directory. Sweeps rerun one config with a single key
//! varied and combine the summaries into one CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::agents::{BayesAgent, FixedMcs, IllaAgent, OllaAgent, OracleAgent};
use crate::config::{AgentKind, ConfigError, RawConfig, ResolvedConfig, RuntimeMode, Scenario, SCHEMA};
use crate::runtime::{
    write_audit_jsonl, AuditEvent, DeadlineStats, LockstepRuntime, RealtimeOpts, RealtimeRuntime,
    RuntimeConfig,
};
use crate::sim::{run, MetricsLog, Tti};
use crate::trace::{generate_trace, read_trace_csv, SnrTrace, TraceError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("artifact I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("trace has {len} TTIs but the run needs {need}")]
    TraceTooShort { len: usize, need: u64 },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Run-level aggregates, all derivable from the emitted artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub agent: String,
    pub scenario: String,
    pub tti_count: u64,
    pub seed: u64,
    pub trace_seed: u64,
    /// Mean ACKed bits per feedback-bearing TTI, in Mbps. On a loss-free run
    /// this equals tbs/1000 exactly (the startup TTIs without feedback are
    /// excluded from the denominator).
    pub mean_tput_mbps: f64,
    /// Throughput over the last quarter of the run (post-convergence view).
    pub last_quartile_tput_mbps: f64,
    /// NACKs / feedbacks; `None` when no feedback was delivered.
    pub bler: Option<f64>,
    /// Previous-MCS transmissions / TTIs (startup pipeline + deadline misses).
    pub fallback_rate: f64,
    /// First TTI from which windowed throughput stayed within 5% of the
    /// final value for at least 10,000 consecutive TTIs.
    pub convergence_tti: Option<u64>,
    /// Run-averaged staleness probe (decision vs main net); dcdqn only.
    pub delta_q_avg: Option<f64>,
}

pub const SUMMARY_HEADER: &str = "agent,scenario,tti_count,seed,trace_seed,mean_tput_mbps,last_quartile_tput_mbps,bler,fallback_rate,convergence_tti,delta_q_avg";

impl Summary {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{:.6},{:.6},{},{:.6},{},{}",
            self.agent,
            self.scenario,
            self.tti_count,
            self.seed,
            self.trace_seed,
            self.mean_tput_mbps,
            self.last_quartile_tput_mbps,
            opt(self.bler),
            self.fallback_rate,
            self.convergence_tti
                .map(|t| t.to_string())
                .unwrap_or_default(),
            opt(self.delta_q_avg),
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let text = format!("{SUMMARY_HEADER}\n{}\n", self.csv_row());
        std::fs::write(path, text).map_err(io_err(path))
    }
}

/// First index from which `series` stays within `tol` (relative) of its
/// final value for at least `hold` consecutive samples.
pub fn convergence_tti(series: &[f64], hold: usize, tol: f64) -> Option<usize> {
    let final_val = *series.last()?;
    let band = tol * final_val.abs();
    let mut streak = 0usize;
    for (i, &w) in series.iter().enumerate() {
        if (w - final_val).abs() <= band {
            streak += 1;
            if streak >= hold {
                return Some(i + 1 - hold);
            }
        } else {
            streak = 0;
        }
    }
    None
}

/// Compute the run summary from the metrics log.
pub fn summarize(log: &MetricsLog, cfg: &ResolvedConfig, delta_q_avg: Option<f64>) -> Summary {
    let n = log.records.len();
    let mean_tput_mbps = if log.feedback_count > 0 {
        log.delivered_bits as f64 / log.feedback_count as f64 / 1000.0
    } else {
        0.0
    };

    let q_start = n - n / 4;
    let q_bits: u64 = log.records[q_start..]
        .iter()
        .filter_map(|r| match r.feedback {
            Some((true, b)) => Some(b),
            _ => None,
        })
        .sum();
    let q_ttis = (n - q_start).max(1);
    let last_quartile_tput_mbps = q_bits as f64 / q_ttis as f64 / 1000.0;

    let series: Vec<f64> = log.records.iter().map(|r| r.win_tput_mbps).collect();

    Summary {
        agent: cfg.agent.to_string(),
        scenario: cfg.scenario.to_string(),
        tti_count: cfg.sim.tti_count,
        seed: cfg.seed,
        trace_seed: cfg.trace_seed,
        mean_tput_mbps,
        last_quartile_tput_mbps,
        bler: log.cum_bler(),
        fallback_rate: log.fallback_count as f64 / cfg.sim.tti_count as f64,
        convergence_tti: convergence_tti(&series, 10_000, 0.05).map(|t| t as u64),
        delta_q_avg,
    }
}

/// Build the SNR trace a config calls for. Generated traces get
/// `decision_lag` extra samples so the genie oracle can peek at the
/// application TTI of the final decisions too.
pub fn build_trace(cfg: &ResolvedConfig) -> Result<SnrTrace, HarnessError> {
    let need = cfg.sim.tti_count;
    let trace = match &cfg.scenario {
        Scenario::Generated(kind) => generate_trace(
            *kind,
            (need + cfg.sim.decision_lag()) as usize,
            cfg.trace_seed,
            &cfg.tracegen,
        ),
        Scenario::File(path) => read_trace_csv(path)?,
    };
    if (trace.len() as u64) < need {
        return Err(HarnessError::TraceTooShort {
            len: trace.len(),
            need,
        });
    }
    Ok(trace)
}

/// Everything a finished run hands back to callers (artifacts are on disk,
/// but tests and sweeps consume these directly).
pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: Summary,
    pub log: MetricsLog,
    pub events: Vec<AuditEvent>,
    /// Real-time mode only.
    pub deadline_stats: Option<DeadlineStats>,
    /// Between-sync staleness probe samples (dcdqn with probing enabled).
    pub delta_samples: Vec<(Tti, f64)>,
    /// At-sync staleness samples (zero by contract).
    pub delta_at_sync: Vec<(Tti, f64)>,
}

static RUN_SEQ: AtomicU64 = AtomicU64::new(0);

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

/// Create a fresh uniquely-named directory under `base`.
fn unique_dir(base: &Path, stem: &str) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(base).map_err(io_err(base))?;
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    loop {
        let seq = RUN_SEQ.fetch_add(1, Ordering::Relaxed);
        let dir = base.join(format!("{stem}_{nanos:x}_{seq}"));
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
}

/// Run one experiment end to end and write its artifacts.
pub fn run_experiment(cfg: &ResolvedConfig) -> Result<RunOutput, HarnessError> {
    let trace = build_trace(cfg)?;

    let mut events: Vec<AuditEvent> = Vec::new();
    let mut deadline_stats = None;
    let mut delta_q_avg = None;
    let mut delta_samples = Vec::new();
    let mut delta_at_sync = Vec::new();

    let log = match cfg.agent {
        AgentKind::Fixed(m) => {
            let mut agent = FixedMcs(m);
            run(&trace, &mut agent, &cfg.sim, &cfg.tables)
        }
        AgentKind::Illa => {
            let mut agent = IllaAgent::new(cfg.tables.clone(), cfg.sim.initial_cqi);
            run(&trace, &mut agent, &cfg.sim, &cfg.tables)
        }
        AgentKind::Olla => {
            let mut agent = OllaAgent::new(
                cfg.tables.clone(),
                cfg.sim.initial_cqi,
                cfg.olla.delta_up,
                cfg.olla.target_bler,
                cfg.olla.update_on_rtx,
            );
            run(&trace, &mut agent, &cfg.sim, &cfg.tables)
        }
        AgentKind::Bayes => {
            let mut agent = BayesAgent::new(
                cfg.tables.clone(),
                cfg.sim.initial_cqi,
                cfg.bayes.prior_alpha,
                cfg.bayes.prior_beta,
                cfg.sim.decision_lag(),
                cfg.sim.n_rb,
                cfg.seed.wrapping_add(3),
            );
            run(&trace, &mut agent, &cfg.sim, &cfg.tables)
        }
        AgentKind::Oracle => {
            let mut agent = OracleAgent::new(
                trace.samples.clone(),
                cfg.sim.decision_lag(),
                cfg.tables.clone(),
                cfg.sim.n_rb,
            );
            run(&trace, &mut agent, &cfg.sim, &cfg.tables)
        }
        AgentKind::Dcdqn => {
            let mut rc = RuntimeConfig::new(cfg.hp.clone(), &cfg.sim, cfg.seed);
            rc.probe_interval = cfg.runtime.delta_probe_interval;
            rc.train_stall = cfg.runtime.train_stall;
            match cfg.runtime.mode {
                RuntimeMode::Lockstep => {
                    let mut rt = LockstepRuntime::new(&rc);
                    let log = run(&trace, &mut rt, &cfg.sim, &cfg.tables);
                    delta_q_avg = rt.trainer.delta_run_avg();
                    delta_samples = rt.trainer.delta_samples.clone();
                    delta_at_sync = rt.trainer.delta_at_sync.clone();
                    events = rt.into_events();
                    log
                }
                RuntimeMode::Realtime => {
                    let opts = RealtimeOpts {
                        deadline: cfg.runtime.deadline,
                        deterministic: cfg.runtime.deterministic,
                        tti_pace: cfg.runtime.tti_pace,
                        transport: cfg.runtime.transport,
                    };
                    let mut rt = RealtimeRuntime::spawn(&rc, &opts);
                    let log = run(&trace, &mut rt, &cfg.sim, &cfg.tables);
                    let report = rt.finish();
                    delta_q_avg = report.trainer.delta_run_avg();
                    delta_samples = report.trainer.delta_samples.clone();
                    delta_at_sync = report.trainer.delta_at_sync.clone();
                    deadline_stats = Some(report.stats);
                    events = report.events;
                    log
                }
            }
        }
    };

    let stem = match &cfg.name {
        Some(name) => sanitize(name),
        None => sanitize(&format!("{}_{}", cfg.agent, cfg.scenario)),
    };
    let dir = unique_dir(&cfg.out_dir, &stem)?;

    let metrics_path = dir.join("metrics.csv");
    log.write_csv(&metrics_path).map_err(io_err(&metrics_path))?;
    let audit_path = dir.join("audit.jsonl");
    write_audit_jsonl(&audit_path, &events).map_err(io_err(&audit_path))?;
    let summary = summarize(&log, cfg, delta_q_avg);
    summary.write_csv(&dir.join("summary.csv"))?;
    let cfg_path = dir.join("config.txt");
    std::fs::write(&cfg_path, cfg.echo()).map_err(io_err(&cfg_path))?;

    Ok(RunOutput {
        dir,
        summary,
        log,
        events,
        deadline_stats,
        delta_samples,
        delta_at_sync,
    })
}

/// One sweep point: the swept value plus either a summary or the error that
/// stopped it (failures do not stop the sweep).
pub struct SweepRow {
    pub value: String,
    pub summary: Option<Summary>,
    pub error: Option<String>,
}

pub struct SweepOutput {
    pub dir: PathBuf,
    pub csv_path: PathBuf,
    pub rows: Vec<SweepRow>,
}

/// Rerun `base` once per value of `param`, sharing everything else
/// (including the trace seed, so generated traces are common across points).
pub fn run_sweep(base: &RawConfig, param: &str, values: &[String]) -> Result<SweepOutput, HarnessError> {
    if SCHEMA.binary_search(&param).is_err() {
        return Err(ConfigError::UnknownKey {
            key: param.to_string(),
        }
        .into());
    }
    let base_cfg = ResolvedConfig::from_raw(base)?;
    let sweep_dir = unique_dir(&base_cfg.out_dir, &format!("sweep_{}", sanitize(param)))?;

    let mut rows = Vec::with_capacity(values.len());
    for value in values {
        let attempt = || -> Result<Summary, HarnessError> {
            let mut raw = base.clone();
            raw.set(param, value)?;
            raw.set("run.out_dir", &sweep_dir.display().to_string())?;
            raw.set("run.name", &format!("v_{}", sanitize(value)))?;
            let cfg = ResolvedConfig::from_raw(&raw)?;
            Ok(run_experiment(&cfg)?.summary)
        };
        match attempt() {
            Ok(summary) => rows.push(SweepRow {
                value: value.clone(),
                summary: Some(summary),
                error: None,
            }),
            Err(e) => rows.push(SweepRow {
                value: value.clone(),
                summary: None,
                error: Some(e.to_string()),
            }),
        }
    }

    let mut text = format!("param,value,{SUMMARY_HEADER},error\n");
    for row in &rows {
        match (&row.summary, &row.error) {
            (Some(s), _) => {
                let _ = writeln!(text, "{param},{},{},", row.value, s.csv_row());
            }
            (None, Some(e)) => {
                let empty = SUMMARY_HEADER.split(',').map(|_| "").collect::<Vec<_>>().join(",");
                let _ = writeln!(text, "{param},{},{},{}", row.value, empty, e.replace(',', ";"));
            }
            (None, None) => unreachable!("sweep row without summary or error"),
        }
    }
    let csv_path = sweep_dir.join("sweep.csv");
    std::fs::write(&csv_path, text).map_err(io_err(&csv_path))?;

    Ok(SweepOutput {
        dir: sweep_dir,
        csv_path,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_from(text: &str, out_dir: &Path) -> ResolvedConfig {
        let mut raw = RawConfig::parse(text).unwrap();
        raw.set("run.out_dir", &out_dir.display().to_string()).unwrap();
        ResolvedConfig::from_raw(&raw).unwrap()
    }

    #[test]
    fn fixed0_clean_channel_summary_is_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_from(
            "agent.kind = fixed:0\n\
             scenario.kind = static\n\
             trace.static_mean_db = 30\n\
             trace.static_jitter_db = 0.0001\n\
             sim.tti_count = 12000\n",
            dir.path(),
        );
        let out = run_experiment(&cfg).unwrap();
        // tbs(0, 50) = 1125 bits per TTI, no losses: exactly 1.125 Mbps.
        assert_eq!(out.summary.mean_tput_mbps, 1.125);
        assert_eq!(out.summary.bler, Some(0.0));
        assert_eq!(out.summary.last_quartile_tput_mbps, 1.125);
        // Converges as soon as the 2000-TTI window fills.
        let c = out.summary.convergence_tti.unwrap();
        assert!(c <= 2000, "convergence at {c}");
        for f in ["metrics.csv", "audit.jsonl", "summary.csv", "config.txt"] {
            assert!(out.dir.join(f).exists(), "{f} missing");
        }
        // The echoed config resolves back to the exact same run description.
        let echoed = std::fs::read_to_string(out.dir.join("config.txt")).unwrap();
        let cfg2 = ResolvedConfig::from_raw(&RawConfig::parse(&echoed).unwrap()).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn summary_is_recomputable_from_metrics_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_from(
            "agent.kind = olla\n\
             scenario.kind = mobile\n\
             sim.tti_count = 6000\n",
            dir.path(),
        );
        let out = run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(out.dir.join("metrics.csv")).unwrap();
        let mut feedbacks = 0u64;
        let mut nacks = 0u64;
        let mut delivered = 0u64;
        let mut fallbacks = 0u64;
        let mut rows = 0u64;
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            rows += 1;
            if !f[3].is_empty() {
                feedbacks += 1;
                if f[3] == "0" {
                    nacks += 1;
                }
                delivered += f[5].parse::<u64>().unwrap();
            }
            fallbacks += f[8].parse::<u64>().unwrap();
        }
        assert_eq!(rows, 6000);
        assert_eq!(
            out.summary.mean_tput_mbps,
            delivered as f64 / feedbacks as f64 / 1000.0
        );
        assert_eq!(out.summary.bler, Some(nacks as f64 / feedbacks as f64));
        assert_eq!(out.summary.fallback_rate, fallbacks as f64 / 6000.0);
    }

    #[test]
    fn oracle_dominates_every_agent_on_a_common_trace() {
        let dir = tempfile::tempdir().unwrap();
        let base = "scenario.kind = mobile\n\
                    sim.tti_count = 8000\n\
                    trace.seed = 5\n\
                    run.seed = 11\n\
                    dqn.hidden = 16\n\
                    dqn.history_len = 8\n\
                    dqn.batch = 16\n\
                    dqn.eps_decay_ttis = 3000\n";
        let oracle = run_experiment(&cfg_from(
            &format!("{base}agent.kind = oracle\n"),
            dir.path(),
        ))
        .unwrap()
        .summary;
        for agent in ["illa", "olla", "bayes", "fixed:10", "dcdqn"] {
            let s = run_experiment(&cfg_from(
                &format!("{base}agent.kind = {agent}\n"),
                dir.path(),
            ))
            .unwrap()
            .summary;
            assert!(
                oracle.mean_tput_mbps >= s.mean_tput_mbps,
                "{agent}: {} > oracle {}",
                s.mean_tput_mbps,
                oracle.mean_tput_mbps
            );
        }
    }

    #[test]
    fn identical_config_and_seed_reproduce_artifacts_byte_for_byte() {
        let dir = tempfile::tempdir().unwrap();
        let text = "agent.kind = dcdqn\n\
                    scenario.kind = mobile\n\
                    sim.tti_count = 3000\n\
                    dqn.hidden = 8\n\
                    dqn.history_len = 4\n\
                    dqn.batch = 8\n\
                    run.seed = 3\n";
        let a = run_experiment(&cfg_from(text, dir.path())).unwrap();
        let b = run_experiment(&cfg_from(text, dir.path())).unwrap();
        let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
        assert_eq!(read(&a.dir, "metrics.csv"), read(&b.dir, "metrics.csv"));
        assert_eq!(read(&a.dir, "summary.csv"), read(&b.dir, "summary.csv"));
        assert_eq!(read(&a.dir, "audit.jsonl"), read(&b.dir, "audit.jsonl"));
    }

    #[test]
    fn sweep_isolates_per_value_failures_and_emits_combined_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut raw = RawConfig::parse(
            "agent.kind = fixed:3\n\
             scenario.kind = static\n\
             sim.tti_count = 500\n",
        )
        .unwrap();
        raw.set("run.out_dir", &dir.path().display().to_string()).unwrap();
        let values: Vec<String> = ["200", "0", "300"].iter().map(|s| s.to_string()).collect();
        let out = run_sweep(&raw, "sim.tti_count", &values).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert!(out.rows[0].summary.is_some());
        assert!(out.rows[1].error.as_deref().unwrap().contains("tti_count"));
        assert!(out.rows[2].summary.is_some());
        let csv = std::fs::read_to_string(&out.csv_path).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().next().unwrap().starts_with("param,value,"));

        // Unknown parameter names fail up front.
        assert!(run_sweep(&raw, "sim.bogus", &values).is_err());
    }

    #[test]
    fn convergence_definition_matches_hand_cases() {
        // Stays at 1.0 from index 3 onward; hold=4 → first qualifying start is 3.
        let series = [0.0, 0.5, 2.0, 1.0, 1.0, 1.0, 1.02, 1.0];
        assert_eq!(convergence_tti(&series, 4, 0.05), Some(3));
        // A mid-run excursion resets the streak.
        let series = [1.0, 1.0, 5.0, 1.0, 1.0, 1.0];
        assert_eq!(convergence_tti(&series, 3, 0.05), Some(3));
        // Never stable long enough.
        let series = [1.0, 2.0, 1.0, 2.0];
        assert_eq!(convergence_tti(&series, 3, 0.05), None);
        // Trivial: constant series converges at 0.
        let series = [2.0; 10];
        assert_eq!(convergence_tti(&series, 10, 0.05), Some(0));
        assert_eq!(convergence_tti(&[], 1, 0.05), None);
    }

    #[test]
    fn file_scenario_round_trips_and_length_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let trace = generate_trace(
            crate::trace::TraceKind::Static,
            400,
            9,
            &crate::trace::TraceGenConfig::default(),
        );
        let path = dir.path().join("t.csv");
        crate::trace::write_trace_csv(&trace, &path).unwrap();
        let text = format!(
            "agent.kind = illa\n\
             scenario.kind = file\n\
             scenario.trace_file = {}\n\
             sim.tti_count = 400\n",
            path.display()
        );
        let cfg = cfg_from(&text, dir.path());
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.log.records.len(), 400);

        let text = text.replace("sim.tti_count = 400", "sim.tti_count = 500");
        let cfg = cfg_from(&text, dir.path());
        assert!(matches!(
            run_experiment(&cfg),
            Err(HarnessError::TraceTooShort { len: 400, need: 500 })
        ));
    }
}
