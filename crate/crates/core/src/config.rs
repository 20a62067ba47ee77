//! Experiment configuration: a flat `section.key = value` text format with
//! `#` comment lines, a fixed schema (unknown keys are errors, typos don't
//! silently fall back to defaults), and `--set key=value` overrides layered
//! on top.
//!
//! Every key has a default, so the empty file is a valid config (lockstep
//! DC-DQN on a generated mobile trace). [`ResolvedConfig::echo`] serializes
//! the fully-resolved state back into the same format; feeding the echo back
//! in reproduces the run exactly.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::dqn::Hyperparams;
use crate::link::{CqiValue, LinkTables, McsIndex};
use crate::runtime::Transport;
use crate::sim::SimConfig;
use crate::trace::{TraceGenConfig, TraceKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config read: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },
    #[error("config key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Every accepted key. Kept sorted for the error listing and the echo.
pub const SCHEMA: &[&str] = &[
    "agent.kind",
    "bayes.prior_alpha",
    "bayes.prior_beta",
    "dqn.batch",
    "dqn.buffer_capacity",
    "dqn.eps_decay_ttis",
    "dqn.eps_end",
    "dqn.eps_start",
    "dqn.gamma",
    "dqn.hidden",
    "dqn.history_len",
    "dqn.lr",
    "dqn.reward_scale",
    "dqn.train_interval",
    "dqn.update_interval",
    "link.bler_steepness",
    "link.cqi_snr_base",
    "link.cqi_snr_step",
    "link.mcs_eff_base",
    "link.mcs_eff_step",
    "link.mcs_thr_base",
    "link.mcs_thr_step",
    "link.re_per_rb",
    "olla.delta_up",
    "olla.target_bler",
    "olla.update_on_rtx",
    "run.name",
    "run.out_dir",
    "run.seed",
    "runtime.deadline_us",
    "runtime.delta_probe_interval",
    "runtime.deterministic",
    "runtime.mode",
    "runtime.train_stall_ms",
    "runtime.transport",
    "runtime.tti_pace_us",
    "scenario.kind",
    "scenario.trace_file",
    "sim.cqi_period",
    "sim.d_ack",
    "sim.d_cqi",
    "sim.d_decision",
    "sim.d_tx",
    "sim.initial_cqi",
    "sim.initial_mcs",
    "sim.max_tx",
    "sim.n_rb",
    "sim.tti_count",
    "sim.window",
    "trace.fading_coherence_ttis",
    "trace.fading_scale",
    "trace.mean_max_db",
    "trace.mean_min_db",
    "trace.mobile_start_db",
    "trace.seed",
    "trace.static_jitter_db",
    "trace.static_mean_db",
    "trace.switch_tti",
    "trace.walk_sigma_db",
];

/// Parsed but untyped key/value pairs; later assignments win.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    map: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parse config text. Lines are `key = value`, blank, or `#`-comments.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: lineno,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: lineno,
                    reason: "empty key or value".to_string(),
                });
            }
            raw.set(key, value)?;
        }
        Ok(raw)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        RawConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// Set one key, validating it against the schema.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if SCHEMA.binary_search(&key).is_err() {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
            });
        }
        self.map.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a `key=value` override (the CLI `--set` form).
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (key, value) = pair.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            reason: format!("override `{pair}` is not of the form key=value"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line: 0,
                reason: format!("override `{pair}` has an empty key or value"),
            });
        }
        self.set(key, value)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn parse_as<T>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.parse::<T>().map_err(|e| bad(key, format!("`{v}`: {e}"))),
        }
    }

    fn parse_bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.map.get(key).map(|s| s.as_str()) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(bad(key, format!("`{v}`: expected true or false"))),
        }
    }

    /// `0` (or absence with a zero default) means "none".
    fn parse_opt_u64(&self, key: &str, default: Option<u64>) -> Result<Option<u64>, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => {
                let n: u64 = v.parse().map_err(|e| bad(key, format!("`{v}`: {e}")))?;
                Ok((n > 0).then_some(n))
            }
        }
    }
}

/// What channel the run plays back.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Generated(TraceKind),
    File(PathBuf),
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scenario::Generated(k) => write!(f, "{k}"),
            Scenario::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Which policy picks the MCS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Illa,
    Olla,
    Bayes,
    Dcdqn,
    Oracle,
    Fixed(McsIndex),
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentKind::Illa => write!(f, "illa"),
            AgentKind::Olla => write!(f, "olla"),
            AgentKind::Bayes => write!(f, "bayes"),
            AgentKind::Dcdqn => write!(f, "dcdqn"),
            AgentKind::Oracle => write!(f, "oracle"),
            AgentKind::Fixed(m) => write!(f, "fixed:{m}"),
        }
    }
}

fn parse_agent(s: &str) -> Result<AgentKind, ConfigError> {
    const KEY: &str = "agent.kind";
    match s {
        "illa" => Ok(AgentKind::Illa),
        "olla" => Ok(AgentKind::Olla),
        "bayes" => Ok(AgentKind::Bayes),
        "dcdqn" => Ok(AgentKind::Dcdqn),
        "oracle" => Ok(AgentKind::Oracle),
        other => {
            if let Some(m) = other.strip_prefix("fixed:") {
                let v: u8 = m
                    .parse()
                    .map_err(|e| bad(KEY, format!("fixed MCS `{m}`: {e}")))?;
                if v > 27 {
                    return Err(bad(KEY, format!("fixed MCS {v} out of range 0..=27")));
                }
                Ok(AgentKind::Fixed(McsIndex::new(v)))
            } else {
                Err(bad(
                    KEY,
                    format!("`{other}`: expected illa | olla | bayes | dcdqn | oracle | fixed:<m>"),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuntimeMode {
    Lockstep,
    Realtime,
}

/// OLLA knobs (the step asymmetry is derived from these two).
#[derive(Debug, Clone, PartialEq)]
pub struct OllaParams {
    pub delta_up: f64,
    pub target_bler: f64,
    pub update_on_rtx: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesParams {
    pub prior_alpha: f64,
    pub prior_beta: f64,
}

/// Decoupled-runtime knobs (only meaningful for `agent.kind = dcdqn`).
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeParams {
    pub mode: RuntimeMode,
    pub transport: Transport,
    /// Decision deadline in real-time mode; `None` blocks indefinitely.
    pub deadline: Option<Duration>,
    /// Per-TTI barrier on trainer completion (real-time mode).
    pub deterministic: bool,
    pub tti_pace: Option<Duration>,
    /// TTIs between staleness probes; 0 disables them.
    pub delta_probe_interval: u64,
    /// Test hook: replace each training step with a stall.
    pub train_stall: Option<Duration>,
}

/// A full, validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    pub agent: AgentKind,
    pub sim: SimConfig,
    pub tables: LinkTables,
    pub tracegen: TraceGenConfig,
    /// Channel-realization seed, independent of `seed` so sweeps can reuse
    /// one trace while the agent is reseeded (or vice versa).
    pub trace_seed: u64,
    pub olla: OllaParams,
    pub bayes: BayesParams,
    pub hp: Hyperparams,
    pub runtime: RuntimeParams,
    /// Agent + decode-outcome seed.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub name: Option<String>,
}

impl ResolvedConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let scenario = match raw.get("scenario.kind").unwrap_or("mobile") {
            "file" => {
                let path = raw.get("scenario.trace_file").ok_or_else(|| {
                    bad("scenario.trace_file", "required when scenario.kind = file")
                })?;
                Scenario::File(PathBuf::from(path))
            }
            kind => Scenario::Generated(
                kind.parse::<TraceKind>()
                    .map_err(|e| bad("scenario.kind", e.to_string()))?,
            ),
        };

        let agent = parse_agent(raw.get("agent.kind").unwrap_or("dcdqn"))?;

        let seed: u64 = raw.parse_as("run.seed", 1)?;
        let sd = SimConfig::default();
        let initial_mcs: u8 = raw.parse_as("sim.initial_mcs", sd.initial_mcs.value())?;
        if initial_mcs > 27 {
            return Err(bad("sim.initial_mcs", "out of range 0..=27"));
        }
        let initial_cqi: u8 = raw.parse_as("sim.initial_cqi", sd.initial_cqi.value())?;
        if initial_cqi > 15 {
            return Err(bad("sim.initial_cqi", "out of range 0..=15"));
        }
        let sim = SimConfig {
            d_tx: raw.parse_as("sim.d_tx", sd.d_tx)?,
            d_ack: raw.parse_as("sim.d_ack", sd.d_ack)?,
            d_cqi: raw.parse_as("sim.d_cqi", sd.d_cqi)?,
            cqi_period: raw.parse_as("sim.cqi_period", sd.cqi_period)?,
            d_decision: raw.parse_as("sim.d_decision", sd.d_decision)?,
            max_tx: raw.parse_as("sim.max_tx", sd.max_tx)?,
            n_rb: raw.parse_as("sim.n_rb", sd.n_rb)?,
            tti_count: raw.parse_as("sim.tti_count", sd.tti_count)?,
            window: raw.parse_as("sim.window", sd.window)?,
            seed,
            initial_mcs: McsIndex::new(initial_mcs),
            initial_cqi: CqiValue::new(initial_cqi),
        };
        sim.validate().map_err(|e| bad("sim", e))?;

        let td = LinkTables::default();
        let cqi_snr_step = raw.parse_as("link.cqi_snr_step", td.cqi_snr_step)?;
        if cqi_snr_step <= 0.0 {
            return Err(bad("link.cqi_snr_step", "must be > 0"));
        }
        let thr_step = raw.parse_as("link.mcs_thr_step", td.mcs_thr[1] - td.mcs_thr[0])?;
        if thr_step <= 0.0 {
            return Err(bad("link.mcs_thr_step", "must be > 0"));
        }
        let eff_base = raw.parse_as("link.mcs_eff_base", td.mcs_eff[0])?;
        if eff_base <= 0.0 {
            return Err(bad("link.mcs_eff_base", "must be > 0"));
        }
        let eff_step = raw.parse_as("link.mcs_eff_step", td.mcs_eff[1] - td.mcs_eff[0])?;
        if eff_step <= 0.0 {
            return Err(bad("link.mcs_eff_step", "must be > 0"));
        }
        let re_per_rb = raw.parse_as("link.re_per_rb", td.re_per_rb)?;
        if re_per_rb == 0 {
            return Err(bad("link.re_per_rb", "must be >= 1"));
        }
        let bler_steepness = raw.parse_as("link.bler_steepness", td.bler_steepness)?;
        if bler_steepness <= 0.0 {
            return Err(bad("link.bler_steepness", "must be > 0"));
        }
        let tables = LinkTables::from_params(
            raw.parse_as("link.cqi_snr_base", td.cqi_snr_base)?,
            cqi_snr_step,
            raw.parse_as("link.mcs_thr_base", td.mcs_thr[0])?,
            thr_step,
            eff_base,
            eff_step,
            re_per_rb,
            bler_steepness,
        );

        let gd = TraceGenConfig::default();
        let tracegen = TraceGenConfig {
            static_mean_db: raw.parse_as("trace.static_mean_db", gd.static_mean_db)?,
            static_jitter_db: raw.parse_as("trace.static_jitter_db", gd.static_jitter_db)?,
            walk_sigma_db: raw.parse_as("trace.walk_sigma_db", gd.walk_sigma_db)?,
            mean_min_db: raw.parse_as("trace.mean_min_db", gd.mean_min_db)?,
            mean_max_db: raw.parse_as("trace.mean_max_db", gd.mean_max_db)?,
            mobile_start_db: raw.parse_as("trace.mobile_start_db", gd.mobile_start_db)?,
            fading_coherence_ttis: raw
                .parse_as("trace.fading_coherence_ttis", gd.fading_coherence_ttis)?,
            fading_scale: raw.parse_as("trace.fading_scale", gd.fading_scale)?,
            switch_tti: raw.parse_as("trace.switch_tti", gd.switch_tti)?,
        };

        let olla = OllaParams {
            delta_up: raw.parse_as("olla.delta_up", 0.001)?,
            target_bler: raw.parse_as("olla.target_bler", 0.1)?,
            update_on_rtx: raw.parse_bool("olla.update_on_rtx", false)?,
        };
        if olla.delta_up <= 0.0 {
            return Err(bad("olla.delta_up", "must be > 0"));
        }
        if !(olla.target_bler > 0.0 && olla.target_bler < 1.0) {
            return Err(bad("olla.target_bler", "must be in (0,1)"));
        }

        let bayes = BayesParams {
            prior_alpha: raw.parse_as("bayes.prior_alpha", 1.0)?,
            prior_beta: raw.parse_as("bayes.prior_beta", 1.0)?,
        };
        if bayes.prior_alpha <= 0.0 || bayes.prior_beta <= 0.0 {
            return Err(bad("bayes.prior_alpha", "priors must be > 0"));
        }

        let hd = Hyperparams::default();
        let hp = Hyperparams {
            gamma: raw.parse_as("dqn.gamma", hd.gamma)?,
            lr: raw.parse_as("dqn.lr", hd.lr)?,
            batch: raw.parse_as("dqn.batch", hd.batch)?,
            train_interval: raw.parse_as("dqn.train_interval", hd.train_interval)?,
            update_interval: raw.parse_as("dqn.update_interval", hd.update_interval)?,
            eps_start: raw.parse_as("dqn.eps_start", hd.eps_start)?,
            eps_end: raw.parse_as("dqn.eps_end", hd.eps_end)?,
            eps_decay_ttis: raw.parse_as("dqn.eps_decay_ttis", hd.eps_decay_ttis)?,
            history_len: raw.parse_as("dqn.history_len", hd.history_len)?,
            hidden: raw.parse_as("dqn.hidden", hd.hidden)?,
            buffer_capacity: raw.parse_as("dqn.buffer_capacity", hd.buffer_capacity)?,
            reward_scale: raw.parse_as("dqn.reward_scale", hd.reward_scale)?,
        };
        hp.validate().map_err(|e| bad("dqn", e))?;

        let mode = match raw.get("runtime.mode").unwrap_or("lockstep") {
            "lockstep" => RuntimeMode::Lockstep,
            "realtime" => RuntimeMode::Realtime,
            other => {
                return Err(bad(
                    "runtime.mode",
                    format!("`{other}`: expected lockstep or realtime"),
                ))
            }
        };
        let transport = match raw.get("runtime.transport").unwrap_or("channel") {
            "channel" => Transport::Channel,
            "tcp" => Transport::Tcp,
            other => {
                return Err(bad(
                    "runtime.transport",
                    format!("`{other}`: expected channel or tcp"),
                ))
            }
        };
        let runtime = RuntimeParams {
            mode,
            transport,
            deadline: raw
                .parse_opt_u64("runtime.deadline_us", Some(500))?
                .map(Duration::from_micros),
            deterministic: raw.parse_bool("runtime.deterministic", false)?,
            tti_pace: raw
                .parse_opt_u64("runtime.tti_pace_us", None)?
                .map(Duration::from_micros),
            delta_probe_interval: raw.parse_as("runtime.delta_probe_interval", 0)?,
            train_stall: raw
                .parse_opt_u64("runtime.train_stall_ms", None)?
                .map(Duration::from_millis),
        };

        Ok(ResolvedConfig {
            scenario,
            agent,
            sim,
            tables,
            tracegen,
            trace_seed: raw.parse_as("trace.seed", 1)?,
            olla,
            bayes,
            hp,
            runtime,
            seed,
            out_dir: PathBuf::from(raw.get("run.out_dir").unwrap_or("runs")),
            name: raw.get("run.name").map(|s| s.to_string()),
        })
    }

    /// Serialize the fully-resolved state in config syntax. Parsing the echo
    /// resolves back to an identical config.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };

        match &self.scenario {
            Scenario::Generated(k) => kv("scenario.kind", k.to_string()),
            Scenario::File(p) => {
                kv("scenario.kind", "file".to_string());
                kv("scenario.trace_file", p.display().to_string());
            }
        }
        kv("agent.kind", self.agent.to_string());

        kv("sim.d_tx", self.sim.d_tx.to_string());
        kv("sim.d_ack", self.sim.d_ack.to_string());
        kv("sim.d_cqi", self.sim.d_cqi.to_string());
        kv("sim.cqi_period", self.sim.cqi_period.to_string());
        kv("sim.d_decision", self.sim.d_decision.to_string());
        kv("sim.max_tx", self.sim.max_tx.to_string());
        kv("sim.n_rb", self.sim.n_rb.to_string());
        kv("sim.tti_count", self.sim.tti_count.to_string());
        kv("sim.window", self.sim.window.to_string());
        kv("sim.initial_mcs", self.sim.initial_mcs.value().to_string());
        kv("sim.initial_cqi", self.sim.initial_cqi.value().to_string());

        kv("link.cqi_snr_base", fmt_f64(self.tables.cqi_snr_base));
        kv("link.cqi_snr_step", fmt_f64(self.tables.cqi_snr_step));
        kv("link.mcs_thr_base", fmt_f64(self.tables.mcs_thr[0]));
        kv(
            "link.mcs_thr_step",
            fmt_f64(self.tables.mcs_thr[1] - self.tables.mcs_thr[0]),
        );
        kv("link.mcs_eff_base", fmt_f64(self.tables.mcs_eff[0]));
        kv(
            "link.mcs_eff_step",
            fmt_f64(self.tables.mcs_eff[1] - self.tables.mcs_eff[0]),
        );
        kv("link.re_per_rb", self.tables.re_per_rb.to_string());
        kv("link.bler_steepness", fmt_f64(self.tables.bler_steepness));

        kv("trace.static_mean_db", fmt_f64(self.tracegen.static_mean_db));
        kv(
            "trace.static_jitter_db",
            fmt_f64(self.tracegen.static_jitter_db),
        );
        kv("trace.walk_sigma_db", fmt_f64(self.tracegen.walk_sigma_db));
        kv("trace.mean_min_db", fmt_f64(self.tracegen.mean_min_db));
        kv("trace.mean_max_db", fmt_f64(self.tracegen.mean_max_db));
        kv(
            "trace.mobile_start_db",
            fmt_f64(self.tracegen.mobile_start_db),
        );
        kv(
            "trace.fading_coherence_ttis",
            fmt_f64(self.tracegen.fading_coherence_ttis),
        );
        kv("trace.fading_scale", fmt_f64(self.tracegen.fading_scale));
        kv("trace.switch_tti", self.tracegen.switch_tti.to_string());
        kv("trace.seed", self.trace_seed.to_string());

        kv("olla.delta_up", fmt_f64(self.olla.delta_up));
        kv("olla.target_bler", fmt_f64(self.olla.target_bler));
        kv("olla.update_on_rtx", self.olla.update_on_rtx.to_string());

        kv("bayes.prior_alpha", fmt_f64(self.bayes.prior_alpha));
        kv("bayes.prior_beta", fmt_f64(self.bayes.prior_beta));

        kv("dqn.gamma", fmt_f64(self.hp.gamma));
        kv("dqn.lr", fmt_f64(self.hp.lr));
        kv("dqn.reward_scale", fmt_f64(self.hp.reward_scale));
        kv("dqn.batch", self.hp.batch.to_string());
        kv("dqn.train_interval", self.hp.train_interval.to_string());
        kv("dqn.update_interval", self.hp.update_interval.to_string());
        kv("dqn.eps_start", fmt_f64(self.hp.eps_start));
        kv("dqn.eps_end", fmt_f64(self.hp.eps_end));
        kv("dqn.eps_decay_ttis", self.hp.eps_decay_ttis.to_string());
        kv("dqn.history_len", self.hp.history_len.to_string());
        kv("dqn.hidden", self.hp.hidden.to_string());
        kv("dqn.buffer_capacity", self.hp.buffer_capacity.to_string());

        kv(
            "runtime.mode",
            match self.runtime.mode {
                RuntimeMode::Lockstep => "lockstep".to_string(),
                RuntimeMode::Realtime => "realtime".to_string(),
            },
        );
        kv(
            "runtime.transport",
            match self.runtime.transport {
                Transport::Channel => "channel".to_string(),
                Transport::Tcp => "tcp".to_string(),
            },
        );
        kv(
            "runtime.deadline_us",
            self.runtime
                .deadline
                .map_or(0, |d| d.as_micros() as u64)
                .to_string(),
        );
        kv(
            "runtime.deterministic",
            self.runtime.deterministic.to_string(),
        );
        kv(
            "runtime.tti_pace_us",
            self.runtime
                .tti_pace
                .map_or(0, |d| d.as_micros() as u64)
                .to_string(),
        );
        kv(
            "runtime.delta_probe_interval",
            self.runtime.delta_probe_interval.to_string(),
        );
        kv(
            "runtime.train_stall_ms",
            self.runtime
                .train_stall
                .map_or(0, |d| d.as_millis() as u64)
                .to_string(),
        );

        kv("run.seed", self.seed.to_string());
        kv("run.out_dir", self.out_dir.display().to_string());
        if let Some(name) = &self.name {
            kv("run.name", name.clone());
        }
        out
    }
}

/// Full-precision float formatting that parses back to the same value.
fn fmt_f64(x: f64) -> String {
    let s = format!("{x}");
    debug_assert_eq!(s.parse::<f64>().unwrap(), x);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_resolves_to_defaults() {
        let raw = RawConfig::parse("").unwrap();
        let cfg = ResolvedConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.agent, AgentKind::Dcdqn);
        assert_eq!(cfg.scenario, Scenario::Generated(TraceKind::Mobile));
        assert_eq!(cfg.sim.tti_count, 100_000);
        assert_eq!(cfg.sim.d_tx, 4);
        assert_eq!(cfg.sim.d_ack, 8);
        assert_eq!(cfg.hp.train_interval, 50);
        assert_eq!(cfg.hp.update_interval, 500);
        assert_eq!(cfg.runtime.mode, RuntimeMode::Lockstep);
        assert_eq!(cfg.runtime.deadline, Some(Duration::from_micros(500)));
        assert_eq!(cfg.olla.delta_up, 0.001);
        assert_eq!(cfg.olla.target_bler, 0.1);
    }

    #[test]
    fn comments_blanks_and_overrides_parse() {
        let text = "\
# scenario section
scenario.kind = static

agent.kind = olla
olla.delta_up = 0.01
sim.tti_count = 5000
";
        let mut raw = RawConfig::parse(text).unwrap();
        raw.set_pair("olla.delta_up=0.02").unwrap();
        let cfg = ResolvedConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.agent, AgentKind::Olla);
        assert_eq!(cfg.scenario, Scenario::Generated(TraceKind::Static));
        assert_eq!(cfg.olla.delta_up, 0.02);
        assert_eq!(cfg.sim.tti_count, 5000);
    }

    #[test]
    fn unknown_keys_and_syntax_are_rejected_with_context() {
        let err = RawConfig::parse("sim.ttis = 5\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { key } if key == "sim.ttis"));
        let err = RawConfig::parse("sim.tti_count 5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
        let err = RawConfig::parse("# ok\nagent.kind =\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn bad_values_name_the_key() {
        let raw = RawConfig::parse("sim.tti_count = many\n").unwrap();
        let err = ResolvedConfig::from_raw(&raw).unwrap_err();
        match err {
            ConfigError::BadValue { key, .. } => assert_eq!(key, "sim.tti_count"),
            other => panic!("expected BadValue, got {other:?}"),
        }
        let raw = RawConfig::parse("agent.kind = fixed:99\n").unwrap();
        assert!(ResolvedConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse("agent.kind = fixed:9\n").unwrap();
        let cfg = ResolvedConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.agent, AgentKind::Fixed(McsIndex::new(9)));
        let raw = RawConfig::parse("sim.initial_cqi = 16\n").unwrap();
        assert!(ResolvedConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse("olla.target_bler = 1.5\n").unwrap();
        assert!(ResolvedConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn file_scenario_requires_path() {
        let raw = RawConfig::parse("scenario.kind = file\n").unwrap();
        assert!(ResolvedConfig::from_raw(&raw).is_err());
        let raw =
            RawConfig::parse("scenario.kind = file\nscenario.trace_file = /tmp/t.csv\n").unwrap();
        let cfg = ResolvedConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.scenario, Scenario::File(PathBuf::from("/tmp/t.csv")));
    }

    #[test]
    fn schema_is_sorted_for_binary_search() {
        let mut sorted = SCHEMA.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, SCHEMA);
    }

    #[test]
    fn echo_round_trips_exactly() {
        let text = "\
scenario.kind = mobile-to-static
agent.kind = dcdqn
sim.tti_count = 12345
sim.d_decision = 9
dqn.lr = 0.0007
dqn.hidden = 32
trace.seed = 42
run.seed = 7
runtime.mode = realtime
runtime.deadline_us = 250
runtime.train_stall_ms = 5
run.name = echo-check
";
        let cfg = ResolvedConfig::from_raw(&RawConfig::parse(text).unwrap()).unwrap();
        let echoed = cfg.echo();
        let cfg2 = ResolvedConfig::from_raw(&RawConfig::parse(&echoed).unwrap()).unwrap();
        assert_eq!(cfg, cfg2);
        // And the echo of the echo is byte-identical (stable serialization).
        assert_eq!(echoed, cfg2.echo());
    }

    #[test]
    fn zero_means_disabled_for_optional_durations() {
        let raw = RawConfig::parse("runtime.deadline_us = 0\n").unwrap();
        let cfg = ResolvedConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.runtime.deadline, None);
        let raw = RawConfig::parse("runtime.train_stall_ms = 7\n").unwrap();
        let cfg = ResolvedConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.runtime.train_stall, Some(Duration::from_millis(7)));
    }

    #[test]
    fn run_seed_feeds_sim_and_trace_seed_is_independent() {
        let raw = RawConfig::parse("run.seed = 99\ntrace.seed = 3\n").unwrap();
        let cfg = ResolvedConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.sim.seed, 99);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.trace_seed, 3);
    }
}
