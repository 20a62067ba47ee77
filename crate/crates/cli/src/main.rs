//! `dclink` — run link-adaptation experiments from flat config files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use dclink_core::config::{RawConfig, ResolvedConfig};
use dclink_core::harness::{run_experiment, run_sweep};
use dclink_core::trace::{generate_trace, write_trace_csv, TraceGenConfig, TraceKind};

#[derive(Parser)]
#[command(name = "dclink", version, about = "Trace-driven single-UE link-adaptation simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write its artifacts under run.out_dir.
    Run {
        /// Config file with flat `section.key = value` lines.
        #[arg(long)]
        config: PathBuf,
        /// Override one key, e.g. `--set run.seed=7` (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Rerun one config with a single key swept over several values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Key to sweep, e.g. `sim.d_ack`.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. `0,2,4,8`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Generate an SNR trace CSV without running anything.
    GenTrace {
        /// `static`, `mobile`, or `mobile-to-static`.
        #[arg(long)]
        kind: String,
        /// Trace length in TTIs.
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, overrides: &[String]) -> Result<RawConfig> {
    let mut raw =
        RawConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?;
    for kv in overrides {
        raw.set_pair(kv).with_context(|| format!("--set {kv}"))?;
    }
    Ok(raw)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "n/a".into())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run { config, set } => {
            let raw = load(&config, &set)?;
            let cfg = ResolvedConfig::from_raw(&raw)?;
            let out = run_experiment(&cfg)?;
            let s = &out.summary;
            println!("run dir          {}", out.dir.display());
            println!("agent/scenario   {} / {}", s.agent, s.scenario);
            println!("ttis             {}", s.tti_count);
            println!("mean tput        {:.6} Mbps", s.mean_tput_mbps);
            println!("last quartile    {:.6} Mbps", s.last_quartile_tput_mbps);
            println!("bler             {}", opt(s.bler));
            println!("fallback rate    {:.6}", s.fallback_rate);
            println!(
                "convergence tti  {}",
                s.convergence_tti
                    .map(|t| t.to_string())
                    .unwrap_or_else(|| "not reached".into())
            );
            if let Some(d) = s.delta_q_avg {
                println!("delta_q avg      {d:.6}");
            }
        }
        Cmd::Sweep {
            config,
            param,
            values,
            set,
        } => {
            let raw = load(&config, &set)?;
            let out = run_sweep(&raw, &param, &values)?;
            for row in &out.rows {
                match (&row.summary, &row.error) {
                    (Some(s), _) => println!(
                        "{param}={:<14} mean {:.6} Mbps  bler {}  fallback {:.6}",
                        row.value,
                        s.mean_tput_mbps,
                        opt(s.bler),
                        s.fallback_rate
                    ),
                    (None, Some(e)) => println!("{param}={:<14} error: {e}", row.value),
                    (None, None) => unreachable!(),
                }
            }
            println!("sweep csv        {}", out.csv_path.display());
        }
        Cmd::GenTrace {
            kind,
            len,
            seed,
            out,
        } => {
            if len == 0 {
                bail!("--len must be at least 1");
            }
            let kind: TraceKind = kind.parse()?;
            let trace = generate_trace(kind, len, seed, &TraceGenConfig::default());
            write_trace_csv(&trace, &out)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} ({len} TTIs, kind {kind}, seed {seed})", out.display());
        }
    }
    Ok(())
}
