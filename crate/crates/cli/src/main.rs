//! `vcell`: run virtual-cell Monte Carlo sweeps from a JSON config.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use vcell_core::channel::SimulationConfig;
use vcell_core::clustering::{AffiliationRule, ClusteringError};
use vcell_core::error::ConfigError;
use vcell_core::evaluation::{
    aggregate, run_sweep, write_aggregate_csv, write_csv, write_jsonl, ClusteringMethod, Execution,
};

const WORKERS_ENV: &str = "VCELL_WORKERS";

#[derive(Parser)]
#[command(name = "vcell", version, about = "Virtual-cell uplink sum-rate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write raw + aggregate tables to an output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override a config key, e.g. `--set num_realizations=500`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Clustering methods to run (default: all).
        #[arg(long = "method", value_delimiter = ',')]
        methods: Vec<ClusteringMethod>,
        /// Affiliation rules to run (default: both).
        #[arg(long = "rule", value_delimiter = ',')]
        rules: Vec<AffiliationRule>,
        /// Number of worker threads; defaults to all cores.
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Evaluate realizations one after another on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Check a config and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

enum Failure {
    Config(String),
    Capacity(String),
    Other(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Capacity(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Capacity(m) | Failure::Other(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<vcell_core::Error> for Failure {
    fn from(e: vcell_core::Error) -> Self {
        match e {
            vcell_core::Error::Config(c) => c.into(),
            vcell_core::Error::Clustering(c @ ClusteringError::Capacity { .. }) => {
                Failure::Capacity(c.to_string())
            }
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

/// Sets `dotted.key.path` in a JSON object. The value is parsed as JSON when
/// possible and taken as a string otherwise.
fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let bad = |reason: &str| ConfigError::Invalid {
        field: assignment.split('=').next().unwrap_or(assignment).to_string(),
        reason: reason.to_string(),
    };
    let (key, raw) = assignment.split_once('=').ok_or_else(|| bad("override must be KEY=VALUE"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut parts = key.split('.').peekable();
    let mut node = doc;
    while let Some(part) = parts.next() {
        let obj = node.as_object_mut().ok_or_else(|| bad("path does not lead to an object"))?;
        if parts.peek().is_none() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(bad("empty key"))
}

fn load_config(path: &Path, overrides: &[String]) -> Result<SimulationConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut doc: Value = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        field: ".".into(),
        message: e.to_string(),
    })?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    SimulationConfig::from_json_value(doc)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    config_path: String,
    output_dir: String,
    methods: &'a [ClusteringMethod],
    rules: &'a [AffiliationRule],
    overrides: &'a [String],
    timestamp: String,
    master_seed: u64,
    num_realizations: usize,
    execution: &'static str,
    workers: usize,
    elapsed_seconds: f64,
    raw_rows: usize,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    config_path: &Path,
    out: &Path,
    overrides: &[String],
    mut methods: Vec<ClusteringMethod>,
    mut rules: Vec<AffiliationRule>,
    workers: Option<usize>,
    sequential: bool,
) -> Result<(), Failure> {
    let cfg = load_config(config_path, overrides)?;
    if methods.is_empty() {
        methods = ClusteringMethod::ALL.to_vec();
    }
    if rules.is_empty() {
        rules = AffiliationRule::ALL.to_vec();
    }
    methods.sort_unstable();
    methods.dedup();
    rules.sort_unstable();
    rules.dedup();
    if workers == Some(0) {
        return Err(Failure::Config(format!("{WORKERS_ENV} must be at least 1")));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Other(e.to_string()))?;
    let execution = if sequential { Execution::Sequential } else { Execution::Parallel };
    log::info!(
        "running {} realizations, methods {:?}, rules {:?}",
        cfg.num_realizations,
        methods,
        rules
    );
    let started = Instant::now();
    let rows = pool.install(|| run_sweep(&cfg, &methods, &rules, execution))?;
    let elapsed = started.elapsed().as_secs_f64();
    let agg = aggregate(&rows);

    // Nothing touches the output directory until the sweep has succeeded.
    fs::create_dir_all(out)?;
    write_csv(&rows, BufWriter::new(File::create(out.join("results.csv"))?))?;
    write_jsonl(&rows, BufWriter::new(File::create(out.join("results.jsonl"))?))?;
    write_aggregate_csv(&agg, BufWriter::new(File::create(out.join("aggregate.csv"))?))?;
    write_json(&out.join("config.json"), &cfg)?;
    write_json(
        &out.join("manifest.json"),
        &RunManifest {
            config_path: config_path.display().to_string(),
            output_dir: out.display().to_string(),
            methods: &methods,
            rules: &rules,
            overrides,
            timestamp: chrono::Utc::now().to_rfc3339(),
            master_seed: cfg.master_seed,
            num_realizations: cfg.num_realizations,
            execution: if sequential { "sequential" } else { "parallel" },
            workers: if sequential { 1 } else { pool.current_num_threads() },
            elapsed_seconds: elapsed,
            raw_rows: rows.len(),
        },
    )?;

    println!("{:<13} {:<13} {:>5} {:>16} {:>12}", "method", "rule", "cells", "mean rate b/s", "stderr");
    for a in &agg {
        println!(
            "{:<13} {:<13} {:>5} {:>16.1} {:>12.1}",
            a.method.as_str(),
            a.rule.as_str(),
            a.num_cells,
            a.mean_achieved_rate_bps,
            a.stderr_achieved_rate_bps
        );
    }
    println!("{} rows in {:.1} s -> {}", rows.len(), elapsed, out.display());
    Ok(())
}

#[derive(Serialize)]
struct Resolved<'a> {
    config: &'a SimulationConfig,
    derived: Derived,
}

#[derive(Serialize)]
struct Derived {
    power_budget_mw: f64,
    noise_power_mw_per_band: Vec<f64>,
}

fn cmd_validate(config_path: &Path, overrides: &[String]) -> Result<(), Failure> {
    let cfg = load_config(config_path, overrides)?;
    let resolved = Resolved {
        config: &cfg,
        derived: Derived {
            power_budget_mw: cfg.power_budget_mw(),
            noise_power_mw_per_band: vec![cfg.noise_power_mw(); cfg.num_bands],
        },
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&resolved).map_err(|e| Failure::Other(e.to_string()))?
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            overrides,
            methods,
            rules,
            workers,
            sequential,
        } => cmd_run(&config, &out, &overrides, methods, rules, workers, sequential),
        Command::Validate { config, overrides } => cmd_validate(&config, &overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
