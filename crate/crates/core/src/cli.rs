//! Command-line front end: `validate`, `run`, `sweep` and `oracle`.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration/trace/output error,
//! 3 solver failure, 4 oracle deviation above tolerance.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use thiserror::Error;

use crate::energy::{load_nre_trace, synthetic_diurnal_trace, NreTrace, TraceError};
use crate::model::{ConfigDocument, ConfigError, SystemConfig};
use crate::oracle::{check_against_oracle, OracleError, ORACLE_TOLERANCE};
use crate::simulator::{
    run, run_many, write_backlog_csv, write_channels_csv, write_decisions_csv, write_ledger_csv,
    write_metrics_csv, write_slots_csv, RunMetrics, SimError,
};

pub const DEFAULT_SWEEP: [f64; 5] = [0.01, 0.0316, 0.1, 0.316, 1.0];

#[derive(Debug, Parser)]
#[command(name = "sgcell", version, about = "Smart-grid small-cell scheduling and beamforming simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a configuration file and print its derived quantities.
    Validate(ConfigArgs),
    /// Simulate one configuration and write CSV reports.
    Run(RunArgs),
    /// Simulate a list of control parameters (and seeds) concurrently.
    Sweep(SweepArgs),
    /// Compare a single-link run against the brute-force scalar oracle.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override a configuration key before validation, e.g. `control_v=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Shorthand for `--set rng_seed=N`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Irradiance CSV; the bundled synthetic day is used when omitted.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub dump_channels: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub dump_slots: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP)]
    pub v_values: Vec<f64>,
    /// Seeds per V, counting up from the configured seed.
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    /// Concurrent runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
    #[error("{0}")]
    Output(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("oracle deviation {deviation:e} exceeds {tolerance:e}")]
    OracleDeviation { deviation: f64, tolerance: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(_) | CliError::Trace(_) | CliError::Output(_) => 2,
            CliError::Solver(_) => 3,
            CliError::OracleDeviation { .. } => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Trace(t) => CliError::Trace(t),
            SimError::Io(_) | SimError::Csv(_) => CliError::Output(e.to_string()),
            SimError::Pool(msg) => CliError::Usage(msg),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

/// Parse `argv` (program name first), execute, and return the exit code.
pub fn main_from_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Validate(args) => {
            let cfg = load_with_overrides(args)?;
            println!("valid configuration");
            print_config_summary(&cfg);
            Ok(())
        }
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

/// Read the document, apply `--set` overrides and `--seed`, then validate.
pub fn load_with_overrides(args: &ConfigArgs) -> Result<SystemConfig, CliError> {
    let raw = std::fs::read_to_string(&args.config).map_err(ConfigError::from)?;
    let mut doc: Value = serde_json::from_str(&raw).map_err(ConfigError::from)?;
    for entry in &args.overrides {
        apply_override(&mut doc, entry)?;
    }
    if let Some(seed) = args.seed {
        apply_override(&mut doc, &format!("rng_seed={seed}"))?;
    }
    let doc: ConfigDocument = serde_json::from_value(doc).map_err(ConfigError::from)?;
    Ok(doc.validate()?)
}

/// Set `key=value` in a JSON document. Dotted keys address nested objects;
/// values are parsed as JSON and fall back to plain strings.
pub fn apply_override(doc: &mut Value, entry: &str) -> Result<(), CliError> {
    let (key, value) = entry
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{entry}` is not KEY=VALUE")))?;
    let value: Value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    let mut target = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let obj = target
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("cannot descend into `{part}` of `{key}`")))?;
        target = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    target
        .as_object_mut()
        .ok_or_else(|| CliError::Usage(format!("cannot set `{key}`")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn load_trace(path: Option<&Path>) -> Result<NreTrace, CliError> {
    match path {
        Some(p) => Ok(load_nre_trace(p)?),
        None => Ok(synthetic_diurnal_trace()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn print_config_summary(cfg: &SystemConfig) {
    println!(
        "  {} ScBSs, {} UEs, {} antennas, {} frames of {} slots ({} s each)",
        cfg.num_scbs,
        cfg.num_ues(),
        cfg.num_tx_antennas,
        cfg.num_frames,
        cfg.slots_per_frame,
        cfg.slot_duration_s
    );
    println!("  V = {}, prices buy {:e} / sell {:e} cents per slot per mW", cfg.control_v, cfg.price_buy, cfg.price_sell);
    println!(
        "  rate cap used only in drift constants: {:.4} nats/slot (not a property of the model; channels are unbounded)",
        cfg.r_max_cap
    );
}

fn print_metrics(m: &RunMetrics) {
    println!("  V = {}, seed = {}", m.control_v, m.seed);
    println!("  average delay            {:.6} slots", m.avg_delay_slots);
    println!("  average expenditure      {:e} cents/frame", m.avg_expenditure_per_frame);
    println!("  annualized expenditure   {:e} cents/year", m.annualized_expenditure);
    println!("  minimum drift slack      {:e}", m.drift_slack_min);
    println!("  empirical rates          {:?}", m.empirical_avg_rate);
    println!("  stability condition met  {}", m.stability_ok());
    if m.rate_limit_violations > 0 || m.infeasible_slots > 0 || m.multimodal_slots > 0 {
        println!(
            "  warnings: {} rate-limit violations, {} infeasible slots, {} multimodal slots",
            m.rate_limit_violations, m.infeasible_slots, m.multimodal_slots
        );
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load_with_overrides(&args.config)?;
    let trace = load_trace(args.trace.as_deref())?;
    let report = run(&cfg, &trace)?;
    std::fs::create_dir_all(&args.out)?;
    write_metrics_csv(create(&args.out.join("metrics.csv"))?, [&report.metrics])?;
    write_ledger_csv(create(&args.out.join("ledger.csv"))?, &report)?;
    write_decisions_csv(create(&args.out.join("decisions.csv"))?, &cfg, &report)?;
    write_backlog_csv(create(&args.out.join("backlog.csv"))?, &cfg, &report)?;
    if let Some(p) = &args.dump_slots {
        write_slots_csv(create(p)?, &cfg, &report)?;
    }
    if let Some(p) = &args.dump_channels {
        write_channels_csv(create(p)?, &cfg)?;
    }
    println!("run complete, reports in {}", args.out.display());
    print_config_summary(&cfg);
    print_metrics(&report.metrics);
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    if args.v_values.is_empty() || args.replicates == 0 {
        return Err(CliError::Usage("sweep needs at least one V and one replicate".into()));
    }
    let base = load_with_overrides(&args.config)?;
    let trace = load_trace(args.trace.as_deref())?;
    let mut configs = Vec::new();
    for &v in &args.v_values {
        for r in 0..args.replicates {
            let mut doc = base.to_document();
            doc.control_v = v;
            doc.rng_seed = Some(base.rng_seed.wrapping_add(r));
            configs.push(doc.validate()?);
        }
    }
    let reports = run_many(&configs, &trace, args.jobs)?;
    std::fs::create_dir_all(&args.out)?;
    write_metrics_csv(create(&args.out.join("metrics.csv"))?, reports.iter().map(|r| &r.metrics))?;

    println!("sweep complete, metrics in {}", args.out.join("metrics.csv").display());
    println!("{:>10} {:>8} {:>14} {:>18}", "V", "seed", "delay (slots)", "cents/frame");
    for r in &reports {
        let m = &r.metrics;
        println!(
            "{:>10} {:>8} {:>14.6} {:>18.6e}",
            m.control_v, m.seed, m.avg_delay_slots, m.avg_expenditure_per_frame
        );
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let cfg = load_with_overrides(&args.config)?;
    let trace = load_trace(args.trace.as_deref())?;
    let (report, _) = check_against_oracle(&cfg, &trace).map_err(|e| match e {
        OracleError::Unsupported { .. } => CliError::Usage(e.to_string()),
        OracleError::Simulation(s) => s.into(),
    })?;
    println!("compared {} slots with the scalar oracle", report.slots);
    println!("  max objective deviation  {:e} (slot {})", report.max_objective_deviation, report.worst_slot);
    println!("  max phi difference       {:e}", report.max_phi_deviation);
    if report.passes() {
        println!("  within tolerance {ORACLE_TOLERANCE:e}");
        Ok(())
    } else {
        Err(CliError::OracleDeviation {
            deviation: report.max_objective_deviation,
            tolerance: ORACLE_TOLERANCE,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_set_scalars_and_nested_keys() {
        let mut doc = serde_json::json!({"control_v": 1.0});
        apply_override(&mut doc, "control_v=0.1").unwrap();
        apply_override(&mut doc, "phi_search.grid_points=8").unwrap();
        apply_override(&mut doc, "rate_weights=dynamic-backlog").unwrap();
        assert_eq!(doc["control_v"], 0.1);
        assert_eq!(doc["phi_search"]["grid_points"], 8);
        assert_eq!(doc["rate_weights"], "dynamic-backlog");
    }

    #[test]
    fn malformed_override_is_a_usage_error() {
        let mut doc = serde_json::json!({});
        assert_eq!(apply_override(&mut doc, "control_v").unwrap_err().exit_code(), 1);
    }

    #[test]
    fn unknown_subcommand_exits_one() {
        assert_eq!(main_from_args(["sgcell", "frobnicate"]), 1);
        assert_eq!(main_from_args(["sgcell", "run"]), 1);
    }
}
