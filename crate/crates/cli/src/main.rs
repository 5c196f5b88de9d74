//! `softfusion`: experiment runner for the soft-fusion covert communication game.
//!
//! Every subcommand writes its CSV tables and a `<subcommand>_manifest.json`
//! into the output directory. Exit status: 0 on success, 2 for configuration
//! errors, 3 for solver failures.

mod commands;
mod config;
mod format;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use softfusion_core::system::sinr_threshold;

use crate::commands::Ctx;
use crate::config::{ConfigError, ExperimentConfig, Grids};
use crate::manifest::Report;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "SOFTFUSION_OUT";
const DEFAULT_OUT: &str = "softfusion-out";

#[derive(Parser, Debug)]
#[command(name = "softfusion", version, about = "Soft-fusion covert communication experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file or a previous run manifest. Defaults apply to omitted fields.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override a config field by dotted path, e.g. `grids.alice.spacing=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Detection-error weight; sets `params.beta` and `beta_list`.
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Warden cost weight; sets `params.alpha` and `alpha_list`.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Geometric deployment parameter; sets `geometric.p_list`.
    #[arg(long, global = true)]
    p: Option<f64>,

    /// Use 0.01 mW power and threshold spacing. Needs several GB and long solves.
    #[arg(long, global = true)]
    full_grids: bool,

    /// Output directory (overrides the config and the environment).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Error probabilities of one power pair over a threshold grid.
    ThresholdSweep,
    /// Detection/reliability trade-off over beta for each Warden policy.
    Tradeoff,
    /// Equilibrium strategies and operating point at one (alpha, beta).
    Equilibrium,
    /// Expected Warden count against beta and against alpha.
    EwSweep,
    /// Geometric Warden deployments.
    Geometric,
    /// Disjoint robust-interval plan and its verification.
    Robustness,
    /// Monte Carlo check of the analytic probabilities.
    Validate,
    /// Print the resolved configuration as JSON.
    Config,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ThresholdSweep => "threshold_sweep",
            Command::Tradeoff => "tradeoff",
            Command::Equilibrium => "equilibrium",
            Command::EwSweep => "ew_sweep",
            Command::Geometric => "geometric",
            Command::Robustness => "robustness",
            Command::Validate => "validate",
            Command::Config => "config",
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if cli.full_grids {
        let full = serde_json::to_value(Grids::full()).expect("grids serialize");
        cfg = cfg.set_value("grids", full)?;
        let g = &cfg.grids;
        let (a, j, t) = (g.alice.levels().len(), g.jammer.levels().len(), g.threshold.levels().len());
        eprintln!(
            "warning: --full-grids solves {}x{} games per W set; expect several GB of memory and long run times",
            a * j,
            t * cfg.w_set.0.len()
        );
    }
    let flag = |v: f64| serde_json::json!(v);
    if let Some(b) = cli.beta {
        cfg = cfg.set_value("params.beta", flag(b)).map_err(|e| ConfigError(format!("--beta {b}: {e}")))?;
        cfg = cfg.set_value("beta_list", serde_json::json!([b])).map_err(|e| ConfigError(format!("--beta {b}: {e}")))?;
    }
    if let Some(a) = cli.alpha {
        cfg = cfg.set_value("params.alpha", flag(a)).map_err(|e| ConfigError(format!("--alpha {a}: {e}")))?;
        cfg = cfg.set_value("alpha_list", serde_json::json!([a])).map_err(|e| ConfigError(format!("--alpha {a}: {e}")))?;
    }
    if let Some(p) = cli.p {
        cfg = cfg.set_value("geometric.p_list", serde_json::json!([p])).map_err(|e| ConfigError(format!("--p {p}: {e}")))?;
    }
    for spec in &cli.overrides {
        cfg = cfg.apply_override(spec)?;
    }
    Ok(cfg)
}

fn output_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    if let Command::Config = cli.command {
        println!("{}", serde_json::to_string_pretty(cfg)?);
        return Ok(());
    }
    let started = SystemTime::now();
    let clock = Instant::now();
    let out = output_dir(cli, cfg);
    std::fs::create_dir_all(&out).with_context(|| format!("creating output directory {}", out.display()))?;
    let tau = sinr_threshold(&cfg.system())?;
    let mut ctx = Ctx { cfg, tau, out: &out, report: Report::default() };
    match cli.command {
        Command::ThresholdSweep => commands::threshold_sweep(&mut ctx)?,
        Command::Tradeoff => commands::tradeoff(&mut ctx)?,
        Command::Equilibrium => commands::equilibrium(&mut ctx)?,
        Command::EwSweep => commands::ew_sweep(&mut ctx)?,
        Command::Geometric => commands::geometric(&mut ctx)?,
        Command::Robustness => commands::robustness(&mut ctx)?,
        Command::Validate => commands::validate(&mut ctx)?,
        Command::Config => unreachable!(),
    }
    let name = cli.command.name();
    let path = out.join(format!("{name}_manifest.json"));
    manifest::write(&path, name, cfg, tau, cli.full_grids, started, clock.elapsed(), &ctx.report)?;
    for file in &ctx.report.outputs {
        println!("{}", out.join(file).display());
    }
    println!("{}", path.display());
    Ok(())
}

/// Exit status for a failed run.
fn exit_status(err: &anyhow::Error) -> u8 {
    use softfusion_core::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Capacity { .. }) => 2,
        Some(_) => 3,
        None if err.downcast_ref::<ConfigError>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_status(&e);
            let kind = if code == 3 { "solver error" } else { "error" };
            eprintln!("{kind}: {e:#}");
            ExitCode::from(code)
        }
    }
}
