//! Batch front end for the `tids-core` simulator: scenario configs, gas
//! schedule files, single runs, parameter sweeps and closed-form reports.

pub mod analyze;
pub mod config;
pub mod gasfile;
pub mod run;
pub mod sweep;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use tids_core::actors::Mode;
use tids_core::ledger::GasSchedule;

use analyze::Analysis;
use config::ScenarioConfig;
use run::Attack;
use sweep::{Axis, SweepOptions};
use table::Format;

#[derive(Debug, Parser)]
#[command(name = "tids", version, about = "Timed information delivery simulator")]
pub struct Cli {
    /// Gas schedule overrides (TOML).
    #[arg(long, env = "TIDS_GAS_SCHEDULE", global = true)]
    pub gas_schedule: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and print its summary.
    Run(RunArgs),
    /// Sweep one parameter and emit a table.
    Sweep(SweepArgs),
    /// Print closed-form values.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeOverride {
    Silent,
    Strawman,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; nothing is written without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeOverride>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "none")]
    pub attack: Attack,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub sweep_axis: Axis,
    /// `start:end[:step]`, inclusive, or a comma-separated list.
    #[arg(long)]
    pub sweep_range: String,
    /// Monte Carlo trials per point.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u32,
    /// Full simulations per point on the A_T axis.
    #[arg(long, default_value_t = 0)]
    pub sim_trials: u32,
}

/// Process exit code for a failed invocation.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<config::ConfigError>().is_some() {
        2
    } else {
        1
    }
}

fn load_config(common: &Common, gas: &GasSchedule) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::parse("<defaults>", "")?,
    };
    if let Some(seed) = common.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(mode) = common.mode {
        cfg.scenario.mode = match mode {
            ModeOverride::Silent => Mode::Silent,
            ModeOverride::Strawman => Mode::Strawman,
        };
        cfg.scenario.pool_size = cfg.scenario.pool_size.max(cfg.scenario.recruits());
        cfg.scenario.validate()?;
    }
    cfg.scenario.gas = gas.clone();
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Runs one invocation. Human output goes to `stdout`, notes about written
/// files to `stderr`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<()> {
    let gas = match &cli.gas_schedule {
        Some(path) => gasfile::load_gas_schedule(path)?,
        None => GasSchedule::default(),
    };
    match &cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args.common, &gas)?;
            let out = run::execute(&cfg, args.attack)?;
            let summary = run::summary(&out);
            stdout.write_all(summary.as_bytes())?;
            if let Some(dir) = args.common.out.as_ref().or(cfg.output_dir.as_ref()) {
                let format = args.common.format.unwrap_or(Format::Jsonl);
                let trace =
                    write_file(dir, &format!("trace.{}", format.extension()), &run::trace_records(&out, format)?)?;
                let summary = write_file(dir, "summary.txt", &summary)?;
                writeln!(stderr, "wrote {} and {}", trace.display(), summary.display())?;
            }
        }
        Command::Sweep(args) => {
            let cfg = load_config(&args.common, &gas)?;
            let opts = SweepOptions {
                axis: args.sweep_axis,
                points: sweep::parse_range(&args.sweep_range, args.sweep_axis.integral())?,
                trials: args.trials,
                sim_trials: args.sim_trials,
            };
            let table = sweep::sweep(&cfg, &opts)?;
            let format = args.common.format.unwrap_or(Format::Csv);
            let text = table.to_string(format);
            match args.common.out.as_ref().or(cfg.output_dir.as_ref()) {
                Some(dir) => {
                    let name = format!("sweep_{}.{}", opts.axis.name(), format.extension());
                    let path = write_file(dir, &name, &text)?;
                    writeln!(stdout, "{} points on axis {}", table.rows.len(), opts.axis.name())?;
                    writeln!(stderr, "wrote {}", path.display())?;
                }
                None => stdout.write_all(text.as_bytes())?,
            }
            if opts.axis == Axis::X {
                if let Some(i) = sweep::argmin(&table, "expected_deposit") {
                    writeln!(stderr, "empirical minimum at x = {}", table.rows[i][0].text())?;
                }
            }
        }
        Command::Analyze { what } => {
            stdout.write_all(analyze::analyze(what, &gas)?.as_bytes())?;
        }
    }
    Ok(())
}
