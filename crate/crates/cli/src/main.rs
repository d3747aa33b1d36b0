mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anismhd::solver::SystemKind;
use clap::{Args, Parser, Subcommand};

use commands::Check;
use config::{parse_range, parse_system, Campaign, Overrides, TimeRange};
use error::{CliError, Result};

/// Campaign runner for anisotropic MHD decay experiments.
#[derive(Parser, Debug)]
#[command(name = "anismhd", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Opts {
    /// Campaign file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Points per axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Box side length.
    #[arg(long = "box", global = true)]
    box_size: Option<f64>,
    #[arg(long, global = true, value_parser = parse_system)]
    system: Option<SystemKind>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Geometric time samples lo:hi:n.
    #[arg(long = "t-range", global = true, value_parser = parse_range)]
    t_range: Option<TimeRange>,
    /// Final time of the run.
    #[arg(long = "T", global = true)]
    t_end: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel norm tables and fitted decay exponents.
    Kernels,
    /// Linear decay experiments under the heat semigroups.
    Linear,
    /// Integrate the nonlinear system and record norms and checkpoints.
    Run,
    /// Check the integral equation on a stored trajectory.
    Duhamel(TrajectoryArg),
    /// Decay rates and profile gaps of a stored trajectory.
    Asympt(TrajectoryArg),
    /// Summarize every result table in the output directory.
    Report,
}

#[derive(Args, Debug)]
struct TrajectoryArg {
    /// Run directory; defaults to the output directory.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

impl Opts {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            grid: self.grid,
            box_size: self.box_size,
            system: self.system,
            seed: self.seed,
            t_range: self.t_range,
            t_end: self.t_end,
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("ANISMHD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("ANISMHD_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn execute(cli: &Cli) -> Result<Vec<Check>> {
    init_threads()?;
    let ov = cli.opts.overrides();
    let config = cli.opts.config.as_deref();
    match &cli.command {
        Command::Kernels => commands::kernels::run(&Campaign::load(config, &ov)?),
        Command::Linear => commands::linear::run(&Campaign::load(config, &ov)?),
        Command::Run => commands::run::run(&Campaign::load(config, &ov)?),
        Command::Duhamel(a) | Command::Asympt(a) => {
            let dir = match (&a.trajectory, &ov.out) {
                (Some(d), _) | (None, Some(d)) => d.clone(),
                (None, None) => Campaign::load(config, &ov)?.out,
            };
            let (c, stored) = commands::analyze::load(&dir, config, &ov)?;
            if matches!(cli.command, Command::Duhamel(_)) {
                commands::analyze::duhamel(&c, &stored)
            } else {
                commands::analyze::asympt(&c, &stored)
            }
        }
        Command::Report => {
            let dir = match &ov.out {
                Some(d) => d.clone(),
                None => Campaign::load(config, &ov)?.out,
            };
            commands::report::run(&dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(checks) => {
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!("{failed} of {} checks failed", checks.len());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
