use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use solwave_cli::commands::{self, Context};
use solwave_cli::config::parse_config;
use solwave_cli::error::Result;

#[derive(Parser)]
#[command(name = "solwave", version, about = "Threshold and wave-velocity solver for spatially coupled systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration
    config: PathBuf,
    /// Output directory (overrides `out` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress on stderr
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Single-system potential curves and fixed points
    Potential(Common),
    /// Algorithmic and potential thresholds
    Thresholds(Common),
    /// Coupled-chain iteration from a step profile
    Simulate(Common),
    /// Predicted and measured wave velocity
    Velocity(Common),
    /// Velocity over a parameter and width grid, in parallel
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (overrides `workers` in the config)
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let (common, workers) = match &cli.command {
        Command::Potential(c) | Command::Thresholds(c) | Command::Simulate(c) | Command::Velocity(c) => (c, None),
        Command::Sweep { common, workers } => (common, *workers),
    };
    let cfg = parse_config(&common.config)?;
    let out = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let ctx = Context::new(out, common.quiet);
    match cli.command {
        Command::Potential(_) => {
            commands::cmd_potential(&cfg, &ctx)?;
        }
        Command::Thresholds(_) => {
            let r = commands::cmd_thresholds(&cfg, &ctx)?;
            println!("eps_s {}", solwave_cli::output::num(r.eps_s));
            println!("eps_c {}", solwave_cli::output::num(r.eps_c));
            if let (Some(s), Some(c)) = (r.delta_s, r.delta_c) {
                println!("delta_s {}", solwave_cli::output::num(s));
                println!("delta_c {}", solwave_cli::output::num(c));
            }
        }
        Command::Simulate(_) => {
            commands::cmd_simulate(&cfg, &ctx)?;
        }
        Command::Velocity(_) => {
            let r = commands::cmd_velocity(&cfg, &ctx)?;
            print!("{}", r.csv());
        }
        Command::Sweep { .. } => {
            let r = commands::cmd_sweep(&cfg, &ctx, workers)?;
            print!("{}", r.csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
