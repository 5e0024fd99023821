use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use risnoma::config::{load_config, ExperimentConfig};
use risnoma::error::exit;
use risnoma::run::{execute, Command};
use risnoma::RunError;

/// Outage sweeps, RUOM optimization and Monte Carlo validation for
/// RIS-assisted UAV NOMA downlinks.
#[derive(Parser)]
#[command(name = "risnoma", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Outage vs element count over the direct, RIS-only and composite links.
    SweepLinks(Common),
    /// Composite-link outage vs element count for each transmit power.
    SweepPower(Common),
    /// Composite-link outage vs element count for each target rate.
    SweepRate(Common),
    /// Run the optimizer for every configured lambda and write its trace.
    Ruom(Common),
    /// Compare closed forms against Monte Carlo and report tolerances.
    Validate(Common),
    /// Print the default configuration as TOML.
    DefaultConfig,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; absent keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; results go to <out>/<command>/.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add Monte Carlo estimates.
    #[arg(long, overrides_with = "no_mc")]
    mc: bool,
    /// Skip Monte Carlo estimates.
    #[arg(long, overrides_with = "mc")]
    no_mc: bool,
}

fn resolve(c: &Common, mc_default: bool) -> Result<(ExperimentConfig, bool, PathBuf), RunError> {
    let mut cfg = match &c.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = o.clone();
    }
    let mc = if c.mc {
        true
    } else if c.no_mc {
        false
    } else {
        mc_default || cfg.mc.enabled
    };
    cfg.mc.enabled = mc;
    let out = cfg.output.dir.clone();
    Ok((cfg, mc, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match &cli.command {
        Cmd::SweepLinks(c) => (Command::SweepLinks, c),
        Cmd::SweepPower(c) => (Command::SweepPower, c),
        Cmd::SweepRate(c) => (Command::SweepRate, c),
        Cmd::Ruom(c) => (Command::Ruom, c),
        Cmd::Validate(c) => (Command::Validate, c),
        Cmd::DefaultConfig => {
            print!("{}", risnoma::config::to_toml(&ExperimentConfig::default()));
            return ExitCode::SUCCESS;
        }
    };
    let result = resolve(common, cmd == Command::Validate)
        .and_then(|(cfg, mc, out)| execute(cmd, &cfg, mc, &out));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::from(exit::OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
