use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mirrorvis_cli::validate::{default_oracle, report, run_battery, ValidationSettings};
use mirrorvis_cli::{commands, output, CliError, RunConfig};

/// Interference visibility of a photon entangled with a decohering mirror.
#[derive(Parser, Debug)]
#[command(name = "mirrorvis", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` configuration file
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Output file (overrides `out` in the config; stdout if neither is set)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Trajectory seed (overrides `seed` in the config)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample f(t) on the configured grid and write CSV
    Curve(Common),
    /// Print η, η̂, Λ and the CSL γ bound
    Params(Common),
    /// Run the cross-method validation battery
    Validate(Common),
    /// Truncation sweep and RK4 step study
    Sweep(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Curve(c) | Command::Params(c) | Command::Validate(c) | Command::Sweep(c) => c,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let cfg = RunConfig::from_path(&common.config)?;
    let out = common.out.clone().or_else(|| cfg.out.clone());
    let out = out.as_deref();
    match &cli.command {
        Command::Curve(_) => output::emit(&commands::curve_text(&cfg, common.seed)?, out),
        Command::Params(_) => output::emit(&commands::params_report(&cfg)?, out),
        Command::Sweep(_) => {
            let (text, converged) = commands::sweep_report(&cfg)?;
            output::emit(&text, out)?;
            if converged {
                Ok(())
            } else {
                Err(CliError::Numerical("truncation sweep did not converge".into()))
            }
        }
        Command::Validate(_) => {
            let settings = ValidationSettings::from_config(&cfg, common.seed)?;
            let (text, failed) = report(&run_battery(&settings, default_oracle)?);
            output::emit(&text, out)?;
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Validation(failed))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mirrorvis: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
