use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use impedance_feasibility::cli::{load_config, run, Experiment, ExperimentConfig};

/// Realizability studies for variable-impedance hopping controllers.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// α sweep of both controllers over the touchdown-velocity ensemble.
    Sweep1d(Common),
    /// Threshold regression across parameter combinations.
    Robustness(Common),
    /// Planar SLIP mechanism-transfer sweep.
    Slip2d(Common),
    /// Range-restriction baseline: conservatism, costs and reach.
    Conservative(Common),
    /// Closed-form thresholds and the required-command check at one α.
    Thresholds(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; nominal parameters when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of log-spaced α grid points (overrides the config).
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::Sweep1d(c) => (Experiment::Sweep1d, c),
        Command::Robustness(c) => (Experiment::Robustness, c),
        Command::Slip2d(c) => (Experiment::Slip2d, c),
        Command::Conservative(c) => (Experiment::Conservative, c),
        Command::Thresholds(c) => (Experiment::Thresholds, c),
    };

    let mut config = match &common.config {
        Some(path) => match load_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::nominal(experiment),
    };
    if config.experiment != experiment {
        eprintln!(
            "error: config is for `{}` but the `{experiment}` command was given",
            config.experiment
        );
        return ExitCode::from(2);
    }
    if let Some(out) = common.out {
        config.output_dir = out;
    }
    if let Some(n) = common.grid_points {
        config.parameters.sweep.grid_points = n;
    }
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    match run(&config) {
        Ok(summary) => {
            if !common.quiet {
                println!(
                    "{}: {} rows -> {}",
                    summary.experiment,
                    summary.rows,
                    summary.csv_path.display()
                );
            }
            if summary.failures > 0 {
                eprintln!(
                    "warning: {} rows failed, see {}",
                    summary.failures,
                    summary.manifest_path.display()
                );
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
