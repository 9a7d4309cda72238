use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lsnet_cli::{
    cmd_train, evaluate, parse_param, report, solve, write_file, CliError, CliResult, Deployment, RunConfig,
};

/// Train and deploy least-squares basis networks for parametric PDEs.
///
/// Exit status: 0 on success, 2 on configuration or input errors, 3 on
/// numerical failure, 1 when results cannot be written.
#[derive(Debug, Parser)]
#[command(name = "lsnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a basis network; writes history.csv and checkpoints.
    Train {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `output.dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Do not print history rows to stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Solve at one parameter point and write the solution on a grid.
    Solve {
        #[arg(long)]
        checkpoint: PathBuf,
        /// oscillator, helmholtz1d or transmission2d.
        #[arg(long)]
        problem: Option<String>,
        /// Run configuration supplying problem and discretization.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated parameter components, e.g. `1,0.25`.
        #[arg(long, allow_hyphen_values = true)]
        param: String,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Relative errors (or residual bounds) over a grid or random sample.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Points per axis of a log-spaced grid (oscillator); `--out` is a directory.
        #[arg(long, conflicts_with = "samples")]
        grid: Option<usize>,
        /// Number of random draws; `--out` is a CSV file.
        #[arg(long, requires = "seed")]
        samples: Option<usize>,
        /// Seed of the draws.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Loss-curve CSV with a running-median column.
    Report {
        /// history.csv of a run; defaults to the one in the config's output directory.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Keep every k-th row; defaults to `report.downsample` or 1.
        #[arg(long)]
        downsample: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>) -> CliResult<Option<RunConfig>> {
    path.map(|p| RunConfig::load(p)).transpose()
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { config, out, quiet } => {
            let last = cmd_train(&config, out, quiet)?;
            println!("{}", last.display());
        }
        Command::Solve { checkpoint, problem, config, param, out } => {
            let config = load_config(config.as_ref())?;
            let deployment = Deployment::load(&checkpoint, problem.as_deref(), config.as_ref())?;
            let csv = solve::solve_csv(&deployment, &parse_param(&param)?)?;
            write_file(&out, &csv)?;
        }
        Command::Evaluate { checkpoint, problem, config, grid, samples, seed, out } => {
            let config = load_config(config.as_ref())?;
            let deployment = Deployment::load(&checkpoint, problem.as_deref(), config.as_ref())?;
            match (grid, samples, seed) {
                (Some(n), None, _) => evaluate::evaluate_grid(&deployment, &checkpoint, n, &out)?,
                (None, Some(n), Some(seed)) => evaluate::evaluate_samples(&deployment, n, seed, &out)?,
                _ => return Err(CliError::Config("evaluate needs --grid N or --samples N --seed S".into())),
            }
        }
        Command::Report { history, config, downsample, out } => {
            let config = load_config(config.as_ref())?;
            let path = match (history, &config) {
                (Some(h), _) => h,
                (None, Some(c)) => c.output.dir.join("history.csv"),
                (None, None) => return Err(CliError::Config("report needs --history or --config".into())),
            };
            let factor = downsample.or(config.as_ref().map(|c| c.report.downsample)).unwrap_or(1);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read history {}: {e}", path.display())))?;
            let parsed = report::parse_history(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })?;
            write_file(&out, &report::report_csv(&parsed, factor)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
