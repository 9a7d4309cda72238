//! Subcommands of the `lsnet` binary.

pub mod config;
pub mod evaluate;
pub mod report;
pub mod solve;

use std::fmt;
use std::path::{Path, PathBuf};

use lsnet_core::{Discretization, ProblemDefinition};

pub use config::RunConfig;

/// Command failure, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad inputs: config, flags, checkpoint or history files. Exit 2.
    Config(String),
    /// The numerics failed on valid inputs. Exit 3.
    Numerical(String),
    /// Writing results failed. Exit 1.
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Output(m) => write!(f, "cannot write output: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lsnet_core::Error> for CliError {
    fn from(e: lsnet_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if matches!(e, lsnet_core::Error::Io(_)) {
            CliError::Output(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Round-trip-stable number formatting (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn output_error(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

/// Writes `contents`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| output_error(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| output_error(path, e))
}

/// Parses `--param 1,0.25`.
pub fn parse_param(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| CliError::Config(format!("parameter component `{s}`: {e}"))))
        .collect()
}

/// The discretization of the reference training setup of each benchmark.
pub fn default_discretization(problem: &ProblemDefinition) -> Discretization {
    match problem.kind {
        lsnet_core::ProblemKind::Oscillator => Discretization::Pinn { nodes: 1000 },
        lsnet_core::ProblemKind::Helmholtz1d => Discretization::Dfr1d { tests: 400, nodes: 1000 },
        lsnet_core::ProblemKind::Transmission2d => Discretization::Dfr2d { tests: [75, 75], nodes: [300, 300] },
    }
}

/// Problem, checkpoint and discretization shared by `solve` and `evaluate`.
pub struct Deployment {
    pub problem: ProblemDefinition,
    pub params: lsnet_core::NetworkParameters,
    pub discretization: Discretization,
}

impl Deployment {
    /// The problem comes from `--problem` or the config; the discretization
    /// from the config or the benchmark default.
    pub fn load(checkpoint: &Path, problem: Option<&str>, config: Option<&RunConfig>) -> CliResult<Self> {
        let name = match (problem, config) {
            (Some(p), Some(c)) if p != c.problem.name => {
                return Err(CliError::Config(format!("--problem {p} contradicts config problem {}", c.problem.name)))
            }
            (Some(p), _) => p.to_string(),
            (None, Some(c)) => c.problem.name.clone(),
            (None, None) => return Err(CliError::Config("either --problem or --config is required".into())),
        };
        let problem = lsnet_core::problem_by_name(&name)?;
        let params = lsnet_core::load_checkpoint(checkpoint)
            .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", checkpoint.display())))?;
        check_architecture(&problem, params.spec())?;
        let discretization = config.map_or_else(|| default_discretization(&problem), |c| c.discretization.clone());
        Ok(Deployment { problem, params, discretization })
    }
}

/// The checkpoint must have been trained for this problem: same input
/// dimension, cut-off and regularity factor family.
pub fn check_architecture(problem: &ProblemDefinition, spec: &lsnet_core::ArchitectureSpec) -> CliResult<()> {
    let expected = problem.architecture(None);
    let same = spec.input_dim == expected.input_dim
        && spec.cutoff == expected.cutoff
        && spec.psi.token() == expected.psi.token()
        && spec.activation == expected.activation;
    if same {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "dimension mismatch: checkpoint architecture (input_dim {}, cutoff {:?}, psi {}) does not fit problem {}",
            spec.input_dim,
            spec.cutoff,
            spec.psi.token(),
            problem.name()
        )))
    }
}

/// Runs training from a config file; returns the final checkpoint.
pub fn cmd_train(config_path: &Path, out: Option<PathBuf>, quiet: bool) -> CliResult<PathBuf> {
    let config = RunConfig::load(config_path)?;
    let dir = out.unwrap_or_else(|| config.output.dir.clone());
    let tc = config.training_config();
    let outcome = lsnet_core::train_with_observer(&tc, Some(&dir), |row| {
        if !quiet {
            eprintln!(
                "iter {:>6}  train {:.6e}  val {:.6e}  lr {:.3e}",
                row.iter, row.train_loss, row.val_loss, row.lr
            );
        }
    })?;
    outcome
        .checkpoints
        .last()
        .cloned()
        .ok_or_else(|| CliError::Output(format!("no checkpoint written to {}", dir.display())))
}
