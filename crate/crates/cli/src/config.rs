//! Run configuration file: a versioned TOML document mapped onto
//! [`TrainingConfig`] plus the output directory and report options.
//!
//! ```toml
//! version = 1
//! seed = 3
//!
//! [problem]
//! name = "oscillator"
//!
//! [network]
//! layer_widths = [5, 5, 40]
//!
//! [discretization]
//! method = "pinn"
//! nodes = 250
//!
//! [training]
//! batch_size = 100
//! iterations = 2000
//! lr_initial = 1e-3
//! lr_final = 1e-4
//!
//! [validation]
//! size = 100
//! discretization = { method = "pinn", nodes = 1005 }
//!
//! [output]
//! dir = "runs/oscillator"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use lsnet_core::training::AdamConfig;
use lsnet_core::{Discretization, LearningRateSchedule, TrainingConfig, ValidationConfig};
use serde::Deserialize;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub problem: ProblemSection,
    #[serde(default)]
    pub network: NetworkSection,
    pub discretization: Discretization,
    pub training: TrainingSection,
    pub validation: ValidationConfig,
    pub output: OutputSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub layer_widths: Option<Vec<usize>>,
    pub psi_radius_sq: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub batch_size: usize,
    pub iterations: u64,
    pub lr_initial: f64,
    pub lr_final: f64,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    #[serde(default)]
    pub checkpoint_every: u64,
}

fn default_cadence() -> u64 {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Keep every `downsample`-th history row.
    #[serde(default = "default_downsample")]
    pub downsample: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { downsample: default_downsample() }
    }
}

fn default_downsample() -> usize {
    1
}

impl RunConfig {
    /// Reads and checks a config file; relative paths become absolute.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let base = std::path::absolute(base)
            .map_err(|e| CliError::Config(format!("cannot resolve {}: {e}", base.display())))?;
        if config.output.dir.is_relative() {
            config.output.dir = base.join(&config.output.dir);
        }
        Ok(config)
    }

    /// Parses the document and checks every value; parse errors carry line
    /// and column.
    pub fn parse(text: &str) -> Result<Self, String> {
        let config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if config.version != CONFIG_VERSION {
            return Err(format!("unsupported config version {} (expected {CONFIG_VERSION})", config.version));
        }
        if config.report.downsample == 0 {
            return Err("report.downsample must be positive".into());
        }
        config.training_config().validate().map_err(|e| e.to_string())?;
        Ok(config)
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            problem: self.problem.name.clone(),
            seed: self.seed,
            layer_widths: self.network.layer_widths.clone(),
            psi_radius_sq: self.network.psi_radius_sq,
            discretization: self.discretization.clone(),
            batch_size: self.training.batch_size,
            schedule: LearningRateSchedule {
                lambda0: self.training.lr_initial,
                lambda_e: self.training.lr_final,
                iterations: self.training.iterations,
            },
            adam: self.training.adam,
            validation: self.validation.clone(),
            cadence: self.training.cadence,
            checkpoint_every: self.training.checkpoint_every,
        }
    }
}
