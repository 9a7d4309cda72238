//! The outer training loop: sample a batch of parameters, solve the inner
//! least-squares problems, backpropagate the mean loss with the coefficients
//! held at their optima, and take an Adam step.

mod adam;
mod sampling;
mod schedule;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use sampling::sample_parameters;
pub use schedule::{lr_at, LearningRateSchedule};

use crate::assembly::{batch_loss, loss_and_grad_typed, BatchLoss, Discretization, Scheme};
use crate::checkpoint::save_checkpoint;
use crate::error::{Error, Result};
use crate::network::{init_params, NetworkParameters, Psi};
use crate::problems::{problem_by_name, ParameterPoint, ProblemDefinition};
use crate::rng::{stream_rng, Stream};

/// Fixed validation set and the resolutions it is scored at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    pub size: usize,
    /// Defaults to the training discretization.
    #[serde(default)]
    pub discretization: Option<Discretization>,
    /// Optional second score with a larger test space.
    #[serde(default)]
    pub truncation: Option<Discretization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub problem: String,
    pub seed: u64,
    #[serde(default)]
    pub layer_widths: Option<Vec<usize>>,
    #[serde(default)]
    pub psi_radius_sq: Option<f64>,
    pub discretization: Discretization,
    pub batch_size: usize,
    pub schedule: LearningRateSchedule,
    #[serde(default)]
    pub adam: AdamConfig,
    pub validation: ValidationConfig,
    /// Iterations between history rows.
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    /// Iterations between intermediate checkpoints; 0 keeps only the final one.
    #[serde(default)]
    pub checkpoint_every: u64,
}

fn default_cadence() -> u64 {
    10
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<ProblemDefinition> {
        let problem = problem_by_name(&self.problem)?;
        self.schedule.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.validation.size == 0 {
            return Err(Error::Config("validation size must be positive".into()));
        }
        if self.cadence == 0 {
            return Err(Error::Config("cadence must be positive".into()));
        }
        if let Some(r) = self.psi_radius_sq {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("psi_radius_sq must be positive, got {r}")));
            }
        }
        Ok(problem)
    }

    /// Initial network for this configuration.
    pub fn init_network(&self, problem: &ProblemDefinition) -> Result<NetworkParameters> {
        let mut spec = problem.architecture(self.layer_widths.clone());
        if let (Some(r), Psi::TransmissionCircles { radius_sq }) = (self.psi_radius_sq, &mut spec.psi) {
            *radius_sq = r;
        }
        init_params(spec, self.seed)
    }

    /// The fixed validation parameter set.
    pub fn validation_set(&self, problem: &ProblemDefinition) -> Vec<ParameterPoint> {
        sample_parameters(problem, self.validation.size, &mut stream_rng(self.seed, Stream::Validation))
    }
}

/// Mean loss over `batch` and its gradient with respect to the flat network parameters.
pub fn loss_and_grad(
    problem: &ProblemDefinition,
    params: &NetworkParameters,
    batch: &[ParameterPoint],
    scheme: &Scheme,
) -> Result<(BatchLoss, Vec<f64>)> {
    if problem.complex {
        loss_and_grad_typed::<Complex64>(problem, params, batch, scheme)
    } else {
        loss_and_grad_typed::<f64>(problem, params, batch, scheme)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub iter: u64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_loss_truncation: Option<f64>,
    pub lr: f64,
}

pub fn history_header(truncation: bool) -> &'static str {
    if truncation {
        "iter,train_loss,val_loss,val_loss_truncation,lr"
    } else {
        "iter,train_loss,val_loss,lr"
    }
}

impl HistoryRow {
    pub fn to_csv(&self) -> String {
        match self.val_loss_truncation {
            Some(t) => {
                format!("{},{:.16e},{:.16e},{:.16e},{:.16e}", self.iter, self.train_loss, self.val_loss, t, self.lr)
            }
            None => format!("{},{:.16e},{:.16e},{:.16e}", self.iter, self.train_loss, self.val_loss, self.lr),
        }
    }
}

#[derive(Debug)]
pub struct TrainingOutcome {
    pub params: NetworkParameters,
    pub history: Vec<HistoryRow>,
    pub checkpoints: Vec<PathBuf>,
}

pub fn checkpoint_name(iter: u64) -> String {
    format!("ckpt_{iter:06}.lsnet")
}

struct Output {
    dir: PathBuf,
    history: BufWriter<File>,
}

impl Output {
    fn create(dir: &Path, truncation: bool) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut history = BufWriter::new(File::create(dir.join("history.csv"))?);
        writeln!(history, "{}", history_header(truncation))?;
        history.flush()?;
        Ok(Self { dir: dir.to_path_buf(), history })
    }

    fn row(&mut self, row: &HistoryRow) -> Result<()> {
        writeln!(self.history, "{}", row.to_csv())?;
        self.history.flush()?;
        Ok(())
    }

    fn checkpoint(&self, name: &str, params: &NetworkParameters) -> Result<PathBuf> {
        let path = self.dir.join(name);
        save_checkpoint(&path, params)?;
        Ok(path)
    }
}

/// Trains from the configured initialization. With an output directory the
/// history is streamed to `history.csv` and checkpoints are written beside it.
pub fn train(config: &TrainingConfig, out_dir: Option<&Path>) -> Result<TrainingOutcome> {
    train_with_observer(config, out_dir, |_| {})
}

/// As [`train`], calling `observe` after each history row.
pub fn train_with_observer(
    config: &TrainingConfig,
    out_dir: Option<&Path>,
    mut observe: impl FnMut(&HistoryRow),
) -> Result<TrainingOutcome> {
    let problem = config.validate()?;
    let mut params = config.init_network(&problem)?;
    let scheme = Scheme::new(&problem, &config.discretization)?;
    let val_disc = config.validation.discretization.as_ref().unwrap_or(&config.discretization);
    let val_scheme = Scheme::new(&problem, val_disc)?;
    let trunc_scheme = config.validation.truncation.as_ref().map(|d| Scheme::new(&problem, d)).transpose()?;
    let validation = config.validation_set(&problem);
    let mut out = out_dir.map(|d| Output::create(d, trunc_scheme.is_some())).transpose()?;

    let total = config.schedule.iterations;
    let mut history = Vec::new();
    let mut checkpoints = Vec::new();
    if total == 0 {
        if let Some(out) = &out {
            checkpoints.push(out.checkpoint(&checkpoint_name(0), &params)?);
        }
        return Ok(TrainingOutcome { params, history, checkpoints });
    }

    let mut rng = stream_rng(config.seed, Stream::Train);
    let mut state = OptimizerState::new(params.flat().len());
    for e in 0..=total {
        let step = (|| -> Result<()> {
            let batch = sample_parameters(&problem, config.batch_size, &mut rng);
            let (train_loss, grad) = if e < total {
                let (loss, grad) = loss_and_grad(&problem, &params, &batch, &scheme)?;
                (loss.loss, Some(grad))
            } else {
                (batch_loss(&problem, &params, &batch, &scheme)?.loss, None)
            };
            if e % config.cadence == 0 || e == total {
                let val_loss = batch_loss(&problem, &params, &validation, &val_scheme)?.loss;
                let val_loss_truncation = trunc_scheme
                    .as_ref()
                    .map(|s| batch_loss(&problem, &params, &validation, s).map(|b| b.loss))
                    .transpose()?;
                let row =
                    HistoryRow { iter: e, train_loss, val_loss, val_loss_truncation, lr: lr_at(&config.schedule, e) };
                if let Some(out) = &mut out {
                    out.row(&row)?;
                }
                observe(&row);
                history.push(row);
            }
            if let Some(grad) = grad {
                let lr = lr_at(&config.schedule, e + 1);
                adam_step(&mut state, &config.adam, params.flat_mut(), &grad, lr)?;
            }
            Ok(())
        })();
        if let Err(err) = step {
            if let Some(out) = &out {
                // Best effort: the original error is what the caller needs.
                let _ = out.checkpoint(&format!("crash_{e:06}.lsnet"), &params);
            }
            return Err(err);
        }
        let done = e + 1;
        if let Some(out) = &out {
            if config.checkpoint_every > 0 && done % config.checkpoint_every == 0 && done < total {
                checkpoints.push(out.checkpoint(&checkpoint_name(done), &params)?);
            }
        }
    }
    if let Some(out) = &out {
        checkpoints.push(out.checkpoint(&checkpoint_name(total), &params)?);
    }
    Ok(TrainingOutcome { params, history, checkpoints })
}
