use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponential decay from `lambda0` to `lambda_e` over `iterations` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRateSchedule {
    pub lambda0: f64,
    pub lambda_e: f64,
    pub iterations: u64,
}

impl LearningRateSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda_e > 0.0 && self.lambda0.is_finite() && self.lambda_e.is_finite()) {
            return Err(Error::Config(format!(
                "learning rates must be positive, got {} and {}",
                self.lambda0, self.lambda_e
            )));
        }
        Ok(())
    }
}

/// `λ0 (λE / λ0)^(e / E)`; `E = 0` yields `λ0`.
pub fn lr_at(schedule: &LearningRateSchedule, e: u64) -> f64 {
    if schedule.iterations == 0 {
        return schedule.lambda0;
    }
    let frac = e as f64 / schedule.iterations as f64;
    schedule.lambda0 * (schedule.lambda_e / schedule.lambda0).powf(frac)
}
