use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WARMUP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayShape {
    /// Linear from the peak down to zero at the final step.
    #[default]
    Linear,
    /// Hold the peak after warmup.
    Constant,
}

pub fn warmup_steps(total_steps: usize, warmup_fraction: f64) -> usize {
    ((warmup_fraction * total_steps as f64).ceil() as usize).min(total_steps)
}

/// Linear warmup from 0 to `peak_lr` over `ceil(warmup_fraction · total)`
/// steps, then the decay shape down to step `total_steps`.
pub fn lr_at_step_with(
    step: usize,
    total_steps: usize,
    peak_lr: f64,
    warmup_fraction: f64,
    decay: DecayShape,
) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::InvalidArgument("total_steps must be positive".into()));
    }
    if step > total_steps {
        return Err(Error::InvalidArgument(format!(
            "step {step} is past total_steps {total_steps}"
        )));
    }
    if !(warmup_fraction > 0.0 && warmup_fraction < 1.0) {
        return Err(Error::InvalidArgument("warmup_fraction must lie in (0, 1)".into()));
    }
    let warmup = warmup_steps(total_steps, warmup_fraction);
    if step <= warmup {
        return Ok(peak_lr * step as f64 / warmup as f64);
    }
    Ok(match decay {
        DecayShape::Constant => peak_lr,
        DecayShape::Linear => {
            peak_lr * (total_steps - step) as f64 / (total_steps - warmup) as f64
        }
    })
}

pub fn lr_at_step(step: usize, total_steps: usize, peak_lr: f64, warmup_fraction: f64) -> Result<f64> {
    lr_at_step_with(step, total_steps, peak_lr, warmup_fraction, DecayShape::Linear)
}
