//! Online one-step-ahead forecasting loop shared by the NARMA benchmark and
//! the market pipeline: encode → quantum layer → predict → RLS update →
//! squash the residual into the next step's error feedback.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_error, invalid_argument, Result};
use crate::readout::{squash_error, ForecastRecord, ReadoutState, RlsParams};
use crate::reservoir::{lag_window, Reservoir};

/// How the residual is scaled before squashing into `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeedbackScale {
    /// Fixed scale in target units.
    Fixed(f64),
    Policy(FeedbackPolicy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackPolicy {
    /// Running mean absolute residual during burn-in, frozen afterwards.
    BurnInMeanAbs,
}

impl Default for FeedbackScale {
    fn default() -> Self {
        FeedbackScale::Policy(FeedbackPolicy::BurnInMeanAbs)
    }
}

impl FeedbackScale {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FeedbackScale::Fixed(s) if !(s.is_finite() && s > 0.0) => Err(config_error(
                "readout.feedback_scale",
                format!("fixed scale must be finite and > 0, got {s}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Scale used when the burn-in residuals are all zero.
const FALLBACK_SCALE: f64 = 1.0;

struct ScaleTracker {
    policy: FeedbackScale,
    freeze_after: usize,
    seen: usize,
    abs_sum: f64,
    frozen: Option<f64>,
}

impl ScaleTracker {
    fn new(policy: FeedbackScale, burn_in: usize) -> Self {
        Self {
            policy,
            freeze_after: burn_in.max(1),
            seen: 0,
            abs_sum: 0.0,
            frozen: None,
        }
    }

    fn observe(&mut self, residual: f64) -> f64 {
        match self.policy {
            FeedbackScale::Fixed(s) => s,
            FeedbackScale::Policy(FeedbackPolicy::BurnInMeanAbs) => {
                if let Some(s) = self.frozen {
                    return s;
                }
                self.seen += 1;
                self.abs_sum += residual.abs();
                let mean = self.abs_sum / self.seen as f64;
                let scale = if mean > 0.0 { mean } else { FALLBACK_SCALE };
                if self.seen >= self.freeze_after {
                    self.frozen = Some(scale);
                }
                scale
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OnlineSettings {
    pub rls: RlsParams,
    pub feedback_scale: FeedbackScale,
    /// Records in the burn-in segment (used by the scale policy).
    pub burn_in_records: usize,
}

/// Runs the loop for every step `t` with a full input window
/// (`t >= n_qubits - 1`). `targets[t]` is the value forecast at step `t`;
/// the record's `t` field is `t`.
pub fn run_online<R: Rng + ?Sized>(
    reservoir: &mut Reservoir,
    inputs: &[f64],
    targets: &[f64],
    settings: &OnlineSettings,
    rng: &mut R,
) -> Result<Vec<ForecastRecord>> {
    let n = reservoir.n_qubits();
    if inputs.len() != targets.len() {
        return Err(invalid_argument(format!(
            "inputs ({}) and targets ({}) differ in length",
            inputs.len(),
            targets.len()
        )));
    }
    if inputs.len() < n {
        return Err(invalid_argument(format!(
            "need at least {n} inputs for a full lag window, got {}",
            inputs.len()
        )));
    }
    let mut readout = ReadoutState::new(n, settings.rls)?;
    let mut scale = ScaleTracker::new(settings.feedback_scale, settings.burn_in_records);
    let mut error = 0.0;
    let mut records = Vec::with_capacity(inputs.len() + 1 - n);
    for (t, &target) in targets.iter().enumerate().skip(n - 1) {
        let window = lag_window(inputs, t, n);
        let spins = reservoir.step(&window, error, rng)?.clone();
        let predicted = readout.predict(&spins)?;
        let record = ForecastRecord::new(t, target, predicted);
        readout.update(&spins, target)?;
        error = squash_error(record.residual, scale.observe(record.residual));
        records.push(record);
    }
    Ok(records)
}
