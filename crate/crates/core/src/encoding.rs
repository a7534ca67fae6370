//! Classical pre-processing: returns, the asymmetric input squashing, and the
//! per-qubit angle encoding that mixes input, previous spins and the previous
//! forecast error.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{config_error, invalid_argument, invalid_data, Result};
use crate::quantum::{AngleVector, SpinVector};
use crate::topology::ReservoirTopology;

/// Parameters of `u = 1 - exp(-(a0 + a1·I·Δr))`, `I = [Δr < 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymTransformParams {
    pub a0: f64,
    pub a1: f64,
}

impl Default for AsymTransformParams {
    fn default() -> Self {
        Self { a0: 0.5, a1: -40.0 }
    }
}

impl AsymTransformParams {
    pub fn validate(&self) -> Result<()> {
        if !self.a0.is_finite() {
            return Err(config_error("encoding.a0", "must be finite"));
        }
        if !self.a1.is_finite() {
            return Err(config_error("encoding.a1", "must be finite"));
        }
        Ok(())
    }
}

/// Mixing weights of the angle encoding. The unprimed weights apply to qubits
/// with a non-empty feedback set, the primed ones to loop-free qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha_prime: f64,
    pub gamma_prime: f64,
}

impl Default for EncodingWeights {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.3,
            gamma: 0.4,
            alpha_prime: 0.6,
            gamma_prime: 0.4,
        }
    }
}

impl EncodingWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("alpha_prime", self.alpha_prime),
            ("gamma_prime", self.gamma_prime),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(config_error(
                    format!("encoding.{name}"),
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        // Small slack for decimal round-off in config files.
        if self.alpha + self.beta + self.gamma > 1.0 + 1e-12 {
            return Err(config_error(
                "encoding.alpha",
                "alpha + beta + gamma must not exceed 1",
            ));
        }
        if self.alpha_prime + self.gamma_prime > 1.0 + 1e-12 {
            return Err(config_error(
                "encoding.alpha_prime",
                "alpha_prime + gamma_prime must not exceed 1",
            ));
        }
        Ok(())
    }
}

/// `r_t = ln(p_t / p_{t-1})`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(invalid_argument(format!(
            "log returns need at least 2 prices, got {}",
            prices.len()
        )));
    }
    if let Some((i, p)) = prices
        .iter()
        .enumerate()
        .find(|(_, &p)| !(p.is_finite() && p > 0.0))
    {
        return Err(invalid_data(format!(
            "price at index {i} is not positive ({p})"
        )));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// First differences `x_t - x_{t-1}`.
pub fn delta(series: &[f64]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(invalid_argument(format!(
            "differencing needs at least 2 values, got {}",
            series.len()
        )));
    }
    Ok(series.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Asymmetric squashing of a return difference into `[0, 1]`. Only negative
/// differences enter the exponent; `dr = 0` takes the non-negative branch.
pub fn asym_transform(dr: f64, p: &AsymTransformParams) -> f64 {
    let indicator = if dr < 0.0 { 1.0 } else { 0.0 };
    let u = 1.0 - (-(p.a0 + p.a1 * indicator * dr)).exp();
    if u.is_nan() {
        0.0
    } else {
        u.clamp(0.0, 1.0)
    }
}

/// Folds inputs, previous spins and previous error into rotation angles.
///
/// Qubit `m` reads `u_window[m]`. Its feedback term is the mean of the
/// rescaled spins `(s_j + 1)/2` over its feedback set (itself when it has a
/// self-loop, plus graph neighbours). Loop-free qubits use the primed
/// weights and no spin term. Angles are clamped to `[0, π/2]`.
pub fn encode_angles(
    u_window: &[f64],
    prev_spins: &SpinVector,
    prev_error: f64,
    topo: &ReservoirTopology,
    w: &EncodingWeights,
) -> Result<AngleVector> {
    let n = topo.n_qubits();
    if u_window.len() != n || prev_spins.len() != n {
        return Err(invalid_argument(format!(
            "dimension mismatch: topology has {n} qubits, inputs {}, spins {}",
            u_window.len(),
            prev_spins.len()
        )));
    }
    let scaled: Vec<f64> = prev_spins.0.iter().map(|s| (s + 1.0) / 2.0).collect();
    let angles = (0..n)
        .map(|m| {
            let feedback = topo.feedback_set(m);
            let mix = if feedback.is_empty() {
                w.alpha_prime * u_window[m] + w.gamma_prime * prev_error
            } else {
                let f = feedback.iter().map(|&j| scaled[j]).sum::<f64>() / feedback.len() as f64;
                w.alpha * u_window[m] + w.beta * f + w.gamma * prev_error
            };
            let theta = FRAC_PI_2 * mix;
            if theta.is_nan() {
                0.0
            } else {
                theta.clamp(0.0, FRAC_PI_2)
            }
        })
        .collect();
    Ok(AngleVector(angles))
}
