//! Fifth-order NARMA task and one-step-ahead reservoir evaluation.
//!
//! Input:  `s_t = μ [sin(2πf₀t/T) sin(2πf₁t/T) sin(2πf₂t/T) + 1]`
//! Target: `v_{t+1} = α v_t + β v_t (v_t + … + v_{t-4}) + γ s_{t-4} s_t + δ`
//!
//! NMSE is normalized by the target energy, `Σ(y - ŷ)² / Σ y²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{config_error, invalid_argument, invalid_data, Error, Result};
use crate::forecast::{run_online, OnlineSettings};
use crate::readout::ForecastRecord;
use crate::reservoir::ReservoirSpec;
use crate::rng::{stream, Stream};
use crate::topology::ReservoirTopology;

const DIVERGENCE_BOUND: f64 = 1e6;
const ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NarmaParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub mu: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub period: f64,
}

impl Default for NarmaParams {
    fn default() -> Self {
        Self {
            alpha: 0.30,
            beta: 0.05,
            gamma: 1.50,
            delta: 0.10,
            mu: 0.10,
            f0: 2.11,
            f1: 3.73,
            f2: 4.11,
            period: 100.0,
        }
    }
}

impl NarmaParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("mu", self.mu),
            ("f0", self.f0),
            ("f1", self.f1),
            ("f2", self.f2),
            ("period", self.period),
        ] {
            if !v.is_finite() {
                return Err(config_error(
                    format!("narma.params.{name}"),
                    "must be finite",
                ));
            }
        }
        if self.period <= 0.0 {
            return Err(config_error("narma.params.period", "must be > 0"));
        }
        if self.mu <= 0.0 {
            return Err(config_error("narma.params.mu", "must be > 0"));
        }
        Ok(())
    }

    pub fn input(&self, t: usize) -> f64 {
        let w = 2.0 * PI * t as f64 / self.period;
        self.mu * ((self.f0 * w).sin() * (self.f1 * w).sin() * (self.f2 * w).sin() + 1.0)
    }

    /// Affine map of the input range `[0, 2μ]` onto `[0, 1]`.
    pub fn normalize_input(&self, s: f64) -> f64 {
        (s / (2.0 * self.mu)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NarmaConfig {
    pub length: usize,
    pub params: NarmaParams,
}

impl Default for NarmaConfig {
    fn default() -> Self {
        Self {
            length: 5000,
            params: NarmaParams::default(),
        }
    }
}

impl NarmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length < 30 {
            return Err(config_error("narma.length", "must be >= 30"));
        }
        self.params.validate()
    }
}

/// Input and target series of length `length`; `v_0..v_4 = 0`.
pub fn gen_narma5(length: usize, p: &NarmaParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if length < ORDER + 1 {
        return Err(invalid_argument(format!(
            "NARMA5 needs length >= {}, got {length}",
            ORDER + 1
        )));
    }
    let s: Vec<f64> = (0..length).map(|t| p.input(t)).collect();
    let mut v = vec![0.0; length];
    for t in ORDER - 1..length - 1 {
        let window: f64 = v[t + 1 - ORDER..=t].iter().sum();
        let next = p.alpha * v[t] + p.beta * v[t] * window + p.gamma * s[t - 4] * s[t] + p.delta;
        if !next.is_finite() || next.abs() > DIVERGENCE_BOUND {
            return Err(Error::Diverged {
                t: t + 1,
                value: next,
            });
        }
        v[t + 1] = next;
    }
    Ok((s, v))
}

/// `Σ(actual - predicted)² / Σ actual²`.
pub fn nmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() || actual.is_empty() {
        return Err(invalid_argument(format!(
            "nmse needs equal non-empty lengths, got {} and {}",
            predicted.len(),
            actual.len()
        )));
    }
    let energy: f64 = actual.iter().map(|a| a * a).sum();
    if energy == 0.0 || !energy.is_finite() {
        return Err(invalid_data("nmse reference series has zero energy"));
    }
    let err: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (a - p) * (a - p))
        .sum();
    Ok(err / energy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NarmaOutcome {
    pub nmse: f64,
    /// Every one-step forecast, including the flushed prefix.
    pub records: Vec<ForecastRecord>,
    /// Records before this index were flushed from the score.
    pub scored_from: usize,
}

impl NarmaOutcome {
    pub fn scored(&self) -> &[ForecastRecord] {
        &self.records[self.scored_from..]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NarmaRun {
    pub narma: NarmaConfig,
    pub spec: ReservoirSpec,
    pub online: OnlineSettings,
    pub burn_in_fraction: f64,
    pub seed: u64,
}

/// Forecasts `v_{t+1}` from the normalized input window and scores the
/// records after the burn-in fraction.
pub fn run_narma_benchmark(run: &NarmaRun, topology: &ReservoirTopology) -> Result<NarmaOutcome> {
    run.narma.validate()?;
    let (s, v) = gen_narma5(run.narma.length, &run.narma.params)?;
    let p = &run.narma.params;
    // Step t forecasts v[t + 1]; the final input has no target.
    let inputs: Vec<f64> = s[..s.len() - 1]
        .iter()
        .map(|&x| p.normalize_input(x))
        .collect();
    let targets = v[1..].to_vec();

    let n_records = inputs.len() + 1 - topology.n_qubits();
    let scored_from = (n_records as f64 * run.burn_in_fraction).floor() as usize;
    let online = OnlineSettings {
        burn_in_records: scored_from,
        ..run.online
    };
    let mut reservoir = run.spec.build(topology.clone());
    let mut rng = stream(run.seed, Stream::Quantum);
    let records = run_online(&mut reservoir, &inputs, &targets, &online, &mut rng)?;

    let (pred, actual): (Vec<f64>, Vec<f64>) = records[scored_from..]
        .iter()
        .map(|r| (r.predicted, r.actual))
        .unzip();
    Ok(NarmaOutcome {
        nmse: nmse(&pred, &actual)?,
        records,
        scored_from,
    })
}
