//! Noisy finite-shot simulation of the single-qubit-rotation circuit.
//!
//! Every qubit starts in |0⟩ and receives one RY(θ) gate; there are no
//! two-qubit gates, so the register stays in a product state and each qubit
//! can be sampled on its own. Hardware imperfections enter as
//!
//! * angle jitter: Gaussian over-/under-rotation, drawn once per step by
//!   default (slow drift) or once per shot,
//! * crosstalk: a fraction `κ` of each register neighbour's angle leaks into
//!   the effective angle,
//! * readout error: asymmetric bit-flip probabilities applied after the
//!   ideal measurement.
//!
//! With per-step jitter all shots of a qubit are i.i.d. Bernoulli draws, so
//! the count of ones is sampled directly from the binomial law of the
//! post-flip outcome. Each qubit draws from its own sub-stream seeded off the
//! caller's generator, which keeps the caller's stream position independent
//! of the sampled counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config_error, invalid_argument, Result};

pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JitterMode {
    #[default]
    PerStep,
    PerShot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of the rotation-angle perturbation, radians.
    pub angle_jitter_sigma: f64,
    /// P(read 1 | prepared 0).
    pub p_flip_0to1: f64,
    /// P(read 0 | prepared 1).
    pub p_flip_1to0: f64,
    /// Fraction of each register neighbour's angle added to a qubit's angle.
    pub crosstalk_kappa: f64,
    #[serde(default)]
    pub jitter_mode: JitterMode,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::rochester_like()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            angle_jitter_sigma: 0.0,
            p_flip_0to1: 0.0,
            p_flip_1to0: 0.0,
            crosstalk_kappa: 0.0,
            jitter_mode: JitterMode::PerStep,
        }
    }

    /// Plausibility defaults for a 2020-era superconducting device.
    pub fn rochester_like() -> Self {
        Self {
            angle_jitter_sigma: 0.02,
            p_flip_0to1: 0.02,
            p_flip_1to0: 0.03,
            crosstalk_kappa: 0.01,
            jitter_mode: JitterMode::PerStep,
        }
    }

    pub fn symmetric_readout(p: f64) -> Self {
        Self {
            p_flip_0to1: p,
            p_flip_1to0: p,
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(config_error(
                    format!("noise.{name}"),
                    format!("must be finite and >= 0, got {v}"),
                ))
            }
        };
        nonneg("angle_jitter_sigma", self.angle_jitter_sigma)?;
        nonneg("crosstalk_kappa", self.crosstalk_kappa)?;
        for (name, p) in [
            ("p_flip_0to1", self.p_flip_0to1),
            ("p_flip_1to0", self.p_flip_1to0),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(config_error(
                    format!("noise.{name}"),
                    format!("must be a probability in [0, 1], got {p}"),
                ));
            }
        }
        Ok(())
    }

    /// Probability of reading 1 given the ideal excitation probability.
    pub fn readout_one_probability(&self, p_excited: f64) -> f64 {
        p_excited * (1.0 - self.p_flip_1to0) + (1.0 - p_excited) * self.p_flip_0to1
    }
}

/// Rotation angles fed to the RY gates, one per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleVector(pub Vec<f64>);

/// Shot-averaged Pauli-Z expectation per qubit, `(n0 - n1) / shots`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinVector(pub Vec<f64>);

impl AngleVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl SpinVector {
    /// Spins of a register that has not been rotated (all qubits in |0⟩).
    pub fn ground(n: usize) -> Self {
        SpinVector(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Infinity-norm distance.
    pub fn max_abs_diff(&self, other: &SpinVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Noise-free, infinite-shot spin of RY(θ)|0⟩.
pub fn ideal_spin(theta: f64) -> f64 {
    theta.cos()
}

/// Angles after crosstalk leakage, before jitter. Register neighbours beyond
/// either end of the register are absent.
fn crosstalk_angles(theta: &[f64], kappa: f64) -> Vec<f64> {
    let n = theta.len();
    (0..n)
        .map(|m| {
            let left = if m > 0 { theta[m - 1] } else { 0.0 };
            let right = if m + 1 < n { theta[m + 1] } else { 0.0 };
            theta[m] + kappa * (left + right)
        })
        .collect()
}

fn excitation_probability(theta: f64) -> f64 {
    let half = (theta / 2.0).sin();
    half * half
}

/// Simulates one time step of the register and returns the average spins.
pub fn run_step<R: Rng + ?Sized>(
    angles: &AngleVector,
    noise: &NoiseModel,
    shots: u64,
    rng: &mut R,
) -> Result<SpinVector> {
    if shots == 0 {
        return Err(invalid_argument("shots must be >= 1"));
    }
    if let Some((m, t)) = angles.0.iter().enumerate().find(|(_, t)| !t.is_finite()) {
        return Err(invalid_argument(format!("angle {m} is not finite ({t})")));
    }
    let jitter = Normal::new(0.0, noise.angle_jitter_sigma)
        .map_err(|e| invalid_argument(format!("angle jitter: {e}")))?;
    let base = crosstalk_angles(&angles.0, noise.crosstalk_kappa);

    // Fixed draw order per step: one jitter value and one sub-stream seed
    // per qubit, regardless of shot count or outcomes.
    let draws: Vec<(f64, u64)> = base
        .iter()
        .map(|_| (jitter.sample(rng), rng.random::<u64>()))
        .collect();

    let spins = base
        .iter()
        .zip(draws)
        .map(|(&theta, (eta, sub_seed))| {
            let mut sub = ChaCha8Rng::seed_from_u64(sub_seed);
            let ones = match noise.jitter_mode {
                JitterMode::PerStep => {
                    let p_one = noise.readout_one_probability(excitation_probability(theta + eta));
                    sample_binomial(shots, p_one, &mut sub)
                }
                JitterMode::PerShot => sample_per_shot(theta, noise, &jitter, shots, &mut sub),
            };
            (shots as f64 - 2.0 * ones as f64) / shots as f64
        })
        .collect();
    Ok(SpinVector(spins))
}

fn sample_binomial<R: Rng + ?Sized>(shots: u64, p: f64, rng: &mut R) -> u64 {
    let p = p.clamp(0.0, 1.0);
    // Parameters are validated above, so construction cannot fail.
    Binomial::new(shots, p)
        .expect("binomial parameters in range")
        .sample(rng)
}

fn sample_per_shot<R: Rng + ?Sized>(
    theta: f64,
    noise: &NoiseModel,
    jitter: &Normal<f64>,
    shots: u64,
    rng: &mut R,
) -> u64 {
    let mut ones = 0;
    for _ in 0..shots {
        let p = excitation_probability(theta + jitter.sample(rng));
        let excited = rng.random::<f64>() < p;
        let flip = if excited {
            noise.p_flip_1to0
        } else {
            noise.p_flip_0to1
        };
        let read_one = excited ^ (rng.random::<f64>() < flip);
        ones += read_one as u64;
    }
    ones
}
