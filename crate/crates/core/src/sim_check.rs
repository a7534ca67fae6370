//! Statistical self-test of the quantum layer: shot-averaged spins against
//! `cos θ`, and the `(1 - 2p)` contraction under symmetric readout flips.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_argument, Result};
use crate::quantum::{ideal_spin, run_step, AngleVector, NoiseModel};
use crate::rng::{stream, Stream};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimCheckParams {
    pub shots: u64,
    pub seeds: usize,
    /// Angles `k·π/angle_steps` for `k = 0..=angle_steps`.
    pub angle_steps: usize,
    /// Symmetric flip probability for the readout-error check.
    pub flip_p: f64,
    /// Required fraction of noiseless cells within `4/√shots` of `cos θ`.
    pub min_fraction: f64,
    pub base_seed: u64,
}

impl Default for SimCheckParams {
    fn default() -> Self {
        Self {
            shots: 8192,
            seeds: 50,
            angle_steps: 6,
            flip_p: 0.05,
            min_fraction: 0.95,
            base_seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipCheck {
    pub theta: f64,
    pub mean_spin: f64,
    pub expected: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCheckReport {
    pub params: SimCheckParams,
    pub tolerance: f64,
    pub cells: usize,
    pub cells_within: usize,
    pub fraction_within: f64,
    pub cos_pass: bool,
    pub flip: Vec<FlipCheck>,
    pub flip_pass: bool,
    pub pass: bool,
}

fn single_qubit_spin(theta: f64, noise: &NoiseModel, shots: u64, seed: u64) -> Result<f64> {
    let mut rng = stream(seed, Stream::SimCheck);
    Ok(run_step(&AngleVector(vec![theta]), noise, shots, &mut rng)?.0[0])
}

pub fn run_sim_check(p: &SimCheckParams) -> Result<SimCheckReport> {
    if p.shots == 0 || p.seeds < 2 || p.angle_steps == 0 {
        return Err(invalid_argument(
            "sim-check needs shots >= 1, seeds >= 2, angle_steps >= 1",
        ));
    }
    let thetas: Vec<f64> = (0..=p.angle_steps)
        .map(|k| k as f64 * PI / p.angle_steps as f64)
        .collect();
    let tolerance = 4.0 / (p.shots as f64).sqrt();
    let seed = |k: usize| p.base_seed.wrapping_add(k as u64);

    let clean = NoiseModel::noiseless();
    let mut cells = 0;
    let mut within = 0;
    for &theta in &thetas {
        for k in 0..p.seeds {
            let s = single_qubit_spin(theta, &clean, p.shots, seed(k))?;
            cells += 1;
            within += ((s - ideal_spin(theta)).abs() <= tolerance) as usize;
        }
    }
    let fraction_within = within as f64 / cells as f64;

    let noisy = NoiseModel::symmetric_readout(p.flip_p);
    let flip = thetas
        .iter()
        .map(|&theta| {
            let spins = (0..p.seeds)
                .map(|k| single_qubit_spin(theta, &noisy, p.shots, seed(k)))
                .collect::<Result<Vec<f64>>>()?;
            let mean_spin = stats::mean(&spins);
            let expected = (1.0 - 2.0 * p.flip_p) * ideal_spin(theta);
            let stderr = stats::std_err(&spins);
            Ok(FlipCheck {
                theta,
                mean_spin,
                expected,
                stderr,
                pass: (mean_spin - expected).abs() <= 3.0 * stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cos_pass = fraction_within >= p.min_fraction;
    let flip_pass = flip.iter().all(|f| f.pass);
    Ok(SimCheckReport {
        params: *p,
        tolerance,
        cells,
        cells_within: within,
        fraction_within,
        cos_pass,
        flip,
        flip_pass,
        pass: cos_pass && flip_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_check_passes() {
        let r = run_sim_check(&SimCheckParams {
            seeds: 10,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(r.cells, 70);
        assert!(r.cos_pass, "{r:?}");
        assert_eq!(r.flip.len(), 7);
    }

    #[test]
    fn rejects_degenerate_params() {
        let bad = SimCheckParams {
            seeds: 1,
            ..Default::default()
        };
        assert!(run_sim_check(&bad).is_err());
    }
}
