//! The hybrid reservoir loop: classical encoding, the noisy quantum layer and
//! the spin state carried between steps.

use rand::Rng;

use crate::encoding::{encode_angles, EncodingWeights};
use crate::error::Result;
use crate::quantum::{run_step, NoiseModel, SpinVector};
use crate::topology::ReservoirTopology;

/// Everything except the graph needed to build a [`Reservoir`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirSpec {
    pub weights: EncodingWeights,
    pub noise: NoiseModel,
    pub shots: u64,
}

impl ReservoirSpec {
    pub fn build(&self, topology: ReservoirTopology) -> Reservoir {
        Reservoir::new(topology, self.weights, self.noise, self.shots)
    }
}

#[derive(Debug, Clone)]
pub struct Reservoir {
    topology: ReservoirTopology,
    weights: EncodingWeights,
    noise: NoiseModel,
    shots: u64,
    spins: SpinVector,
}

impl Reservoir {
    /// Starts from the ground-state spins (all +1).
    pub fn new(
        topology: ReservoirTopology,
        weights: EncodingWeights,
        noise: NoiseModel,
        shots: u64,
    ) -> Self {
        let spins = SpinVector::ground(topology.n_qubits());
        Self {
            topology,
            weights,
            noise,
            shots,
            spins,
        }
    }

    pub fn with_initial_spins(mut self, spins: SpinVector) -> Self {
        assert_eq!(spins.len(), self.topology.n_qubits());
        self.spins = spins;
        self
    }

    pub fn topology(&self) -> &ReservoirTopology {
        &self.topology
    }

    pub fn n_qubits(&self) -> usize {
        self.topology.n_qubits()
    }

    pub fn spins(&self) -> &SpinVector {
        &self.spins
    }

    /// Advances one time step with per-qubit inputs `u_window` and the fed
    /// back error, returning the new spins.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        u_window: &[f64],
        error: f64,
        rng: &mut R,
    ) -> Result<&SpinVector> {
        let angles = encode_angles(u_window, &self.spins, error, &self.topology, &self.weights)?;
        self.spins = run_step(&angles, &self.noise, self.shots, rng)?;
        Ok(&self.spins)
    }
}

/// Inputs seen by qubit `m` at step `t`: `inputs[t - m]`, zero before the
/// start of the series.
pub fn lag_window(inputs: &[f64], t: usize, n: usize) -> Vec<f64> {
    (0..n)
        .map(|m| if m <= t { inputs[t - m] } else { 0.0 })
        .collect()
}
