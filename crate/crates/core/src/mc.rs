//! Memory-capacity measurement and the topology sweep.
//!
//! The reservoir is driven by i.i.d. uniform input with the error feedback
//! held at zero. For each delay `τ` a ridge readout is trained to recover
//! `u[k-τ]` from the state at step `k`; `r²_τ` is the squared Pearson
//! correlation between reconstruction and truth on a held-out tail, and the
//! memory capacity is `Σ_{τ=1}^{τ_max} r²_τ`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config_error, invalid_argument, invalid_data, Result};
use crate::reservoir::{lag_window, ReservoirSpec};
use crate::rng::{stream, Stream};
use crate::stats;
use crate::topology::{build_sequence, ReservoirTopology};

/// What each qubit receives while the reservoir is being characterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McInputMode {
    /// Every qubit sees the current drive value.
    #[default]
    Broadcast,
    /// Qubit `m` sees the drive lagged by `m`, as in forecasting.
    LagWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub seeds: usize,
    pub tau_max: usize,
    /// Drive samples kept after burn-in.
    pub drive_length: usize,
    pub train_fraction: f64,
    pub ridge_lambda: f64,
    pub input_mode: McInputMode,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seeds: 10,
            tau_max: 120,
            drive_length: 2000,
            train_fraction: 0.7,
            ridge_lambda: 1e-6,
            input_mode: McInputMode::default(),
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(config_error("mc.seeds", "must be >= 1"));
        }
        if self.tau_max == 0 {
            return Err(config_error("mc.tau_max", "must be >= 1"));
        }
        if self.drive_length < 10 {
            return Err(config_error("mc.drive_length", "must be >= 10"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(config_error("mc.train_fraction", "must lie in (0, 1)"));
        }
        if !(self.ridge_lambda.is_finite() && self.ridge_lambda > 0.0) {
            return Err(config_error("mc.ridge_lambda", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Total drive length and burn-in so that `drive_length` samples remain
    /// after discarding the leading `burn_in_fraction`.
    pub fn drive_layout(&self, burn_in_fraction: f64) -> (usize, usize) {
        let total = (self.drive_length as f64 / (1.0 - burn_in_fraction)).round() as usize;
        let total = total.max(self.drive_length);
        (total, total - self.drive_length)
    }
}

/// i.i.d. uniform `[0, 1)` drive, reproducible per seed.
pub fn gen_drive(length: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Stream::Drive);
    (0..length).map(|_| rng.random::<f64>()).collect()
}

/// Recorded reservoir states aligned with their drive: row `i` was produced
/// at drive index `offset + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrace {
    pub states: DMatrix<f64>,
    pub inputs: Vec<f64>,
    pub offset: usize,
}

impl StateTrace {
    pub fn new(states: DMatrix<f64>, inputs: Vec<f64>, offset: usize) -> Result<Self> {
        if offset + states.nrows() > inputs.len() {
            return Err(invalid_argument(format!(
                "{} state rows at offset {offset} exceed {} inputs",
                states.nrows(),
                inputs.len()
            )));
        }
        Ok(Self {
            states,
            inputs,
            offset,
        })
    }

    pub fn rows(&self) -> usize {
        self.states.nrows()
    }
}

/// Drives the reservoir in characterization mode (zero error feedback) and
/// keeps the spins after `burn_in` steps.
pub fn collect_states<R: Rng + ?Sized>(
    drive: &[f64],
    topo: &ReservoirTopology,
    spec: &ReservoirSpec,
    mode: McInputMode,
    burn_in: usize,
    rng: &mut R,
) -> Result<StateTrace> {
    if drive.len() <= burn_in {
        return Err(invalid_argument(format!(
            "drive length {} does not exceed burn-in {burn_in}",
            drive.len()
        )));
    }
    let n = topo.n_qubits();
    let mut reservoir = spec.build(topo.clone());
    let kept = drive.len() - burn_in;
    let mut states = DMatrix::zeros(kept, n);
    let mut window = vec![0.0; n];
    for (k, &u) in drive.iter().enumerate() {
        match mode {
            McInputMode::Broadcast => window.iter_mut().for_each(|w| *w = u),
            McInputMode::LagWindow => window = lag_window(drive, k, n),
        }
        let spins = reservoir.step(&window, 0.0, rng)?;
        if k >= burn_in {
            for (m, &s) in spins.as_slice().iter().enumerate() {
                states[(k - burn_in, m)] = s;
            }
        }
    }
    StateTrace::new(states, drive.to_vec(), burn_in)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayFit {
    pub train_fraction: f64,
    pub ridge_lambda: f64,
}

impl From<&McConfig> for DelayFit {
    fn from(c: &McConfig) -> Self {
        Self {
            train_fraction: c.train_fraction,
            ridge_lambda: c.ridge_lambda,
        }
    }
}

/// Ridge regression of delayed inputs on states, factorized once and reused
/// for every delay. All delays share the same rows, so the trace must carry
/// at least `τ` inputs of history before its first row.
struct DelayRegression<'a> {
    trace: &'a StateTrace,
    split: usize,
    x_mean: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> DelayRegression<'a> {
    fn new(trace: &'a StateTrace, fit: &DelayFit) -> Result<Self> {
        let rows = trace.rows();
        let split = (rows as f64 * fit.train_fraction).floor() as usize;
        if split < 2 || rows - split < 2 {
            return Err(invalid_argument(format!(
                "{rows} rows are too few for a {} train fraction",
                fit.train_fraction
            )));
        }
        let train = trace.states.rows(0, split);
        let x_mean = train.row_mean().transpose();
        let centered = DMatrix::from_fn(split, train.ncols(), |i, j| train[(i, j)] - x_mean[j]);
        let mut gram = centered.transpose() * &centered;
        for j in 0..gram.ncols() {
            gram[(j, j)] += fit.ridge_lambda;
        }
        let chol = gram.cholesky().ok_or_else(|| {
            invalid_data("regularized state Gram matrix is not positive definite")
        })?;
        Ok(Self {
            trace,
            split,
            x_mean,
            chol,
        })
    }

    fn r_squared(&self, tau: usize) -> Result<f64> {
        let t = self.trace;
        if tau == 0 || tau > t.offset {
            return Err(invalid_argument(format!(
                "delay {tau} needs 1 <= tau <= {} (history before first row)",
                t.offset
            )));
        }
        let target = |i: usize| t.inputs[t.offset + i - tau];
        let rows = t.rows();
        let n = t.states.ncols();
        let y_mean = (0..self.split).map(target).sum::<f64>() / self.split as f64;
        let mut rhs = DVector::zeros(n);
        for i in 0..self.split {
            let dy = target(i) - y_mean;
            for j in 0..n {
                rhs[j] += (t.states[(i, j)] - self.x_mean[j]) * dy;
            }
        }
        let w = self.chol.solve(&rhs);
        let (pred, truth): (Vec<f64>, Vec<f64>) = (self.split..rows)
            .map(|i| {
                let p = y_mean
                    + (0..n)
                        .map(|j| (t.states[(i, j)] - self.x_mean[j]) * w[j])
                        .sum::<f64>();
                (p, target(i))
            })
            .unzip();
        Ok(match stats::pearson(&pred, &truth) {
            Some(r) => (r * r).clamp(0.0, 1.0),
            None => 0.0,
        })
    }
}

/// Held-out squared correlation between the ridge reconstruction of
/// `u[k-τ]` and its true value; 0 when either side has no variance.
pub fn delay_r_squared(trace: &StateTrace, tau: usize, fit: &DelayFit) -> Result<f64> {
    DelayRegression::new(trace, fit)?.r_squared(tau)
}

/// `r²_τ` for `τ = 1..=tau_max` and their sum.
pub fn memory_capacity(
    trace: &StateTrace,
    tau_max: usize,
    fit: &DelayFit,
) -> Result<(Vec<f64>, f64)> {
    let reg = DelayRegression::new(trace, fit)?;
    let r_sq = (1..=tau_max)
        .map(|tau| reg.r_squared(tau))
        .collect::<Result<Vec<f64>>>()?;
    let mc = r_sq.iter().sum();
    Ok((r_sq, mc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub topology: ReservoirTopology,
    /// Seed-averaged `r²_τ`, index 0 is `τ = 1`.
    pub r_sq: Vec<f64>,
    /// Sum of `r_sq`.
    pub mc: f64,
    /// Standard error of the per-seed capacities.
    pub mc_stderr: f64,
    pub mc_per_seed: Vec<f64>,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub results: Vec<McResult>,
    pub argmax: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSettings {
    pub spec: ReservoirSpec,
    pub mc: McConfig,
    pub burn_in_fraction: f64,
    pub base_seed: u64,
}

/// Seed of the `k`-th repetition.
pub fn repetition_seed(base: u64, k: usize) -> u64 {
    base.wrapping_add(k as u64)
}

/// Memory capacity of one topology for one repetition. The drive and the
/// quantum stream depend only on the repetition seed, so different topologies
/// see common random numbers.
pub fn measure(
    topo: &ReservoirTopology,
    settings: &SweepSettings,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let (total, burn_in) = settings.mc.drive_layout(settings.burn_in_fraction);
    if burn_in < settings.mc.tau_max {
        return Err(invalid_argument(format!(
            "burn-in of {burn_in} steps is shorter than tau_max = {}",
            settings.mc.tau_max
        )));
    }
    let drive = gen_drive(total, seed);
    let mut rng = stream(seed, Stream::Quantum);
    let trace = collect_states(
        &drive,
        topo,
        &settings.spec,
        settings.mc.input_mode,
        burn_in,
        &mut rng,
    )?;
    memory_capacity(&trace, settings.mc.tau_max, &DelayFit::from(&settings.mc))
}

/// Measures every topology of the complexity sequence over all seeds.
/// Work is spread over the current rayon pool; results come back in
/// sequence order regardless of scheduling.
pub fn sweep(n: usize, settings: &SweepSettings) -> Result<SweepResult> {
    let topologies = build_sequence(n)?;
    sweep_topologies(&topologies, settings)
}

pub fn sweep_topologies(
    topologies: &[ReservoirTopology],
    settings: &SweepSettings,
) -> Result<SweepResult> {
    settings.mc.validate()?;
    if topologies.is_empty() {
        return Err(invalid_argument("no topologies to sweep"));
    }
    let seeds = settings.mc.seeds;
    let jobs: Vec<(usize, usize)> = (0..topologies.len())
        .flat_map(|t| (0..seeds).map(move |k| (t, k)))
        .collect();
    let measured: Vec<(Vec<f64>, f64)> = jobs
        .par_iter()
        .map(|&(t, k)| {
            measure(
                &topologies[t],
                settings,
                repetition_seed(settings.base_seed, k),
            )
        })
        .collect::<Result<_>>()?;

    let results: Vec<McResult> = topologies
        .iter()
        .enumerate()
        .map(|(t, topo)| {
            let runs = &measured[t * seeds..(t + 1) * seeds];
            let tau_max = settings.mc.tau_max;
            let r_sq: Vec<f64> = (0..tau_max)
                .map(|i| runs.iter().map(|(r, _)| r[i]).sum::<f64>() / seeds as f64)
                .collect();
            let mc_per_seed: Vec<f64> = runs.iter().map(|(_, mc)| *mc).collect();
            McResult {
                topology: topo.clone(),
                mc: r_sq.iter().sum(),
                r_sq,
                mc_stderr: stats::std_err(&mc_per_seed),
                mc_per_seed,
                seeds,
            }
        })
        .collect();
    let argmax = results.iter().enumerate().fold(
        0,
        |best, (i, r)| if r.mc > results[best].mc { i } else { best },
    );
    Ok(SweepResult { results, argmax })
}

/// One row per topology:
/// `sequence_index,loops,edges,edge_density,mc_mean,mc_stderr`.
pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "sequence_index",
        "loops",
        "edges",
        "edge_density",
        "mc_mean",
        "mc_stderr",
    ])?;
    for (i, r) in sweep.results.iter().enumerate() {
        wtr.write_record([
            r.topology.sequence_index().unwrap_or(i).to_string(),
            r.topology.loop_count().to_string(),
            r.topology.edge_count().to_string(),
            r.topology.edge_density().to_string(),
            r.mc.to_string(),
            r.mc_stderr.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::EncodingWeights;
    use crate::quantum::NoiseModel;

    /// Classical oracle reservoir whose state holds the previous `d` inputs.
    fn delay_line(drive: &[f64], d: usize, offset: usize) -> StateTrace {
        let rows = drive.len() - offset;
        let states = DMatrix::from_fn(rows, d, |i, j| drive[offset + i - 1 - j]);
        StateTrace::new(states, drive.to_vec(), offset).unwrap()
    }

    fn fit() -> DelayFit {
        DelayFit::from(&McConfig::default())
    }

    #[test]
    fn drive_is_reproducible_and_bounded() {
        assert_eq!(gen_drive(5, 7), gen_drive(5, 7));
        assert_ne!(gen_drive(5, 7), gen_drive(5, 8));
        let d = gen_drive(100_000, 3);
        assert!(d.iter().all(|&u| (0.0..=1.0).contains(&u)));
        assert!((stats::mean(&d) - 0.5).abs() < 0.01);
    }

    #[test]
    fn delay_line_recovers_stored_lags() {
        let drive = gen_drive(4000, 1);
        let trace = delay_line(&drive, 5, 200);
        for tau in 1..=5 {
            assert!(delay_r_squared(&trace, tau, &fit()).unwrap() > 0.999);
        }
        for tau in [6, 10, 50] {
            assert!(delay_r_squared(&trace, tau, &fit()).unwrap() < 0.02);
        }
    }

    #[test]
    fn mc_is_sum_of_delays() {
        let drive = gen_drive(2000, 2);
        let trace = delay_line(&drive, 3, 150);
        let (r_sq, mc) = memory_capacity(&trace, 120, &fit()).unwrap();
        assert_eq!(r_sq.len(), 120);
        assert_eq!(mc, r_sq.iter().sum::<f64>());
        for (i, r) in r_sq.iter().enumerate() {
            assert_eq!(*r, delay_r_squared(&trace, i + 1, &fit()).unwrap());
            assert!((0.0..=1.0).contains(r));
        }
        assert!(mc <= 120.0);
    }

    #[test]
    fn constant_target_gives_zero() {
        let drive = vec![0.4; 600];
        let states = DMatrix::from_fn(400, 2, |i, j| ((i * (j + 1)) as f64).sin());
        let trace = StateTrace::new(states, drive, 200).unwrap();
        assert_eq!(delay_r_squared(&trace, 3, &fit()).unwrap(), 0.0);
    }

    #[test]
    fn delay_beyond_history_is_rejected() {
        let drive = gen_drive(500, 2);
        let trace = delay_line(&drive, 2, 50);
        assert!(delay_r_squared(&trace, 51, &fit()).is_err());
        assert!(delay_r_squared(&trace, 0, &fit()).is_err());
    }

    fn spec(noise: NoiseModel) -> ReservoirSpec {
        ReservoirSpec {
            weights: EncodingWeights::default(),
            noise,
            shots: 8192,
        }
    }

    #[test]
    fn state_shape() {
        let drive = gen_drive(300, 4);
        let topo = ReservoirTopology::with_self_loops(4, 2).unwrap();
        let mut rng = stream(4, Stream::Quantum);
        let trace = collect_states(
            &drive,
            &topo,
            &spec(NoiseModel::noiseless()),
            McInputMode::Broadcast,
            100,
            &mut rng,
        )
        .unwrap();
        assert_eq!((trace.states.nrows(), trace.states.ncols()), (200, 4));
        let mut rng = stream(4, Stream::Quantum);
        assert!(collect_states(
            &drive,
            &topo,
            &spec(NoiseModel::noiseless()),
            McInputMode::Broadcast,
            300,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn loop_free_states_depend_on_current_input_only() {
        let drive = gen_drive(200, 5);
        let topo = ReservoirTopology::empty(3).unwrap();
        let huge = ReservoirSpec {
            shots: 1 << 40,
            ..spec(NoiseModel::noiseless())
        };
        let mut rng = stream(5, Stream::Quantum);
        let trace =
            collect_states(&drive, &topo, &huge, McInputMode::Broadcast, 50, &mut rng).unwrap();
        for i in 0..trace.rows() {
            let expected = (std::f64::consts::FRAC_PI_2 * 0.6 * drive[50 + i]).cos();
            for m in 0..3 {
                assert!((trace.states[(i, m)] - expected).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn self_loops_carry_past_inputs() {
        let drive = gen_drive(120, 6);
        let mut bumped = drive.clone();
        bumped[60] = 1.0 - bumped[60];
        let topo = ReservoirTopology::with_self_loops(6, 5).unwrap();
        let run = |d: &[f64]| {
            let mut rng = stream(6, Stream::Quantum);
            collect_states(
                d,
                &topo,
                &spec(NoiseModel::noiseless()),
                McInputMode::Broadcast,
                40,
                &mut rng,
            )
            .unwrap()
        };
        let (a, b) = (run(&drive), run(&bumped));
        // rows before the bump are untouched
        for i in 0..20 {
            assert_eq!(a.states.row(i), b.states.row(i));
        }
        // the looped qubits differ on the step after the bump
        let i = 61 - 40;
        assert!((0..5).any(|m| a.states[(i, m)] != b.states[(i, m)]));
    }

    #[test]
    fn drive_layout_default() {
        assert_eq!(McConfig::default().drive_layout(1.0 / 3.0), (3000, 1000));
    }

    #[test]
    fn sweep_small() {
        let settings = SweepSettings {
            spec: spec(NoiseModel::noiseless()),
            mc: McConfig {
                seeds: 2,
                tau_max: 10,
                drive_length: 300,
                ..Default::default()
            },
            burn_in_fraction: 1.0 / 3.0,
            base_seed: 9,
        };
        let out = sweep(3, &settings).unwrap();
        assert_eq!(out.results.len(), 7);
        for r in &out.results {
            assert_eq!(r.r_sq.len(), 10);
            assert_eq!(r.mc, r.r_sq.iter().sum::<f64>());
            assert!(r.mc >= 0.0 && r.mc <= 10.0);
        }
        assert!(out
            .results
            .iter()
            .all(|r| r.mc <= out.results[out.argmax].mc));
        let mut buf = Vec::new();
        write_sweep_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(
            text.starts_with("sequence_index,loops,edges,edge_density,mc_mean,mc_stderr\n0,0,0,0,")
        );
    }
}
