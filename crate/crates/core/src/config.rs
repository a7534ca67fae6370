//! Run configuration: a TOML document with one section per module.
//!
//! ```toml
//! seed = 42
//! n_qubits = 6
//! shots = 8192
//! topology = "self-loops:n-1"
//! burn_in_fraction = 0.3333333333333333
//!
//! [noise]
//! preset = "rochester-like"
//! crosstalk_kappa = 0.02      # optional per-field override
//!
//! [encoding]
//! alpha = 0.3
//!
//! [readout]
//! feedback_scale = "burn-in-mean-abs"
//!
//! [mc]
//! seeds = 10
//!
//! [narma]
//! length = 5000
//!
//! [forecast]
//! data = "market.csv"
//!
//! [sim_check]
//! seeds = 50
//! ```
//!
//! Every field is optional. After [`RunConfig::resolve`] the noise section
//! carries explicit values for every parameter, so serializing a resolved
//! config gives a self-contained description of the run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::{AsymTransformParams, EncodingWeights};
use crate::error::{config_error, Error, Result};
use crate::forecast::{FeedbackScale, OnlineSettings};
use crate::mc::{McConfig, SweepSettings};
use crate::narma::{NarmaConfig, NarmaRun};
use crate::pipeline::ForecastSettings;
use crate::quantum::{JitterMode, NoiseModel, DEFAULT_SHOTS};
use crate::readout::RlsParams;
use crate::reservoir::ReservoirSpec;
use crate::sim_check::SimCheckParams;
use crate::topology::{ReservoirTopology, TopologySelector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisePreset {
    None,
    #[default]
    RochesterLike,
}

impl NoisePreset {
    pub fn model(self) -> NoiseModel {
        match self {
            NoisePreset::None => NoiseModel::noiseless(),
            NoisePreset::RochesterLike => NoiseModel::rochester_like(),
        }
    }
}

impl fmt::Display for NoisePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoisePreset::None => "none",
            NoisePreset::RochesterLike => "rochester-like",
        })
    }
}

impl FromStr for NoisePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NoisePreset::None),
            "rochester-like" => Ok(NoisePreset::RochesterLike),
            other => Err(config_error(
                "noise.preset",
                format!("unknown preset `{other}` (expected none or rochester-like)"),
            )),
        }
    }
}

/// A preset plus optional per-parameter overrides.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub preset: NoisePreset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_jitter_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_flip_0to1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_flip_1to0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crosstalk_kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter_mode: Option<JitterMode>,
}

impl NoiseSection {
    pub fn from_preset(preset: NoisePreset) -> Self {
        Self {
            preset,
            ..Default::default()
        }
    }

    pub fn model(&self) -> NoiseModel {
        let base = self.preset.model();
        NoiseModel {
            angle_jitter_sigma: self.angle_jitter_sigma.unwrap_or(base.angle_jitter_sigma),
            p_flip_0to1: self.p_flip_0to1.unwrap_or(base.p_flip_0to1),
            p_flip_1to0: self.p_flip_1to0.unwrap_or(base.p_flip_1to0),
            crosstalk_kappa: self.crosstalk_kappa.unwrap_or(base.crosstalk_kappa),
            jitter_mode: self.jitter_mode.unwrap_or(base.jitter_mode),
        }
    }

    /// Same model, every field spelled out.
    fn explicit(&self) -> Self {
        let m = self.model();
        Self {
            preset: self.preset,
            angle_jitter_sigma: Some(m.angle_jitter_sigma),
            p_flip_0to1: Some(m.p_flip_0to1),
            p_flip_1to0: Some(m.p_flip_1to0),
            crosstalk_kappa: Some(m.crosstalk_kappa),
            jitter_mode: Some(m.jitter_mode),
        }
    }
}

/// Angle-encoding weights and the asymmetric return transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingSection {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha_prime: f64,
    pub gamma_prime: f64,
    pub a0: f64,
    pub a1: f64,
}

impl Default for EncodingSection {
    fn default() -> Self {
        let w = EncodingWeights::default();
        let a = AsymTransformParams::default();
        Self {
            alpha: w.alpha,
            beta: w.beta,
            gamma: w.gamma,
            alpha_prime: w.alpha_prime,
            gamma_prime: w.gamma_prime,
            a0: a.a0,
            a1: a.a1,
        }
    }
}

impl EncodingSection {
    pub fn weights(&self) -> EncodingWeights {
        EncodingWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            alpha_prime: self.alpha_prime,
            gamma_prime: self.gamma_prime,
        }
    }

    pub fn asym(&self) -> AsymTransformParams {
        AsymTransformParams {
            a0: self.a0,
            a1: self.a1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSection {
    pub ridge_lambda: f64,
    pub forgetting: f64,
    pub intercept: bool,
    pub feedback_scale: FeedbackScale,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        let r = RlsParams::default();
        Self {
            ridge_lambda: r.ridge_lambda,
            forgetting: r.forgetting,
            intercept: r.intercept,
            feedback_scale: FeedbackScale::default(),
        }
    }
}

impl ReadoutSection {
    pub fn rls(&self) -> RlsParams {
        RlsParams {
            ridge_lambda: self.ridge_lambda,
            forgetting: self.forgetting,
            intercept: self.intercept,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    /// Market CSV with header `date,spx,vix`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

/// Quantum-layer self-test; shots and seed come from the top level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimCheckSection {
    pub seeds: usize,
    pub angle_steps: usize,
    pub flip_p: f64,
    pub min_fraction: f64,
}

impl Default for SimCheckSection {
    fn default() -> Self {
        let p = SimCheckParams::default();
        Self {
            seeds: p.seeds,
            angle_steps: p.angle_steps,
            flip_p: p.flip_p,
            min_fraction: p.min_fraction,
        }
    }
}

impl SimCheckSection {
    pub fn validate(&self) -> Result<()> {
        if self.seeds < 2 {
            return Err(config_error("sim_check.seeds", "must be >= 2"));
        }
        if self.angle_steps == 0 {
            return Err(config_error("sim_check.angle_steps", "must be >= 1"));
        }
        if !(0.0..0.5).contains(&self.flip_p) {
            return Err(config_error("sim_check.flip_p", "must lie in [0, 0.5)"));
        }
        if !(0.0..=1.0).contains(&self.min_fraction) {
            return Err(config_error("sim_check.min_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n_qubits: usize,
    pub shots: u64,
    pub topology: TopologySelector,
    /// JSON topology file `{n, loops, edges}`; takes precedence over
    /// `topology` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology_file: Option<PathBuf>,
    pub burn_in_fraction: f64,
    pub noise: NoiseSection,
    pub encoding: EncodingSection,
    pub readout: ReadoutSection,
    pub mc: McConfig,
    pub narma: NarmaConfig,
    pub forecast: ForecastSection,
    pub sim_check: SimCheckSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_qubits: 6,
            shots: DEFAULT_SHOTS,
            topology: TopologySelector::default(),
            topology_file: None,
            burn_in_fraction: 1.0 / 3.0,
            noise: NoiseSection::default(),
            encoding: EncodingSection::default(),
            readout: ReadoutSection::default(),
            mc: McConfig::default(),
            narma: NarmaConfig::default(),
            forecast: ForecastSection::default(),
            sim_check: SimCheckSection::default(),
        }
    }
}

/// Maps a TOML error onto a config error naming the offending key when the
/// parser reports one.
fn toml_error(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.contains("unknown field") || msg.contains("missing field"))
        .unwrap_or("<document>")
        .to_string();
    config_error(field, msg.trim())
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(toml_error)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(config_error("n_qubits", "must be >= 2"));
        }
        if self.n_qubits > 64 {
            return Err(config_error("n_qubits", "must be <= 64"));
        }
        if self.shots == 0 {
            return Err(config_error("shots", "must be >= 1"));
        }
        if !(self.burn_in_fraction > 0.0 && self.burn_in_fraction < 1.0) {
            return Err(config_error("burn_in_fraction", "must lie in (0, 1)"));
        }
        self.noise.model().validate()?;
        self.encoding.weights().validate()?;
        self.encoding.asym().validate()?;
        self.readout.rls().validate()?;
        self.readout.feedback_scale.validate()?;
        self.mc.validate()?;
        self.narma.validate()?;
        self.sim_check.validate()?;
        if self.topology_file.is_none() {
            self.topology
                .resolve(self.n_qubits)
                .map_err(|e| config_error("topology", e.to_string()))?;
        }
        Ok(())
    }

    /// Validates and spells out preset-derived values.
    pub fn resolve(mut self) -> Result<Self> {
        self.validate()?;
        self.noise = self.noise.explicit();
        Ok(self)
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.model()
    }

    pub fn reservoir_spec(&self) -> ReservoirSpec {
        ReservoirSpec {
            weights: self.encoding.weights(),
            noise: self.noise_model(),
            shots: self.shots,
        }
    }

    /// The production graph: the JSON file if given, else the selector.
    pub fn topology(&self) -> Result<ReservoirTopology> {
        match &self.topology_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let topo = ReservoirTopology::from_json(&text)
                    .map_err(|e| config_error("topology_file", e.to_string()))?;
                if topo.n_qubits() != self.n_qubits {
                    return Err(config_error(
                        "topology_file",
                        format!(
                            "graph has {} qubits but n_qubits = {}",
                            topo.n_qubits(),
                            self.n_qubits
                        ),
                    ));
                }
                Ok(topo)
            }
            None => self
                .topology
                .resolve(self.n_qubits)
                .map_err(|e| config_error("topology", e.to_string())),
        }
    }

    pub fn online_settings(&self) -> OnlineSettings {
        OnlineSettings {
            rls: self.readout.rls(),
            feedback_scale: self.readout.feedback_scale,
            burn_in_records: 0,
        }
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            spec: self.reservoir_spec(),
            mc: self.mc,
            burn_in_fraction: self.burn_in_fraction,
            base_seed: self.seed,
        }
    }

    pub fn narma_run(&self) -> NarmaRun {
        NarmaRun {
            narma: self.narma,
            spec: self.reservoir_spec(),
            online: self.online_settings(),
            burn_in_fraction: self.burn_in_fraction,
            seed: self.seed,
        }
    }

    pub fn sim_check_params(&self) -> SimCheckParams {
        SimCheckParams {
            shots: self.shots,
            seeds: self.sim_check.seeds,
            angle_steps: self.sim_check.angle_steps,
            flip_p: self.sim_check.flip_p,
            min_fraction: self.sim_check.min_fraction,
            base_seed: self.seed,
        }
    }

    pub fn forecast_settings(&self) -> ForecastSettings {
        ForecastSettings {
            spec: self.reservoir_spec(),
            asym: self.encoding.asym(),
            online: self.online_settings(),
            burn_in_fraction: self.burn_in_fraction,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = RunConfig::from_toml_str(
            "seed = 7\n[encoding]\nbeta = 0.2\n[mc]\nseeds = 3\n[narma.params]\nmu = 0.2\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.encoding.beta, 0.2);
        assert_eq!(c.encoding.alpha, 0.3);
        assert_eq!(c.mc.seeds, 3);
        assert_eq!(c.mc.tau_max, 120);
        assert_eq!(c.narma.params.mu, 0.2);
        assert_eq!(c.narma.length, 5000);
    }

    #[test]
    fn unknown_key_names_field() {
        match RunConfig::from_toml_str("[noise]\nsigma = 0.1\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "sigma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_field() {
        let cases = [
            ("burn_in_fraction = 1.5", "burn_in_fraction"),
            ("shots = 0", "shots"),
            ("n_qubits = 1", "n_qubits"),
            ("[noise]\np_flip_0to1 = 2.0", "noise.p_flip_0to1"),
            ("[encoding]\nalpha = 0.9", "encoding.alpha"),
            ("[readout]\nforgetting = 0.0", "readout.forgetting"),
            ("[readout]\nfeedback_scale = -1.0", "readout.feedback_scale"),
            ("[mc]\ntrain_fraction = 1.0", "mc.train_fraction"),
            ("[narma]\nlength = 3", "narma.length"),
            ("topology = 'self-loops:9'", "topology"),
        ];
        for (doc, want) in cases {
            let c = RunConfig::from_toml_str(doc).unwrap();
            match c.validate() {
                Err(Error::Config { field, .. }) => assert_eq!(field, want, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
    }

    #[test]
    fn preset_overrides() {
        let c =
            RunConfig::from_toml_str("[noise]\npreset = 'none'\ncrosstalk_kappa = 0.05\n").unwrap();
        let m = c.noise_model();
        assert_eq!(m.crosstalk_kappa, 0.05);
        assert_eq!(m.p_flip_0to1, 0.0);
        assert_eq!(
            RunConfig::default().noise_model(),
            NoiseModel::rochester_like()
        );
    }

    #[test]
    fn resolved_round_trip() {
        let c = RunConfig::from_toml_str("seed = 3\n[readout]\nfeedback_scale = 0.5\n")
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(c.noise.p_flip_1to0, Some(0.03));
        let text = c.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.burn_in_fraction.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn default_topology_is_all_but_last() {
        let t = RunConfig::default().topology().unwrap();
        assert_eq!(t.loop_count(), 5);
        assert!(!t.has_self_loop(5));
    }
}
