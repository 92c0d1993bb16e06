//! Human-editable TOML configuration for models and simulations.
//!
//! The layout mirrors the model's irreducible surface: per-population
//! vectors (`theta`, `lambda`) and row-major pair matrices (`jbar`,
//! `sigma`, `tau`), one sigmoid family applied to every pair, and an
//! initial law. An optional `[simulation]` section adds network-size,
//! grid and seed choices.
//!
//! ```toml
//! [model]
//! populations = 2
//! theta = [1.0, 1.0]
//! lambda = [0.5, 0.5]
//! jbar = [[15.0, -12.0], [16.0, -5.0]]
//! sigma = [[1.0, 1.0], [1.0, 1.0]]
//! tau = [[0.0, 0.0], [0.0, 0.0]]
//!
//! [model.sigmoid]
//! family = "gaussian-cdf"
//! gain = 2.0
//!
//! [model.init]
//! kind = "gaussian-iid"
//! mean = [0.0, 0.0]
//! variance = [1.0, 1.0]
//!
//! [simulation]
//! n-per-pop = [2000, 2000]
//! dt = 0.005
//! horizon = 2.0
//! seed = 1
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::NetworkConfig;
use crate::params::{InitialLaw, ModelParams, PopMatrix};
use crate::sigmoid::{SigmoidFamily, SigmoidSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SigmoidSection {
    pub family: SigmoidFamily,
    /// Raw gain `g` of `Φ(g·x)`; exactly one of `gain`/`slope` is required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    /// Alternative: prescribe `S'(0)` directly (the closed-form loci are
    /// parameterized by this slope).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

impl SigmoidSection {
    pub fn to_spec(&self) -> Result<SigmoidSpec> {
        match (self.gain, self.slope) {
            (Some(g), None) => SigmoidSpec::new(self.family, g),
            (None, Some(s)) => {
                SigmoidSpec::new(self.family, (2.0 * std::f64::consts::PI).sqrt() * s)
            }
            _ => Err(Error::Config("sigmoid needs exactly one of gain/slope".into())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ModelSection {
    pub populations: usize,
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub jbar: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
    pub sigmoid: SigmoidSection,
    pub init: InitialLaw,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulationSection {
    pub n_per_pop: Vec<usize>,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
}

fn matrix(m: usize, name: &str, rows: &[Vec<f64>]) -> Result<PopMatrix<f64>> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Config(format!("model.{name}: expected a {m}x{m} matrix")));
    }
    PopMatrix::new(m, rows.iter().flatten().copied().collect())
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_params(&self) -> Result<ModelParams> {
        let m = self.model.populations;
        let params = ModelParams {
            m,
            theta: self.model.theta.clone(),
            lambda: self.model.lambda.clone(),
            jbar: matrix(m, "jbar", &self.model.jbar)?,
            sigma: matrix(m, "sigma", &self.model.sigma)?,
            tau: matrix(m, "tau", &self.model.tau)?,
            sigmoids: PopMatrix::filled(m, self.model.sigmoid.to_spec()?),
            init: self.model.init.clone(),
        };
        params.validate()?;
        Ok(params)
    }

    /// Full network configuration; errors when `[simulation]` is missing.
    pub fn to_network_config(&self) -> Result<NetworkConfig> {
        let sim = self
            .simulation
            .as_ref()
            .ok_or_else(|| Error::Config("missing [simulation] section".into()))?;
        let config = NetworkConfig {
            params: self.to_params()?,
            n_per_pop: sim.n_per_pop.clone(),
            dt: sim.dt,
            horizon: sim.horizon,
            seed: sim.seed,
        };
        config.validate()?;
        Ok(config)
    }
}
