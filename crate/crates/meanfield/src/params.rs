//! Model parameters for the multi-population delayed random network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigmoid::SigmoidSpec;

/// Dense M×M matrix of per-population-pair parameters, row-major:
/// entry `(alpha, gamma)` is the parameter for connections from
/// population `gamma` onto population `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopMatrix<T> {
    pub m: usize,
    pub data: Vec<T>,
}

impl<T: Clone> PopMatrix<T> {
    pub fn new(m: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::invalid("matrix", format!("expected {} entries, got {}", m * m, data.len())));
        }
        Ok(PopMatrix { m, data })
    }

    pub fn filled(m: usize, value: T) -> Self {
        PopMatrix { m, data: vec![value; m * m] }
    }

    pub fn get(&self, alpha: usize, gamma: usize) -> &T {
        &self.data[alpha * self.m + gamma]
    }

    pub fn set(&mut self, alpha: usize, gamma: usize, value: T) {
        self.data[alpha * self.m + gamma] = value;
    }
}

/// Initial law on the history window `[-τ, 0]`: one value per neuron,
/// drawn at time zero and held constant over the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialLaw {
    DeterministicConstant { values: Vec<f64> },
    GaussianIid { mean: Vec<f64>, variance: Vec<f64> },
}

impl InitialLaw {
    pub fn mean(&self, alpha: usize) -> f64 {
        match self {
            InitialLaw::DeterministicConstant { values } => values[alpha],
            InitialLaw::GaussianIid { mean, .. } => mean[alpha],
        }
    }

    pub fn variance(&self, alpha: usize) -> f64 {
        match self {
            InitialLaw::DeterministicConstant { .. } => 0.0,
            InitialLaw::GaussianIid { variance, .. } => variance[alpha],
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        match self {
            InitialLaw::DeterministicConstant { values } => {
                if values.len() != m {
                    return Err(Error::invalid("init.values", format!("expected {m} entries")));
                }
            }
            InitialLaw::GaussianIid { mean, variance } => {
                if mean.len() != m || variance.len() != m {
                    return Err(Error::invalid("init", format!("expected {m} entries")));
                }
                if variance.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                    return Err(Error::invalid("init.variance", "must be non-negative"));
                }
            }
        }
        Ok(())
    }
}

/// Full parameter set of the network and its mean-field limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Population count M.
    pub m: usize,
    /// Per-population time constants θ_α (> 0).
    pub theta: Vec<f64>,
    /// Per-population noise intensities λ_α (≥ 0).
    pub lambda: Vec<f64>,
    /// Mean synaptic matrix J̄.
    pub jbar: PopMatrix<f64>,
    /// Disorder matrix σ (≥ 0).
    pub sigma: PopMatrix<f64>,
    /// Delay matrix τ (≥ 0).
    pub tau: PopMatrix<f64>,
    /// Per-pair sigmoids S_{αγ}.
    pub sigmoids: PopMatrix<SigmoidSpec>,
    /// Initial law on the history window.
    pub init: InitialLaw,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Err(Error::invalid("m", "population count must be positive"));
        }
        if self.theta.len() != m || self.lambda.len() != m {
            return Err(Error::invalid("theta/lambda", format!("expected {m} entries")));
        }
        if self.theta.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::invalid("theta", "time constants must be positive"));
        }
        if self.lambda.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(Error::invalid("lambda", "noise intensities must be non-negative"));
        }
        for (name, mat) in [("jbar", &self.jbar), ("sigma", &self.sigma), ("tau", &self.tau)] {
            if mat.m != m || mat.data.len() != m * m {
                return Err(Error::invalid(name, format!("expected {m}x{m}")));
            }
            if mat.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(name, "entries must be finite"));
            }
        }
        if self.sigma.data.iter().any(|&s| s < 0.0) {
            return Err(Error::invalid("sigma", "disorder must be non-negative"));
        }
        if self.tau.data.iter().any(|&t| t < 0.0) {
            return Err(Error::invalid("tau", "delays must be non-negative"));
        }
        if self.sigmoids.m != m {
            return Err(Error::invalid("sigmoids", format!("expected {m}x{m}")));
        }
        self.init.validate(m)?;
        Ok(())
    }

    /// Maximum delay: the history window length.
    pub fn max_delay(&self) -> f64 {
        self.tau.data.iter().cloned().fold(0.0, f64::max)
    }

    /// True when all off-diagonal disorder entries vanish (the gradient /
    /// potential case).
    pub fn diagonal_disorder(&self) -> bool {
        (0..self.m).all(|a| (0..self.m).all(|g| a == g || *self.sigma.get(a, g) == 0.0))
    }

    /// One-population model with a uniform sigmoid; convenience for the
    /// single-population analyses.
    pub fn one_population(
        theta: f64,
        lambda: f64,
        jbar: f64,
        sigma: f64,
        tau: f64,
        sigmoid: SigmoidSpec,
        init: InitialLaw,
    ) -> Result<Self> {
        let p = ModelParams {
            m: 1,
            theta: vec![theta],
            lambda: vec![lambda],
            jbar: PopMatrix::filled(1, jbar),
            sigma: PopMatrix::filled(1, sigma),
            tau: PopMatrix::filled(1, tau),
            sigmoids: PopMatrix::filled(1, sigmoid),
            init,
        };
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmoid::SigmoidSpec;

    fn base() -> ModelParams {
        ModelParams::one_population(
            1.0,
            0.5,
            0.0,
            0.0,
            0.0,
            SigmoidSpec::gaussian_cdf(1.0).unwrap(),
            InitialLaw::DeterministicConstant { values: vec![0.0] },
        )
        .unwrap()
    }

    #[test]
    fn validates_good_params() {
        assert!(base().validate().is_ok());
    }

    #[test]
    fn rejects_bad_entries() {
        let mut p = base();
        p.theta[0] = 0.0;
        assert!(p.validate().is_err());
        let mut p = base();
        p.sigma.set(0, 0, -1.0);
        assert!(p.validate().is_err());
        let mut p = base();
        p.tau.set(0, 0, -0.1);
        assert!(p.validate().is_err());
        let mut p = base();
        p.init = InitialLaw::GaussianIid { mean: vec![0.0], variance: vec![-1.0] };
        assert!(p.validate().is_err());
    }

    #[test]
    fn max_delay_and_diagonal_disorder() {
        let mut p = base();
        p.tau.set(0, 0, 0.25);
        assert_eq!(p.max_delay(), 0.25);
        assert!(p.diagonal_disorder());
    }
}
