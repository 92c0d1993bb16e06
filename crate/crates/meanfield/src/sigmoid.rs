//! Sigmoidal voltage-to-rate functions.
//!
//! Two families are supported, both built on the standard normal CDF `Φ`:
//!
//! * `GaussianCdf`: `S(x) = Φ(g·x)`, range `(0, 1)` — the firing-rate
//!   convention used for excitatory/inhibitory networks.
//! * `CenteredErf`: `S(x) = Φ(g·x) − 1/2`, range `(−1/2, 1/2)` — the
//!   centered convention used for chaos-transition analysis.
//!
//! Both have derivative `g·φ(g·x)` and Lipschitz constant `g/√(2π)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{normal_cdf, normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmoidFamily {
    GaussianCdf,
    CenteredErf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidSpec {
    pub family: SigmoidFamily,
    pub gain: f64,
}

impl SigmoidSpec {
    pub fn new(family: SigmoidFamily, gain: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::invalid("gain", format!("must be positive, got {gain}")));
        }
        Ok(SigmoidSpec { family, gain })
    }

    pub fn gaussian_cdf(gain: f64) -> Result<Self> {
        Self::new(SigmoidFamily::GaussianCdf, gain)
    }

    pub fn centered_erf(gain: f64) -> Result<Self> {
        Self::new(SigmoidFamily::CenteredErf, gain)
    }

    /// Centered sigmoid with a prescribed derivative at zero.
    ///
    /// The gain is `√(2π)·slope`, so that `S'(0) = slope` exactly. The
    /// closed-form loci of the stationary analysis (pitchfork, Turing–Hopf)
    /// are parameterized by this slope.
    pub fn centered_with_slope(slope: f64) -> Result<Self> {
        Self::centered_erf((2.0 * std::f64::consts::PI).sqrt() * slope)
    }

    /// Evaluate the sigmoid. Total function, monotone non-decreasing.
    pub fn eval(&self, x: f64) -> f64 {
        match self.family {
            SigmoidFamily::GaussianCdf => normal_cdf(self.gain * x),
            SigmoidFamily::CenteredErf => normal_cdf(self.gain * x) - 0.5,
        }
    }

    /// Derivative `g·φ(g·x)`; strictly positive, maximal at zero.
    pub fn deriv(&self, x: f64) -> f64 {
        self.gain * normal_pdf(self.gain * x)
    }

    /// Range of the family as `(lo, hi)`.
    pub fn range(&self) -> (f64, f64) {
        match self.family {
            SigmoidFamily::GaussianCdf => (0.0, 1.0),
            SigmoidFamily::CenteredErf => (-0.5, 0.5),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetry_points() {
        let s = SigmoidSpec::gaussian_cdf(1.0).unwrap();
        assert_abs_diff_eq!(s.eval(0.0), 0.5, epsilon = 1e-15);
        let c = SigmoidSpec::centered_erf(3.0).unwrap();
        assert_abs_diff_eq!(c.eval(0.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cdf_at_one() {
        // high-precision normal CDF oracle value
        let s = SigmoidSpec::gaussian_cdf(1.0).unwrap();
        assert_abs_diff_eq!(s.eval(1.0), 0.841344746068543, epsilon = 1e-12);
    }

    #[test]
    fn derivative_values() {
        let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let c = SigmoidSpec::centered_erf(1.0).unwrap();
        assert_abs_diff_eq!(c.deriv(0.0), inv_sqrt_2pi, epsilon = 1e-14);
        let s = SigmoidSpec::gaussian_cdf(2.0).unwrap();
        assert_abs_diff_eq!(s.deriv(0.0), 2.0 * inv_sqrt_2pi, epsilon = 1e-14);
        // Gaussian tails
        assert!(s.deriv(50.0) < 1e-300);
        assert!(s.deriv(-50.0) < 1e-300);
    }

    #[test]
    fn slope_constructor() {
        let s = SigmoidSpec::centered_with_slope(1.0).unwrap();
        assert_abs_diff_eq!(s.deriv(0.0), 1.0, epsilon = 1e-14);
        let s3 = SigmoidSpec::centered_with_slope(3.0).unwrap();
        assert_abs_diff_eq!(s3.deriv(0.0), 3.0, epsilon = 1e-13);
    }

    #[test]
    fn monotone_and_bounded() {
        for spec in [SigmoidSpec::gaussian_cdf(2.5).unwrap(), SigmoidSpec::centered_erf(0.7).unwrap()] {
            let (lo, hi) = spec.range();
            let mut prev = f64::NEG_INFINITY;
            for i in -100..=100 {
                let v = spec.eval(i as f64 * 0.1);
                assert!(v >= prev);
                assert!(v >= lo && v <= hi);
                prev = v;
            }
        }
    }

    #[test]
    fn rejects_nonpositive_gain() {
        assert!(SigmoidSpec::gaussian_cdf(0.0).is_err());
        assert!(SigmoidSpec::centered_erf(-1.0).is_err());
    }
}
