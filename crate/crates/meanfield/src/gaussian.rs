//! Gaussian expectation kernels.
//!
//! The moment equations only ever touch the sigmoids through two kernels:
//! `f(μ, v) = E[S(X)]` for `X ~ N(μ, v)` and `Δ = E[S(X₁)S(X₂)]` for a
//! bivariate Gaussian pair. The first has a closed form for both sigmoid
//! families (same family evaluated at `g·μ/√(1+g²v)` with unit gain); the
//! second is computed by a 2×2 Cholesky factorization and tensor-product
//! Gauss–Hermite quadrature, with a rank-1 reduction when the covariance
//! is (numerically) degenerate.

use std::f64::consts::PI;
use std::sync::OnceLock;

use libm::erf;

use crate::error::{Error, Result};
use crate::sigmoid::SigmoidSpec;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Relative determinant threshold below which a 2×2 covariance is treated
/// as rank-1.
pub const EPS_PSD: f64 = 1e-12;

/// Default quadrature order per axis; integrands are entire so convergence
/// is spectral.
pub const DEFAULT_QUAD_ORDER: usize = 32;

/// Gauss–Hermite rule for the weight `e^{-x²}` on `(-∞, ∞)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes and weights by Newton iteration on the orthonormal Hermite
    /// recurrence (initial guesses per the classic gauher scheme).
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "quadrature order must be at least 2");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                // orthonormal Hermite recurrence
                let mut p1 = PI.powf(-0.25);
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-15 * (1.0 + z.abs()) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussHermite { nodes, weights }
    }

    /// `E[f(X)]` for `X ~ N(mu, v)`, `v ≥ 0`.
    pub fn expect(&self, mu: f64, v: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = (2.0 * v).sqrt();
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mu + scale * x);
        }
        acc / PI.sqrt()
    }
}

fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_QUAD_ORDER))
}

/// A bivariate Gaussian law, stored as means and the symmetric covariance
/// entries `(c11, c12, c22)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateGaussian {
    pub mean: (f64, f64),
    pub cov: (f64, f64, f64),
}

impl BivariateGaussian {
    pub fn new(mean: (f64, f64), cov: (f64, f64, f64)) -> Result<Self> {
        let (c11, c12, c22) = cov;
        if c11 < 0.0 || c22 < 0.0 {
            return Err(Error::Domain(format!("negative marginal variance ({c11}, {c22})")));
        }
        // small relative slack for roundoff on the Cauchy-Schwarz boundary
        if c12 * c12 > c11 * c22 * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::Domain(format!(
                "covariance violates Cauchy-Schwarz: c12^2 = {} > c11*c22 = {}",
                c12 * c12,
                c11 * c22
            )));
        }
        Ok(BivariateGaussian { mean, cov })
    }
}

/// `E[S(X)]` for `X ~ N(mu, v)`, closed form.
///
/// Both families reduce to the family function evaluated at
/// `g·mu/√(1+g²v)` with unit gain.
pub fn gauss_expect_s(spec: &SigmoidSpec, mu: f64, v: f64) -> Result<f64> {
    if v < 0.0 {
        return Err(Error::Domain(format!("negative variance {v}")));
    }
    let g = spec.gain;
    let z = g * mu / (1.0 + g * g * v).sqrt();
    let unit = SigmoidSpec { family: spec.family, gain: 1.0 };
    Ok(unit.eval(z))
}

/// Derivative of [`gauss_expect_s`] in `mu`.
pub fn gauss_expect_s_dmu(spec: &SigmoidSpec, mu: f64, v: f64) -> Result<f64> {
    if v < 0.0 {
        return Err(Error::Domain(format!("negative variance {v}")));
    }
    let g = spec.gain;
    let s = (1.0 + g * g * v).sqrt();
    Ok(g / s * normal_pdf(g * mu / s))
}

/// `E[S(X)]` by Gauss–Hermite quadrature; verification path for the
/// closed form.
pub fn gauss_expect_s_quad(spec: &SigmoidSpec, mu: f64, v: f64, rule: &GaussHermite) -> Result<f64> {
    if v < 0.0 {
        return Err(Error::Domain(format!("negative variance {v}")));
    }
    Ok(rule.expect(mu, v, |x| spec.eval(x)))
}

/// `E[S(X₁)S(X₂)]` for a bivariate Gaussian pair, default quadrature order.
pub fn gauss_expect_ss(spec: &SigmoidSpec, bg: &BivariateGaussian) -> Result<f64> {
    gauss_expect_ss_with(spec, bg, default_rule())
}

/// `E[S(X₁)S(X₂)]` with an explicit quadrature rule.
pub fn gauss_expect_ss_with(spec: &SigmoidSpec, bg: &BivariateGaussian, rule: &GaussHermite) -> Result<f64> {
    let (m1, m2) = bg.mean;
    let (c11, c12, c22) = bg.cov;
    if c11 < 0.0 || c22 < 0.0 {
        return Err(Error::Domain(format!("negative marginal variance ({c11}, {c22})")));
    }
    if c12 * c12 > c11 * c22 * (1.0 + 1e-9) + 1e-300 {
        return Err(Error::Domain("covariance violates Cauchy-Schwarz".into()));
    }
    let tiny = 1e-300;
    if c11 <= tiny && c22 <= tiny {
        return Ok(spec.eval(m1) * spec.eval(m2));
    }
    if c11 <= tiny {
        return Ok(spec.eval(m1) * rule.expect(m2, c22, |x| spec.eval(x)));
    }
    if c22 <= tiny {
        return Ok(spec.eval(m2) * rule.expect(m1, c11, |x| spec.eval(x)));
    }
    let det = c11 * c22 - c12 * c12;
    if det <= EPS_PSD * c11 * c22 {
        // rank-1: X2 is an affine function of X1
        let slope = c12 / c11;
        return Ok(rule.expect(m1, c11, |x| spec.eval(x) * spec.eval(m2 + slope * (x - m1))));
    }
    // full-rank Cholesky
    let l11 = c11.sqrt();
    let l21 = c12 / l11;
    let l22 = (c22 - l21 * l21).sqrt();
    let s2 = std::f64::consts::SQRT_2;
    let mut acc = 0.0;
    for (&zi, &wi) in rule.nodes.iter().zip(&rule.weights) {
        let x1 = m1 + s2 * l11 * zi;
        let s1 = spec.eval(x1);
        if s1 == 0.0 {
            continue;
        }
        let base = m2 + s2 * l21 * zi;
        let mut inner = 0.0;
        for (&zj, &wj) in rule.nodes.iter().zip(&rule.weights) {
            inner += wj * spec.eval(base + s2 * l22 * zj);
        }
        acc += wi * s1 * inner;
    }
    Ok(acc / PI)
}
