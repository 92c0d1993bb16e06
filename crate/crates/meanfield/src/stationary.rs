//! Stationary-regime analysis: mean fixed points, the generalized SCS
//! covariance equation, the one-population potential, shooting for the
//! stationary variance, and the local stationary/chaotic classifier.

use crate::error::{Error, Result};
use crate::gaussian::{
    gauss_expect_s, gauss_expect_s_dmu, gauss_expect_ss_with, BivariateGaussian, GaussHermite,
};
use crate::netsim::format_sig;
use crate::params::ModelParams;

/// Regime label of a (local) stationary solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Disorder-induced width of the stationary law is exactly zero.
    StationaryZeroDisorderWidth,
    Chaotic,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::StationaryZeroDisorderWidth => write!(f, "stationary-zero-disorder-width"),
            Regime::Chaotic => write!(f, "chaotic"),
        }
    }
}

/// Outcome flag of an SCS profile integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScsOutcome {
    /// Reached ζ_max within bounds.
    Completed,
    /// Some |C̄^α| exceeded the blow-up threshold at the recorded ζ.
    BlowUp { zeta: f64 },
    /// Some C̄^α crossed below the negative tolerance at the recorded ζ.
    NegativeCrossing { zeta: f64 },
}

/// C̄^α(ζ) profiles of one SCS integration, possibly truncated by an early
/// stop.
#[derive(Debug, Clone)]
pub struct ScsProfile {
    pub dzeta: f64,
    /// `c[alpha][k]` = C̄^α(k·dζ).
    pub c: Vec<Vec<f64>>,
    /// Ċ̄^α at the last stored grid point.
    pub final_cdot: Vec<f64>,
    pub outcome: ScsOutcome,
}

impl ScsProfile {
    pub fn zeta(&self, k: usize) -> f64 {
        k as f64 * self.dzeta
    }

    pub fn len(&self) -> usize {
        self.c[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Columns: ζ, then C̄ per population.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "zeta")?;
        for a in 0..self.c.len() {
            write!(w, ",c_pop{}", a + 1)?;
        }
        writeln!(w)?;
        for k in 0..self.len() {
            write!(w, "{}", format_sig(self.zeta(k)))?;
            for ca in &self.c {
                write!(w, ",{}", format_sig(ca[k]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// A stationary solution candidate: mean, variance, covariance profile and
/// per-population regime label.
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub mean: Vec<f64>,
    pub c0: Vec<f64>,
    pub profile: ScsProfile,
    pub regime: Vec<Regime>,
}

/// Quadrature used on SCS integration paths; the integrands are smooth, so
/// a mid-size rule keeps shooting affordable.
fn scs_rule() -> GaussHermite {
    GaussHermite::new(20)
}

fn validate_c0(m: usize, c0: &[f64]) -> Result<()> {
    if c0.len() != m {
        return Err(Error::invalid("c0", format!("expected {m} entries")));
    }
    if c0.iter().any(|&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::invalid("c0", "variances must be non-negative"));
    }
    Ok(())
}

/// Solve a small dense linear system in place (partial pivoting); `m` is
/// tiny here (population count).
fn solve_dense(a: &mut [f64], b: &mut [f64], m: usize) -> Option<()> {
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))?;
        if a[piv * m + col].abs() < 1e-14 {
            return None;
        }
        if piv != col {
            for j in 0..m {
                a.swap(col * m + j, piv * m + j);
            }
            b.swap(col, piv);
        }
        for row in col + 1..m {
            let f = a[row * m + col] / a[col * m + col];
            for j in col..m {
                a[row * m + j] -= f * a[col * m + j];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..m).rev() {
        let mut s = b[col];
        for j in col + 1..m {
            s -= a[col * m + j] * b[j];
        }
        b[col] = s / a[col * m + col];
    }
    Some(())
}

/// Residual of the stationary mean equation,
/// `F_α(μ̄) = −μ̄^α/θ_α + Σ_γ J̄_{αγ} f_{αγ}(μ̄^γ, c0^α)`.
fn mean_residual(params: &ModelParams, c0: &[f64], mu: &[f64], out: &mut [f64]) -> Result<()> {
    for a in 0..params.m {
        let mut r = -mu[a] / params.theta[a];
        for g in 0..params.m {
            let jbar = *params.jbar.get(a, g);
            if jbar != 0.0 {
                r += jbar * gauss_expect_s(params.sigmoids.get(a, g), mu[g], c0[a])?;
            }
        }
        out[a] = r;
    }
    Ok(())
}

/// All roots of the stationary mean equation found from a 5^M lattice of
/// starts via damped fixed-point iteration plus Newton polish,
/// deduplicated at 1e−6 and verified to residual ≤ 1e−8. An empty list
/// means no start converged.
pub fn stationary_mean_roots(params: &ModelParams, c0: &[f64]) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let m = params.m;
    validate_c0(m, c0)?;

    // lattice half-width: the drift confines |μ̄^α| within θ_α Σ|J̄| max|S|
    let half: Vec<f64> = (0..m)
        .map(|a| {
            let reach: f64 = (0..m)
                .map(|g| {
                    let (lo, hi) = params.sigmoids.get(a, g).range();
                    params.jbar.get(a, g).abs() * lo.abs().max(hi.abs())
                })
                .sum();
            params.theta[a] * reach + 1.0
        })
        .collect();

    let mut roots: Vec<Vec<f64>> = Vec::new();
    let mut residual = vec![0.0; m];
    let lattice = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let n_starts = lattice.len().pow(m as u32);
    for idx in 0..n_starts {
        let mut mu: Vec<f64> = (0..m)
            .map(|a| {
                let digit = (idx / lattice.len().pow(a as u32)) % lattice.len();
                lattice[digit] * half[a]
            })
            .collect();

        // damped fixed point μ ← (1−ω)μ + ω·θ·(Σ J̄ f)
        let omega = 0.5;
        for _ in 0..100 {
            mean_residual(params, c0, &mu, &mut residual)?;
            for a in 0..m {
                mu[a] += omega * params.theta[a] * residual[a];
            }
            if mu.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        if mu.iter().any(|v| !v.is_finite()) {
            continue;
        }

        // Newton polish
        let mut jac = vec![0.0; m * m];
        let mut ok = false;
        for _ in 0..50 {
            mean_residual(params, c0, &mu, &mut residual)?;
            let norm = residual.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
            if norm <= 1e-12 {
                ok = true;
                break;
            }
            for a in 0..m {
                for g in 0..m {
                    let mut j = if a == g { -1.0 / params.theta[a] } else { 0.0 };
                    let jbar = *params.jbar.get(a, g);
                    if jbar != 0.0 {
                        j += jbar * gauss_expect_s_dmu(params.sigmoids.get(a, g), mu[g], c0[a])?;
                    }
                    jac[a * m + g] = j;
                }
            }
            let mut step = residual.clone();
            if solve_dense(&mut jac, &mut step, m).is_none() {
                break;
            }
            for a in 0..m {
                mu[a] += step[a];
                if !mu[a].is_finite() {
                    break;
                }
            }
            if mu.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        if !ok {
            mean_residual(params, c0, &mu, &mut residual)?;
            ok = mu.iter().all(|v| v.is_finite())
                && residual.iter().all(|r| r.abs() <= 1e-8);
        }
        if !ok {
            continue;
        }
        if !roots.iter().any(|r| r.iter().zip(&mu).all(|(a, b)| (a - b).abs() <= 1e-6)) {
            roots.push(mu);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(roots)
}

/// Δ^{αβ}(ζ) for the stationary bivariate law of population β: marginals
/// `N(μ̄^β, c0^β)` with cross-covariance C̄^β(ζ) clamped to Cauchy–Schwarz.
fn scs_delta(
    params: &ModelParams,
    rule: &GaussHermite,
    alpha: usize,
    beta: usize,
    mu: f64,
    c0: f64,
    c: f64,
) -> Result<f64> {
    let cc = c.clamp(-c0, c0);
    let bg = BivariateGaussian::new((mu, mu), (c0, cc, c0))?;
    gauss_expect_ss_with(params.sigmoids.get(alpha, beta), &bg, rule)
}

fn scs_rhs(
    params: &ModelParams,
    rule: &GaussHermite,
    mu_bar: &[f64],
    c0: &[f64],
    c: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let m = params.m;
    for a in 0..m {
        let mut acc = c[a] / (params.theta[a] * params.theta[a]);
        for b in 0..m {
            let sig = *params.sigma.get(a, b);
            if sig != 0.0 {
                acc -= sig * sig * scs_delta(params, rule, a, b, mu_bar[b], c0[b], c[b])?;
            }
        }
        out[a] = acc;
    }
    Ok(())
}

/// Integrate the generalized SCS equation
/// `C̈^α = C^α/θ_α² − Σ_β σ²_{αβ} Δ^{αβ}(ζ)` by classic RK4 from
/// `C(0) = c0`, `Ċ(0) = 0`, stopping early on blow-up
/// (`|C| > 10·max(c0, ε)`) or a negative crossing
/// (`C < −1e−3·max(c0, 1)`).
pub fn scs_integrate(
    params: &ModelParams,
    mu_bar: &[f64],
    c0: &[f64],
    zeta_max: f64,
    dzeta: f64,
) -> Result<ScsProfile> {
    let zero = vec![0.0; params.m];
    scs_integrate_from(params, mu_bar, c0, c0, &zero, zeta_max, dzeta)
}

/// Same integrator with an explicit initial value and slope, keeping the
/// marginal variance `c0` of Δ fixed independently; used by the
/// evenness/reversibility checks, where a restart mid-profile must not
/// reparametrize Δ.
pub fn scs_integrate_from(
    params: &ModelParams,
    mu_bar: &[f64],
    c0: &[f64],
    c_init: &[f64],
    cdot0: &[f64],
    zeta_max: f64,
    dzeta: f64,
) -> Result<ScsProfile> {
    params.validate()?;
    let m = params.m;
    validate_c0(m, c0)?;
    if mu_bar.len() != m || cdot0.len() != m || c_init.len() != m {
        return Err(Error::invalid("mu_bar/c_init/cdot0", format!("expected {m} entries")));
    }
    if !(dzeta > 0.0) || !(zeta_max > dzeta) {
        return Err(Error::invalid("zeta grid", "need 0 < dzeta < zeta_max"));
    }
    let rule = scs_rule();
    let n = (zeta_max / dzeta).round() as usize;
    let blow: Vec<f64> = c0.iter().map(|&c| 10.0 * c.max(1e-9)).collect();
    let neg: Vec<f64> = c0.iter().map(|&c| -1e-3 * c.max(1.0)).collect();

    let mut c = c_init.to_vec();
    let mut v = cdot0.to_vec();
    let mut profile: Vec<Vec<f64>> = (0..m).map(|a| vec![c_init[a]]).collect();
    let mut outcome = ScsOutcome::Completed;

    let mut a1 = vec![0.0; m];
    let mut a2 = vec![0.0; m];
    let mut a3 = vec![0.0; m];
    let mut a4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    'march: for k in 1..=n {
        let h = dzeta;
        scs_rhs(params, &rule, mu_bar, c0, &c, &mut a1)?;
        for a in 0..m {
            tmp[a] = c[a] + 0.5 * h * v[a];
        }
        scs_rhs(params, &rule, mu_bar, c0, &tmp, &mut a2)?;
        for a in 0..m {
            tmp[a] = c[a] + 0.5 * h * v[a] + 0.25 * h * h * a1[a];
        }
        scs_rhs(params, &rule, mu_bar, c0, &tmp, &mut a3)?;
        for a in 0..m {
            tmp[a] = c[a] + h * v[a] + 0.5 * h * h * a2[a];
        }
        scs_rhs(params, &rule, mu_bar, c0, &tmp, &mut a4)?;
        for a in 0..m {
            c[a] += h * v[a] + h * h / 6.0 * (a1[a] + a2[a] + a3[a]);
            v[a] += h / 6.0 * (a1[a] + 2.0 * a2[a] + 2.0 * a3[a] + a4[a]);
        }
        for (a, prof) in profile.iter_mut().enumerate() {
            prof.push(c[a]);
        }
        let zeta = k as f64 * dzeta;
        for a in 0..m {
            if !c[a].is_finite() || c[a].abs() > blow[a] {
                outcome = ScsOutcome::BlowUp { zeta };
                break 'march;
            }
            if c[a] < neg[a] {
                outcome = ScsOutcome::NegativeCrossing { zeta };
                break 'march;
            }
        }
    }
    Ok(ScsProfile { dzeta, c: profile, final_cdot: v, outcome })
}

/// Default ζ horizon for shooting: profiles equilibrate within a few θ.
pub fn default_zeta_max(params: &ModelParams) -> f64 {
    20.0 * params.theta.iter().cloned().fold(0.0, f64::max)
}

const SHOOT_DZETA_FACTOR: f64 = 0.02;

/// Divergence sign of the scalar SCS shot for population `alpha` at trial
/// variance `c0`: `true` = crossed below zero (−); `false` = blow-up or
/// bounded-positive (+). The separating c0 is the branch that just grazes
/// zero, i.e. the decaying chaotic profile.
fn shot_crosses_negative(
    params: &ModelParams,
    alpha: usize,
    mu_bar: &[f64],
    c0_trial: f64,
    zeta_max: f64,
) -> Result<bool> {
    // with diagonal disorder population α's equation decouples; reduce to
    // a scalar problem so other populations cannot trip the early stops
    let reduced = ModelParams::one_population(
        params.theta[alpha],
        0.0,
        0.0,
        *params.sigma.get(alpha, alpha),
        0.0,
        params.sigmoids.get(alpha, alpha).clone(),
        crate::params::InitialLaw::DeterministicConstant { values: vec![mu_bar[alpha]] },
    )?;
    let prof = scs_integrate(
        &reduced,
        &[mu_bar[alpha]],
        &[c0_trial],
        zeta_max,
        SHOOT_DZETA_FACTOR * params.theta[alpha],
    )?;
    Ok(matches!(prof.outcome, ScsOutcome::NegativeCrossing { .. }))
}

/// Shoot for the stationary variance of each population by bisection on
/// the divergence sign of `scs_integrate`. Requires diagonal disorder.
/// Returns `(0, stationary)` for a population none of whose positive
/// trials ever dips below zero.
pub fn shoot_stationary_variance(
    params: &ModelParams,
    mu_bar: &[f64],
    zeta_max: f64,
) -> Result<(Vec<f64>, Vec<Regime>)> {
    params.validate()?;
    if !params.diagonal_disorder() {
        return Err(Error::NotAGradientSystem);
    }
    if mu_bar.len() != params.m {
        return Err(Error::invalid("mu_bar", format!("expected {} entries", params.m)));
    }
    let mut c0 = vec![0.0; params.m];
    let mut regime = vec![Regime::StationaryZeroDisorderWidth; params.m];
    for a in 0..params.m {
        let sig = *params.sigma.get(a, a);
        if sig == 0.0 {
            continue;
        }
        let cmax = 10.0 * sig * sig * params.theta[a] * params.theta[a] / 4.0;
        // geometric scan downward for the first trial that crosses zero;
        // large trials diverge upward (+), small ones overshoot into
        // negative covariance (−); the boundary grazes zero
        let mut hi = None; // smallest known (+) trial
        let mut lo = None; // largest known (−) trial
        let mut trial = cmax;
        for _ in 0..60 {
            if shot_crosses_negative(params, a, mu_bar, trial, zeta_max)? {
                lo = Some(trial);
                break;
            } else {
                hi = Some(trial);
            }
            trial *= 0.5;
            if trial < 1e-12 * cmax {
                break;
            }
        }
        let Some(mut lo) = lo else {
            // no trial ever dips below zero: only c0 = 0 stays bounded
            continue;
        };
        let mut hi = match hi {
            Some(h) => h,
            None => {
                return Err(Error::BracketNotFound(format!(
                    "population {a}: even c_max = {cmax} crosses below zero; no (+) trial to bracket"
                )))
            }
        };
        for _ in 0..60 {
            if hi - lo <= 1e-10 * cmax {
                break;
            }
            let mid = 0.5 * (hi + lo);
            if shot_crosses_negative(params, a, mu_bar, mid, zeta_max)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // return the (+) side of the bracket so the profile at the
        // reported c0 decays without crossing the negative tolerance
        c0[a] = hi;
        regime[a] = Regime::Chaotic;
    }
    Ok((c0, regime))
}

/// Local stationary/chaotic classifier: chaotic iff
/// `σ_αα · S'(μ̄*) · θ_α > 1`, the boundary counting as stationary.
pub fn classify_local_phase(sigma_aa: f64, sprime_at_mu: f64, theta: f64) -> Regime {
    if sigma_aa * sprime_at_mu * theta > 1.0 {
        Regime::Chaotic
    } else {
        Regime::StationaryZeroDisorderWidth
    }
}

/// Sampled one-population potential Φ₁(C) (summed per population in the
/// diagonal multi-population case).
#[derive(Debug, Clone)]
pub struct Potential1D {
    pub c: Vec<f64>,
    pub phi: Vec<f64>,
    /// (σ, θ, μ̄, c0) per population the sample was built from.
    pub built_from: Vec<(f64, f64, f64, f64)>,
}

impl Potential1D {
    /// Columns: C, Φ₁(C).
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "c,phi")?;
        for (c, p) in self.c.iter().zip(&self.phi) {
            writeln!(w, "{},{}", format_sig(*c), format_sig(*p))?;
        }
        Ok(())
    }

    /// Interior local minima/maxima indices (sign changes of the sampled
    /// slope); used to detect the convex/double-well transition.
    pub fn interior_stationary_points(&self) -> Vec<usize> {
        let mut pts = Vec::new();
        for k in 1..self.c.len().saturating_sub(1) {
            let dl = self.phi[k] - self.phi[k - 1];
            let dr = self.phi[k + 1] - self.phi[k];
            if dl * dr <= 0.0 && (dl != 0.0 || dr != 0.0) {
                pts.push(k);
            }
        }
        pts
    }
}

/// Φ₁(C) = −C²/(2θ²) + σ²ψ(C) with ψ the cumulative trapezoid of Δ along
/// the correlation axis, normalized to Φ₁(0) = 0. The grid must start at
/// 0, increase, and stay within [0, c0] (Δ is only defined under
/// Cauchy–Schwarz). Off-diagonal disorder is not a gradient system.
pub fn potential_phi(
    params: &ModelParams,
    mu_bar: &[f64],
    c0: &[f64],
    c_grid: &[f64],
) -> Result<Potential1D> {
    params.validate()?;
    let m = params.m;
    validate_c0(m, c0)?;
    if mu_bar.len() != m {
        return Err(Error::invalid("mu_bar", format!("expected {m} entries")));
    }
    if !params.diagonal_disorder() {
        return Err(Error::NotAGradientSystem);
    }
    if c_grid.len() < 2 || c_grid[0] != 0.0 {
        return Err(Error::invalid("c_grid", "must start at 0 with at least two points"));
    }
    if c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("c_grid", "must be strictly increasing"));
    }
    let cmax = *c_grid.last().unwrap();
    for a in 0..m {
        if *params.sigma.get(a, a) != 0.0 && cmax > c0[a] + 1e-9 {
            return Err(Error::invalid(
                "c_grid",
                format!("exceeds c0 = {} of population {a}; Δ undefined beyond Cauchy–Schwarz", c0[a]),
            ));
        }
    }

    let rule = scs_rule();
    let mut phi = vec![0.0; c_grid.len()];
    let mut built_from = Vec::with_capacity(m);
    for a in 0..m {
        let theta = params.theta[a];
        let sig = *params.sigma.get(a, a);
        built_from.push((sig, theta, mu_bar[a], c0[a]));
        let mut psi = 0.0;
        let mut prev_delta = if sig != 0.0 {
            scs_delta(params, &rule, a, a, mu_bar[a], c0[a], 0.0)?
        } else {
            0.0
        };
        for k in 0..c_grid.len() {
            if k > 0 {
                let delta = if sig != 0.0 {
                    scs_delta(params, &rule, a, a, mu_bar[a], c0[a], c_grid[k])?
                } else {
                    0.0
                };
                psi += 0.5 * (c_grid[k] - c_grid[k - 1]) * (prev_delta + delta);
                prev_delta = delta;
            }
            phi[k] += -c_grid[k] * c_grid[k] / (2.0 * theta * theta) + sig * sig * psi;
        }
    }
    Ok(Potential1D { c: c_grid.to_vec(), phi, built_from })
}

/// Joint stationary solve: alternate `stationary_mean_roots` (picking the
/// root nearest the previous iterate, seeded by the initial-law means) and
/// `shoot_stationary_variance` until the combined update falls below 1e−6,
/// at most 100 sweeps. Returns the state with its profile at the fixed
/// point.
pub fn solve_stationary(params: &ModelParams, zeta_max: f64) -> Result<StationaryState> {
    params.validate()?;
    if !params.diagonal_disorder() {
        return Err(Error::NotAGradientSystem);
    }
    let m = params.m;
    let mut mean: Vec<f64> = (0..m).map(|a| params.init.mean(a)).collect();
    let mut c0 = vec![0.0; m];
    let mut regime = vec![Regime::StationaryZeroDisorderWidth; m];
    let mut converged = false;
    for _ in 0..100 {
        let roots = stationary_mean_roots(params, &c0)?;
        if roots.is_empty() {
            return Err(Error::NoConvergedRoot("stationary mean equation".into()));
        }
        let next_mean = roots
            .into_iter()
            .min_by(|a, b| dist(a, &mean).total_cmp(&dist(b, &mean)))
            .unwrap();
        let (next_c0, next_regime) = shoot_stationary_variance(params, &next_mean, zeta_max)?;
        let step = dist(&next_mean, &mean).max(dist(&next_c0, &c0));
        mean = next_mean;
        c0 = next_c0;
        regime = next_regime;
        if step < 1e-6 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergedRoot("mean/variance outer loop did not settle".into()));
    }
    let profile = scs_integrate(params, &mean, &c0, zeta_max, SHOOT_DZETA_FACTOR * params.theta[0])?;
    Ok(StationaryState { mean, c0, profile, regime })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{InitialLaw, ModelParams, PopMatrix};
    use crate::sigmoid::SigmoidSpec;
    use approx::assert_abs_diff_eq;

    fn one_pop(jbar: f64, sigma: f64, gain: f64) -> ModelParams {
        ModelParams::one_population(
            1.0,
            0.0,
            jbar,
            sigma,
            0.0,
            SigmoidSpec::centered_erf(gain).unwrap(),
            InitialLaw::DeterministicConstant { values: vec![0.0] },
        )
        .unwrap()
    }

    /// Slope of the centered-erf family at zero with the given stationary
    /// variance (the §4.2.1 effective gain).
    fn sprime0(gain: f64, c0: f64) -> f64 {
        gain / ((2.0 * std::f64::consts::PI) * (1.0 + gain * gain * c0)).sqrt()
    }

    #[test]
    fn mean_roots_contains_zero_for_odd_sigmoid() {
        for &(j, c0) in &[(0.5, 0.0), (2.0, 0.3), (-3.0, 1.0)] {
            let roots = stationary_mean_roots(&one_pop(j, 0.0, 1.0), &[c0]).unwrap();
            assert!(roots.iter().any(|r| r[0].abs() < 1e-8), "J={j}, c0={c0}: {roots:?}");
        }
    }

    #[test]
    fn mean_roots_below_pitchfork_unique() {
        // J = 0.5 < J* = √(2π)/g for the unit-gain centered erf
        let roots = stationary_mean_roots(&one_pop(0.5, 0.0, 1.0), &[0.0]).unwrap();
        assert_eq!(roots.len(), 1);
        assert_abs_diff_eq!(roots[0][0], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn mean_roots_above_pitchfork_symmetric_triple() {
        // J·S'(0) > 1 needs J > √(2π); use the slope-1 normalization so
        // the classic J = 2 > 1 threshold applies
        let params = ModelParams::one_population(
            1.0,
            0.0,
            2.0,
            0.0,
            0.0,
            SigmoidSpec::centered_with_slope(1.0).unwrap(),
            InitialLaw::DeterministicConstant { values: vec![0.0] },
        )
        .unwrap();
        let roots = stationary_mean_roots(&params, &[0.0]).unwrap();
        assert_eq!(roots.len(), 3, "{roots:?}");
        assert_abs_diff_eq!(roots[1][0], 0.0, epsilon = 1e-10);
        assert!(roots[2][0] > 0.1);
        assert_abs_diff_eq!(roots[0][0], -roots[2][0], epsilon = 1e-8);

        // oracle: scalar bisection on μ − J·E[S(μ)] over [0.05, 3]
        let f = |mu: f64| {
            mu - 2.0
                * gauss_expect_s(
                    &SigmoidSpec::centered_with_slope(1.0).unwrap(),
                    mu,
                    0.0,
                )
                .unwrap()
        };
        let (mut lo, mut hi) = (0.05, 3.0);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(roots[2][0], 0.5 * (lo + hi), epsilon = 1e-7);
    }

    #[test]
    fn scs_cosh_when_sigma_zero() {
        let prof = scs_integrate(&one_pop(0.0, 0.0, 1.0), &[0.0], &[1.0], 5.0, 0.01).unwrap();
        // blow-up stops the march once cosh exceeds 10·c0
        assert!(matches!(prof.outcome, ScsOutcome::BlowUp { .. }));
        for k in 0..prof.len() {
            let z = prof.zeta(k);
            assert_abs_diff_eq!(prof.c[0][k], z.cosh(), epsilon = 1e-6 * z.cosh());
        }
    }

    #[test]
    fn scs_zero_is_equilibrium_for_centered() {
        let prof = scs_integrate(&one_pop(0.0, 1.5, 1.0), &[0.0], &[0.0], 3.0, 0.01).unwrap();
        assert_eq!(prof.outcome, ScsOutcome::Completed);
        assert!(prof.c[0].iter().all(|&c| c.abs() < 1e-12));
    }

    #[test]
    fn scs_time_reversible_even_extension() {
        // march forward, then integrate back from (C(Z), −Ċ(Z)) and check
        // the path retraces: the even extension of C̄
        let params = one_pop(0.0, 2.0 * (2.0 * std::f64::consts::PI).sqrt(), 1.0);
        let c0 = 0.4;
        let dz = 0.0025;
        let fwd = scs_integrate(&params, &[0.0], &[c0], 0.5, dz).unwrap();
        assert_eq!(fwd.outcome, ScsOutcome::Completed);
        let n = fwd.len() - 1;
        let cdot_end = fwd.final_cdot[0];
        let back =
            scs_integrate_from(&params, &[0.0], &[c0], &[fwd.c[0][n]], &[-cdot_end], 0.5, dz).unwrap();
        for k in 0..=n {
            assert_abs_diff_eq!(back.c[0][k], fwd.c[0][n - k], epsilon = 1e-5);
        }
    }

    #[test]
    fn shooting_below_threshold_is_stationary() {
        // σ·S'(0)·θ = 0.5
        let sigma = 0.5 / sprime0(1.0, 0.0);
        let params = one_pop(0.0, sigma, 1.0);
        let (c0, regime) = shoot_stationary_variance(&params, &[0.0], default_zeta_max(&params)).unwrap();
        assert_eq!(c0[0], 0.0);
        assert_eq!(regime[0], Regime::StationaryZeroDisorderWidth);
    }

    #[test]
    fn shooting_above_threshold_is_chaotic() {
        // σ·S'(0)·θ = 2
        let sigma = 2.0 / sprime0(1.0, 0.0);
        let params = one_pop(0.0, sigma, 1.0);
        let (c0, regime) = shoot_stationary_variance(&params, &[0.0], default_zeta_max(&params)).unwrap();
        assert!(c0[0] > 0.0, "c0 = {}", c0[0]);
        assert_eq!(regime[0], Regime::Chaotic);

        // the shot profile decays toward 0 without crossing −ε
        let prof = scs_integrate(&params, &[0.0], &c0, default_zeta_max(&params), 0.02).unwrap();
        assert!(!matches!(prof.outcome, ScsOutcome::NegativeCrossing { .. }));
        let tail = prof.c[0][prof.len() - 1];
        assert!(tail.abs() < 0.05 * c0[0] || matches!(prof.outcome, ScsOutcome::BlowUp { zeta } if zeta > 10.0));
    }

    #[test]
    fn shooting_gamma_monotone_in_sigma() {
        let s0 = sprime0(1.0, 0.0);
        let mut last = -1.0;
        for &f in &[1.2, 1.5, 2.0] {
            let params = one_pop(0.0, f / s0, 1.0);
            let (c0, _) = shoot_stationary_variance(&params, &[0.0], default_zeta_max(&params)).unwrap();
            assert!(c0[0] >= last, "Γ(σ) decreased at factor {f}");
            last = c0[0];
        }
    }

    #[test]
    fn classifier_threshold() {
        assert_eq!(classify_local_phase(3.0, 2.0 / 3.0, 1.0), Regime::Chaotic);
        assert_eq!(classify_local_phase(0.5, 0.6, 1.0), Regime::StationaryZeroDisorderWidth);
        assert_eq!(classify_local_phase(2.0, 0.5, 1.0), Regime::StationaryZeroDisorderWidth);
    }

    #[test]
    fn localization_of_chaos_preset() {
        // σ₁ = 3 (past threshold), σ₂ = 0.5 (below): chaos localizes in
        // population 1
        let spec = SigmoidSpec::centered_with_slope(1.0).unwrap();
        let r1 = classify_local_phase(3.0, spec.deriv(0.0), 1.0);
        let r2 = classify_local_phase(0.5, spec.deriv(0.0), 1.0);
        assert_eq!((r1, r2), (Regime::Chaotic, Regime::StationaryZeroDisorderWidth));
    }

    #[test]
    fn potential_sigma_zero_is_quadratic() {
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 0.02).collect();
        let pot = potential_phi(&one_pop(0.0, 0.0, 1.0), &[0.0], &[1.0], &grid).unwrap();
        for (c, p) in pot.c.iter().zip(&pot.phi) {
            assert_abs_diff_eq!(*p, -c * c / 2.0, epsilon = 1e-12);
        }
        assert!(pot.interior_stationary_points().is_empty());
    }

    #[test]
    fn potential_gradient_matches_scs_rhs() {
        let params = one_pop(0.0, 1.8 / sprime0(1.0, 0.5), 1.0);
        let c0 = 0.5;
        let n = 400;
        let grid: Vec<f64> = (0..=n).map(|k| c0 * k as f64 / n as f64).collect();
        let pot = potential_phi(&params, &[0.0], &[c0], &grid).unwrap();
        let rule = scs_rule();
        for k in 1..n {
            let slope = (pot.phi[k + 1] - pot.phi[k - 1]) / (grid[k + 1] - grid[k - 1]);
            let sig = *params.sigma.get(0, 0);
            let rhs = -(grid[k] - sig * sig * scs_delta(&params, &rule, 0, 0, 0.0, c0, grid[k]).unwrap());
            assert_abs_diff_eq!(slope, rhs, epsilon = 1e-6);
        }
    }

    #[test]
    fn potential_double_well_transition() {
        let s0 = sprime0(1.0, 0.5);
        let grid: Vec<f64> = (0..=300).map(|k| 0.5 * k as f64 / 300.0).collect();
        let below = potential_phi(&one_pop(0.0, 0.5 / s0, 1.0), &[0.0], &[0.5], &grid).unwrap();
        assert!(below.interior_stationary_points().is_empty());
        // above threshold the well only shows at the self-consistent c0
        let params = one_pop(0.0, 2.0 / sprime0(1.0, 0.0), 1.0);
        let (c0s, _) = shoot_stationary_variance(&params, &[0.0], default_zeta_max(&params)).unwrap();
        let grid2: Vec<f64> = (0..=300).map(|k| c0s[0] * k as f64 / 300.0).collect();
        let above = potential_phi(&params, &[0.0], &c0s, &grid2).unwrap();
        assert!(!above.interior_stationary_points().is_empty());
    }

    #[test]
    fn potential_rejects_off_diagonal_sigma() {
        let spec = SigmoidSpec::centered_erf(1.0).unwrap();
        let params = ModelParams {
            m: 2,
            theta: vec![1.0, 1.0],
            lambda: vec![0.0, 0.0],
            jbar: PopMatrix::filled(2, 0.0),
            sigma: PopMatrix::new(2, vec![1.0, 0.5, 0.0, 1.0]).unwrap(),
            tau: PopMatrix::filled(2, 0.0),
            sigmoids: PopMatrix::filled(2, spec),
            init: InitialLaw::DeterministicConstant { values: vec![0.0, 0.0] },
        };
        let grid = [0.0, 0.1, 0.2];
        assert!(matches!(
            potential_phi(&params, &[0.0, 0.0], &[0.3, 0.3], &grid),
            Err(Error::NotAGradientSystem)
        ));
    }

    #[test]
    fn joint_solve_below_threshold() {
        let params = one_pop(0.5, 0.5 / sprime0(1.0, 0.0), 1.0);
        let st = solve_stationary(&params, default_zeta_max(&params)).unwrap();
        assert_abs_diff_eq!(st.mean[0], 0.0, epsilon = 1e-8);
        assert_eq!(st.c0[0], 0.0);
        assert_eq!(st.regime[0], Regime::StationaryZeroDisorderWidth);
    }
}

