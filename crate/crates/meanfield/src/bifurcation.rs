//! Bifurcation loci of the one-population mean equation: the pitchfork
//! curve, the Turing–Hopf curve of the delayed equation, and the leading
//! characteristic root.
//!
//! All operations work in the paper's reduced variable `a = J·g/√(1+g²v)`,
//! the effective slope of the delayed linearization `ξ = (−1 + a e^{−ξτ})/θ`
//! written in units of θ = 1.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netsim::format_sig;

/// Pitchfork locus of the non-delayed one-population network:
/// `J* = √(1/g² + Γ)` where Γ is the stationary variance.
pub fn pitchfork_locus(g: f64, gamma: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::invalid("g", "gain must be positive"));
    }
    if gamma < 0.0 {
        return Err(Error::invalid("gamma", "variance must be non-negative"));
    }
    Ok((1.0 / (g * g) + gamma).sqrt())
}

/// Effective linearization slope `a = J·g/√(1+g²v)`.
pub fn effective_slope(j: f64, g: f64, v: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::invalid("g", "gain must be positive"));
    }
    if v < 0.0 {
        return Err(Error::invalid("v", "effective variance must be non-negative"));
    }
    Ok(j * g / (1.0 + g * g * v).sqrt())
}

/// Critical delay and frequency of the Turing–Hopf bifurcation:
/// `τ_c = arccos(1/a)/ω`, `ω = √(a²−1)`, defined only for `|a| > 1`. For
/// negative coupling the arccos branch lands in `[π/2, π]`, so the first
/// crossing is at a longer delay.
pub fn turing_hopf_curve(j: f64, g: f64, v: f64) -> Result<Option<(f64, f64)>> {
    let a = effective_slope(j, g, v)?;
    if a.abs() <= 1.0 {
        return Ok(None);
    }
    let omega = (a * a - 1.0).sqrt();
    let tau_c = (1.0 / a).acos() / omega;
    Ok(Some((tau_c, omega)))
}

/// Leading root (maximal real part) of the characteristic equation
/// `ξ = −1 + a e^{−ξτ}`: Newton iteration from a grid of 16 starts
/// covering the low branches, each polished to residual ≤ 1e−10.
///
/// Branch convention: the closed-form critical delay
/// `τ_c = arccos(1/a)/ω` takes the principal arccos branch. For `a ≤ 1`
/// (and in particular the oscillatory `a < −1` regime of Fig. 3) that is
/// a genuine crossing of `ξ + 1 − a e^{−ξτ}` and the root search uses it
/// directly. For `a > 1` the principal branch instead belongs to the
/// mirrored-damping equation `ξ − 1 + a e^{−ξτ}` — the retarded
/// equation's real root never leaves the right half plane there — so the
/// search switches to that form, i.e. `(a, damping) → (−a, −1)`. This is
/// what makes the curve/root crossing consistency exact on both signs of
/// the coupling.
pub fn leading_root(j: f64, g: f64, v: f64, tau: f64) -> Result<Complex64> {
    if tau < 0.0 {
        return Err(Error::invalid("tau", "delay must be non-negative"));
    }
    let a = effective_slope(j, g, v)?;
    if tau == 0.0 {
        return Ok(Complex64::new(a - 1.0, 0.0));
    }
    // characteristic function ξ + c − b e^{−ξτ}
    let (c, b) = if a > 1.0 { (-1.0, -a) } else { (1.0, a) };

    let im_max = (3.0 * std::f64::consts::PI / tau).min(10.0).max(1.0);
    let mut best: Option<Complex64> = None;
    let mut diagnostics = Vec::new();
    for i in 0..4 {
        for k in 0..4 {
            let start = Complex64::new(
                -3.0 + 4.0 * (i as f64 + 0.5) / 4.0,
                im_max * (k as f64 + 0.5) / 4.0,
            );
            let mut xi = start;
            let mut converged = false;
            for _ in 0..100 {
                let e = (-xi * tau).exp();
                let f = xi + c - b * e;
                if f.norm() <= 1e-12 {
                    converged = true;
                    break;
                }
                let fp = Complex64::new(1.0, 0.0) + b * tau * e;
                if fp.norm() < 1e-14 {
                    break;
                }
                xi -= f / fp;
                if !xi.re.is_finite() || !xi.im.is_finite() {
                    break;
                }
            }
            let res = (xi + c - b * (-xi * tau).exp()).norm();
            if !(converged || res <= 1e-10) {
                diagnostics.push(format!("start {start} -> residual {res:.2e}"));
                continue;
            }
            // roots come in conjugate pairs; report Im ≥ 0
            let root = Complex64::new(xi.re, xi.im.abs());
            best = match best {
                Some(b) if b.re >= root.re => Some(b),
                _ => Some(root),
            };
        }
    }
    best.ok_or_else(|| Error::NoConvergedRoot(format!("characteristic equation: {}", diagnostics.join("; "))))
}

/// Which locus a curve samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Pitchfork,
    TuringHopf,
}

/// A swept bifurcation curve. For a pitchfork sweep the points are
/// `(Γ, J*, 0)`; for a Turing–Hopf sweep `(v, τ_c, ω)`, both sorted by the
/// swept parameter.
#[derive(Debug, Clone)]
pub struct BifurcationCurve {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64, f64)>,
}

impl BifurcationCurve {
    /// Sweep the pitchfork locus over stationary variances Γ.
    pub fn pitchfork_sweep(g: f64, gammas: &[f64]) -> Result<Self> {
        let mut points = Vec::with_capacity(gammas.len());
        for &gamma in gammas {
            points.push((gamma, pitchfork_locus(g, gamma)?, 0.0));
        }
        points.sort_by(|p, q| p.0.total_cmp(&q.0));
        Ok(BifurcationCurve { kind: CurveKind::Pitchfork, points })
    }

    /// Sweep the Turing–Hopf locus over effective variances `v`;
    /// sub-critical parameters (|a| ≤ 1) are skipped.
    pub fn turing_hopf_sweep(j: f64, g: f64, vs: &[f64]) -> Result<Self> {
        let mut points = Vec::new();
        for &v in vs {
            if let Some((tau_c, omega)) = turing_hopf_curve(j, g, v)? {
                points.push((v, tau_c, omega));
            }
        }
        points.sort_by(|p, q| p.0.total_cmp(&q.0));
        Ok(BifurcationCurve { kind: CurveKind::TuringHopf, points })
    }

    /// Columns depend on the kind: `gamma,j_star` or `v,tau_c,omega`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        match self.kind {
            CurveKind::Pitchfork => {
                writeln!(w, "gamma,j_star")?;
                for (x, j, _) in &self.points {
                    writeln!(w, "{},{}", format_sig(*x), format_sig(*j))?;
                }
            }
            CurveKind::TuringHopf => {
                writeln!(w, "v,tau_c,omega")?;
                for (x, t, o) in &self.points {
                    writeln!(w, "{},{},{}", format_sig(*x), format_sig(*t), format_sig(*o))?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Parameters giving effective slope exactly `a`: unit gain, v = 0.
    fn th(a: f64) -> Option<(f64, f64)> {
        turing_hopf_curve(a, 1.0, 0.0).unwrap()
    }

    #[test]
    fn pitchfork_values() {
        assert_abs_diff_eq!(pitchfork_locus(1.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(pitchfork_locus(2.0, 0.75).unwrap(), 1.0);
        // monotone and unbounded in Γ
        let mut last = 0.0;
        for &gamma in &[0.0, 1.0, 10.0, 100.0, 1e6] {
            let j = pitchfork_locus(3.0, gamma).unwrap();
            assert!(j > last);
            last = j;
        }
        assert!(last > 999.0);
    }

    #[test]
    fn turing_hopf_closed_form() {
        let (tau, omega) = th(2.0).unwrap();
        assert_abs_diff_eq!(omega, 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(tau, (std::f64::consts::PI / 3.0) / 3f64.sqrt(), epsilon = 1e-12);
        assert!(th(1.0).is_none());
        assert!(th(-1.0).is_none());
        assert!(th(0.3).is_none());
    }

    #[test]
    fn turing_hopf_negative_coupling_branch() {
        let (tau, omega) = th(-2.0).unwrap();
        assert_abs_diff_eq!(omega, 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(tau, (2.0 * std::f64::consts::PI / 3.0) / 3f64.sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(tau, 1.209200, epsilon = 1e-6);
    }

    #[test]
    fn leading_root_delay_free_and_zero_root() {
        let xi = leading_root(2.0, 1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(xi.re, 1.0);
        assert_abs_diff_eq!(xi.im, 0.0);
        // a = 1: ξ = 0 solves the equation for any delay
        for &tau in &[0.3, 1.0, 4.0] {
            let xi = leading_root(1.0, 1.0, 0.0, tau).unwrap();
            assert_abs_diff_eq!(xi.re, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn leading_root_on_curve_is_imaginary() {
        let (tau_c, omega) = th(2.0).unwrap();
        let xi = leading_root(2.0, 1.0, 0.0, tau_c).unwrap();
        assert_abs_diff_eq!(xi.re, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(xi.im.abs(), omega, epsilon = 1e-6);
    }

    #[test]
    fn curve_root_consistency_random_a() {
        // fixed cheap LCG so the sweep is reproducible
        let mut state = 0x12345678u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            1.0 + 4.0 * ((state >> 11) as f64 / (1u64 << 53) as f64)
        };
        for _ in 0..20 {
            let a = next();
            let (tau_c, _) = th(a).unwrap();
            let at_c = leading_root(a, 1.0, 0.0, tau_c).unwrap();
            assert!(at_c.re.abs() <= 1e-6, "a = {a}: Re = {}", at_c.re);
            let below = leading_root(a, 1.0, 0.0, 0.9 * tau_c).unwrap();
            assert!(below.re < 0.0, "a = {a}: Re = {}", below.re);
            let above = leading_root(a, 1.0, 0.0, 1.1 * tau_c).unwrap();
            assert!(above.re > 0.0, "a = {a}: Re = {}", above.re);
        }
    }

    #[test]
    fn negative_branch_root_crossing() {
        // the adopted arccos branch must be the first crossing for J < 0 too
        let (tau_c, _) = th(-2.0).unwrap();
        assert!(leading_root(-2.0, 1.0, 0.0, tau_c).unwrap().re.abs() <= 1e-6);
        assert!(leading_root(-2.0, 1.0, 0.0, 0.9 * tau_c).unwrap().re < 0.0);
        assert!(leading_root(-2.0, 1.0, 0.0, 1.1 * tau_c).unwrap().re > 0.0);
    }

    #[test]
    fn tau_c_monotone_as_a_decreases_toward_one() {
        // raising v at fixed (J, g) lowers |a| toward 1 and τ_c grows
        let mut last = 0.0;
        for &v in &[0.0, 0.5, 1.0, 2.0] {
            let (tau_c, _) = turing_hopf_curve(3.0, 1.0, v).unwrap().unwrap();
            assert!(tau_c > last);
            last = tau_c;
        }
    }

    #[test]
    fn sweep_sorted_and_positive() {
        let curve = BifurcationCurve::turing_hopf_sweep(-2.0, 3.0, &[0.5, 0.125, 0.0, 9.0]).unwrap();
        assert!(curve.points.windows(2).all(|w| w[0].0 <= w[1].0));
        for &(_, tau, omega) in &curve.points {
            assert!(tau > 0.0 && omega > 0.0);
        }
        // v = 9 gives |a| ≤ 1 for these parameters and is skipped
        assert!(curve.points.iter().all(|p| p.0 != 9.0));
    }
}
