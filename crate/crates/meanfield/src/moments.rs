//! Mean-field moment dynamics: the delayed mean ODE together with the
//! two-time covariance Volterra equation, marched on a shared uniform grid.
//!
//! The covariance update is written entirely in terms of exponentially
//! rescaled inner and outer integrals, so every stored quantity carries a
//! factor ≤ 1 and long horizons cannot overflow. With
//! `Ĥ(u, s) = ∫₀^s e^{(v−s)/θ} Δ(u−τ, v−τ) dv` and
//! `Î(t, s) = ∫₀^t e^{(u−t)/θ} Ĥ(u, s) du`, both satisfy one-step
//! trapezoidal recurrences in their upper limit, and
//! `C(t, s) = e^{−(t+s)/θ} C(0,0) + (θλ²/2)(e^{−|t−s|/θ} − e^{−(t+s)/θ})
//!  + Σ_γ σ²_{αγ} Î^{αγ}(t, s)`.

use crate::error::{Error, Result};
use crate::gaussian::{gauss_expect_s, gauss_expect_ss, BivariateGaussian};
use crate::netsim::format_sig;
use crate::params::ModelParams;

/// Grid index into a lower-triangular two-time array.
#[inline]
fn tri(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

/// Means and two-time covariances of every population on the grid
/// `t_k = k·dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone)]
pub struct MomentSolution {
    pub dt: f64,
    pub n_steps: usize,
    pub m: usize,
    /// `mu[alpha][k]` = μ^α(t_k).
    mu: Vec<Vec<f64>>,
    /// `cov[alpha][tri(i, j)]` = C^{αα}(t_i, t_j), i ≥ j. Cross-population
    /// covariances vanish identically and are not stored.
    cov: Vec<Vec<f64>>,
}

impl MomentSolution {
    pub fn row_of_time(&self, t: f64) -> Result<usize> {
        let r = t / self.dt;
        let ri = r.round();
        if (r - ri).abs() > 1e-6 || ri < 0.0 || ri as usize > self.n_steps {
            return Err(Error::Domain(format!("time {t} is not on the solution grid")));
        }
        Ok(ri as usize)
    }

    pub fn time_of_row(&self, row: usize) -> f64 {
        row as f64 * self.dt
    }

    pub fn mean_at_row(&self, alpha: usize, row: usize) -> f64 {
        self.mu[alpha][row]
    }

    pub fn mean(&self, alpha: usize, t: f64) -> Result<f64> {
        Ok(self.mu[alpha][self.row_of_time(t)?])
    }

    pub fn covariance_at_rows(&self, alpha: usize, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.cov[alpha][tri(i, j)]
    }

    pub fn covariance(&self, alpha: usize, t: f64, s: f64) -> Result<f64> {
        Ok(self.covariance_at_rows(alpha, self.row_of_time(t)?, self.row_of_time(s)?))
    }

    pub fn variance(&self, alpha: usize, t: f64) -> Result<f64> {
        self.covariance(alpha, t, t)
    }

    pub fn variance_at_row(&self, alpha: usize, row: usize) -> f64 {
        self.cov[alpha][tri(row, row)]
    }

    /// Time-averaged equal-time variance over the final quarter of the
    /// horizon; a cheap plateau estimate for long runs.
    pub fn stationary_variance_estimate(&self, alpha: usize) -> f64 {
        let start = self.n_steps - self.n_steps / 4;
        let rows = self.n_steps + 1 - start;
        (start..=self.n_steps).map(|r| self.variance_at_row(alpha, r)).sum::<f64>() / rows as f64
    }

    /// Columns: `t`, then `mu_pop{α}` and `var_pop{α}` for each population.
    pub fn write_means_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "t")?;
        for a in 0..self.m {
            write!(w, ",mu_pop{},var_pop{}", a + 1, a + 1)?;
        }
        writeln!(w)?;
        for r in 0..=self.n_steps {
            write!(w, "{}", format_sig(self.time_of_row(r)))?;
            for a in 0..self.m {
                write!(w, ",{},{}", format_sig(self.mu[a][r]), format_sig(self.variance_at_row(a, r)))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Binary dump of one population's full covariance matrix:
    /// magic `MFC1`, two little-endian u64 dimensions, then the row-major
    /// matrix as little-endian f64.
    pub fn write_cov_mfc1<W: std::io::Write>(&self, alpha: usize, w: &mut W) -> Result<()> {
        let n = self.n_steps + 1;
        w.write_all(b"MFC1")?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&(n as u64).to_le_bytes())?;
        for i in 0..n {
            for j in 0..n {
                w.write_all(&self.covariance_at_rows(alpha, i, j).to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// One `(α, γ)` interaction channel with non-zero disorder: its rescaled
/// inner/outer integrals and the cached correlation kernel values.
struct Channel {
    alpha: usize,
    gamma: usize,
    /// Delay in grid steps.
    d: usize,
    /// e^{−dt/θ_α}.
    decay: f64,
    /// Ĥ(u_i, s_j), full (n+1)×(n+1), filled up to the current step.
    h: Vec<f64>,
    /// Î(t_{k−1}, s_j) from the accepted previous row.
    i_prev: Vec<f64>,
    /// Î(t_k, s_j), working row.
    i_cur: Vec<f64>,
    /// Lower-triangular cache of Δ^{αγ}(t_i − τ, t_j − τ), delayed times
    /// clamped to the initial condition.
    delta: Vec<f64>,
}

struct Marcher<'a> {
    params: &'a ModelParams,
    dt: f64,
    n: usize,
    mu: Vec<Vec<f64>>,
    cov: Vec<Vec<f64>>,
    channels: Vec<Channel>,
}

impl<'a> Marcher<'a> {
    fn new(params: &'a ModelParams, dt: f64, n: usize) -> Self {
        let m = params.m;
        let mut mu = Vec::with_capacity(m);
        let mut cov = Vec::with_capacity(m);
        for a in 0..m {
            let mut mua = vec![0.0; n + 1];
            mua[0] = params.init.mean(a);
            mu.push(mua);
            let mut cova = vec![0.0; tri(n, n) + 1];
            cova[0] = params.init.variance(a);
            cov.push(cova);
        }
        let mut channels = Vec::new();
        for a in 0..m {
            for g in 0..m {
                let sigma = *params.sigma.get(a, g);
                if sigma == 0.0 {
                    continue;
                }
                channels.push(Channel {
                    alpha: a,
                    gamma: g,
                    d: (params.tau.get(a, g) / dt).round() as usize,
                    decay: (-dt / params.theta[a]).exp(),
                    h: vec![0.0; (n + 1) * (n + 1)],
                    i_prev: vec![0.0; n + 1],
                    i_cur: vec![0.0; n + 1],
                    delta: vec![0.0; tri(n, n) + 1],
                });
            }
        }
        Marcher { params, dt, n, mu, cov, channels }
    }

    /// Equal-time variance clamped away from tiny negative round-off.
    fn var(&self, gamma: usize, row: usize) -> f64 {
        self.cov[gamma][tri(row, row)].max(0.0)
    }

    /// Δ^{αγ} between delayed grid times, reading moments from the stored
    /// solution with the cross term clamped to the Cauchy–Schwarz bound.
    fn delta_value(&self, ch: &Channel, i: usize, j: usize) -> Result<f64> {
        let g = ch.gamma;
        let a = i.saturating_sub(ch.d);
        let b = j.saturating_sub(ch.d);
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let caa = self.var(g, a);
        let cbb = self.var(g, b);
        let bound = (caa * cbb).sqrt();
        let cab = self.cov[g][tri(hi, lo)].clamp(-bound, bound);
        let spec = self.params.sigmoids.get(ch.alpha, g);
        let bg = BivariateGaussian::new((self.mu[g][a], self.mu[g][b]), (caa, cab, cbb))?;
        gauss_expect_ss(spec, &bg)
    }

    /// Mean drift of population α at grid row `row`, used for the Heun
    /// stages. `override_mu`/`override_var` substitute predicted values at
    /// the row itself when a zero-delay channel would otherwise read
    /// not-yet-computed entries.
    fn mean_drift(
        &self,
        alpha: usize,
        row: usize,
        mu_here: f64,
        override_row: Option<(usize, &[f64], &[f64])>,
    ) -> Result<f64> {
        let mut drift = -mu_here / self.params.theta[alpha];
        for g in 0..self.params.m {
            let jbar = *self.params.jbar.get(alpha, g);
            if jbar == 0.0 {
                continue;
            }
            let d = (self.params.tau.get(alpha, g) / self.dt).round() as usize;
            let r = row.saturating_sub(d);
            let (mu_g, var_g) = match override_row {
                Some((or, omu, ovar)) if r == or => (omu[g], ovar[g]),
                _ => (self.mu[g][r], self.var(g, r)),
            };
            let spec = self.params.sigmoids.get(alpha, g);
            drift += jbar * gauss_expect_s(spec, mu_g, var_g)?;
        }
        Ok(drift)
    }

    /// Fill Δ, Ĥ and Î entries that involve grid row `k`, then assemble
    /// covariance row `k`. Safe to call twice (corrector): only row-`k`
    /// entries are rewritten.
    fn covariance_row(&mut self, k: usize) -> Result<()> {
        let n1 = self.n + 1;
        let dt = self.dt;
        let mut channels = std::mem::take(&mut self.channels);
        for ch in channels.iter_mut() {
            if k == 1 {
                ch.delta[0] = self.delta_value(ch, 0, 0)?;
            }
            // new Δ column (by symmetry also the new row)
            for i in 0..=k {
                ch.delta[tri(k, i)] = self.delta_value(ch, k, i)?;
            }
            // Ĥ row k by recurrence in the second argument
            ch.h[k * n1] = 0.0;
            for j in 1..=k {
                ch.h[k * n1 + j] = ch.decay * ch.h[k * n1 + j - 1]
                    + 0.5 * dt * (ch.decay * ch.delta[tri(k, j - 1)] + ch.delta[tri(k, j)]);
            }
            // Ĥ column k for earlier rows
            for i in 0..k {
                ch.h[i * n1 + k] = ch.decay * ch.h[i * n1 + k - 1]
                    + 0.5 * dt * (ch.decay * ch.delta[tri(k - 1, i)] + ch.delta[tri(k, i)]);
            }
            // Î row k from the accepted row k−1
            ch.i_cur[0] = ch.decay * ch.i_prev[0]
                + 0.5 * dt * (ch.decay * ch.h[(k - 1) * n1] + ch.h[k * n1]);
            for j in 1..=k {
                let prev = if j < k { ch.i_prev[j] } else { ch.i_cur[k - 1] };
                ch.i_cur[j] = ch.decay * prev
                    + 0.5 * dt * (ch.decay * ch.h[(k - 1) * n1 + j] + ch.h[k * n1 + j]);
            }
        }
        self.channels = channels;

        for a in 0..self.params.m {
            let theta = self.params.theta[a];
            let lambda = self.params.lambda[a];
            let c00 = self.cov[a][0];
            let tk = k as f64 * dt;
            for j in 0..=k {
                let sj = j as f64 * dt;
                let base = (-(tk + sj) / theta).exp();
                let mut c = base * c00 + 0.5 * theta * lambda * lambda * (((sj - tk) / theta).exp() - base);
                for ch in &self.channels {
                    if ch.alpha == a {
                        let sigma = *self.params.sigma.get(a, ch.gamma);
                        c += sigma * sigma * ch.i_cur[j];
                    }
                }
                self.cov[a][tri(k, j)] = c;
            }
        }
        Ok(())
    }

    fn accept_row(&mut self, k: usize) {
        for ch in &mut self.channels {
            let _ = k;
            std::mem::swap(&mut ch.i_prev, &mut ch.i_cur);
        }
    }
}

/// Solve the mean and covariance equations on `[0, horizon]`.
///
/// Delays must land on the grid and `dt` must resolve the fastest time
/// constant (`dt < min θ / 10`). Channels with zero delay are handled by a
/// predictor pass using the previous row followed by one corrector pass.
pub fn solve_moments(params: &ModelParams, dt: f64, horizon: f64) -> Result<MomentSolution> {
    params.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    let min_theta = params.theta.iter().cloned().fold(f64::INFINITY, f64::min);
    if dt >= min_theta / 10.0 {
        return Err(Error::invalid("dt", format!("must be < min theta / 10 = {}", min_theta / 10.0)));
    }
    for tau in &params.tau.data {
        let steps = tau / dt;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::invalid("tau", format!("delay {tau} does not land on the dt = {dt} grid")));
        }
    }
    let n = (horizon / dt).round() as usize;
    if n == 0 {
        return Err(Error::invalid("horizon", "must span at least one step"));
    }

    let m = params.m;
    let zero_delay_coupling = (0..m).any(|a| {
        (0..m).any(|g| {
            *params.tau.get(a, g) == 0.0
                && (*params.jbar.get(a, g) != 0.0 || *params.sigma.get(a, g) != 0.0)
        })
    });

    let mut mc = Marcher::new(params, dt, n);
    for k in 1..=n {
        // Heun predictor for the means
        let mut k1 = vec![0.0; m];
        for a in 0..m {
            k1[a] = mc.mean_drift(a, k - 1, mc.mu[a][k - 1], None)?;
        }
        let mu_pred: Vec<f64> = (0..m).map(|a| mc.mu[a][k - 1] + dt * k1[a]).collect();
        let var_pred: Vec<f64> = (0..m).map(|a| mc.var(a, k - 1)).collect();
        let mut mu_new = vec![0.0; m];
        for a in 0..m {
            let k2 = mc.mean_drift(a, k, mu_pred[a], Some((k, &mu_pred, &var_pred)))?;
            mu_new[a] = mc.mu[a][k - 1] + 0.5 * dt * (k1[a] + k2);
        }
        for a in 0..m {
            mc.mu[a][k] = mu_new[a];
        }

        mc.covariance_row(k)?;

        if zero_delay_coupling {
            // corrector: redo the mean stage-2 and the row with actual
            // row-k moments
            let var_now: Vec<f64> = (0..m).map(|a| mc.var(a, k)).collect();
            let mu_now: Vec<f64> = (0..m).map(|a| mc.mu[a][k]).collect();
            for a in 0..m {
                let k2 = mc.mean_drift(a, k, mu_now[a], Some((k, &mu_now, &var_now)))?;
                mc.mu[a][k] = mc.mu[a][k - 1] + 0.5 * dt * (k1[a] + k2);
            }
            mc.covariance_row(k)?;
        }

        for a in 0..m {
            if !mc.mu[a][k].is_finite() || !mc.cov[a][tri(k, k)].is_finite() {
                return Err(Error::NumericalInstability(format!(
                    "moment solution lost finiteness at t = {}",
                    k as f64 * dt
                )));
            }
        }
        mc.accept_row(k);
    }

    Ok(MomentSolution { dt, n_steps: n, m, mu: mc.mu, cov: mc.cov })
}
