//! Statistical validation: Gaussianity and independence tests for network
//! marginals, and spectral classification of dynamical regimes.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::netsim::TrajectoryBundle;

/// Default significance level for [`TestReport::verdict`].
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Outcome of a hypothesis test, serializable as one JSON line.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    /// `true` iff `p_value > alpha` (the null is retained).
    pub verdict: bool,
    pub alpha: f64,
}

impl TestReport {
    fn new(test: &str, statistic: f64, p_value: f64, n: usize, alpha: f64) -> Self {
        Self {
            test: test.to_string(),
            statistic,
            p_value,
            n,
            verdict: p_value > alpha,
            alpha,
        }
    }

    /// One-line JSON rendering, `{test, statistic, p_value, n, verdict, alpha}`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Survival function of the asymptotic Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`, with the theta-function dual
/// series for small `λ` where the alternating series converges slowly.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // 1 − (√(2π)/λ) Σ_{k≥0} e^{−(2k+1)²π²/(8λ²)}
        let t = (-std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda)).exp();
        let sum = t * (1.0 + t.powi(8) * (1.0 + t.powi(16)));
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test of `samples` against
/// `Normal(mu, var)`. The p-value uses the asymptotic Kolmogorov
/// distribution with the Stephens finite-`n` correction.
pub fn ks_gaussian(samples: &[f64], mu: f64, var: f64, alpha: f64) -> Result<TestReport> {
    if var <= 0.0 || !var.is_finite() {
        return Err(Error::invalid("var", "null variance must be positive"));
    }
    let n = samples.len();
    if n < 50 {
        return Err(Error::Stats(format!(
            "Kolmogorov-Smirnov needs at least 50 samples, got {n}"
        )));
    }
    let sd = var.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = crate::gaussian::normal_cdf((x - mu) / sd);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let lambda = (nf.sqrt() + 0.12 + 0.11 / nf.sqrt()) * d;
    Ok(TestReport::new("ks-gaussian", d, kolmogorov_sf(lambda), n, alpha))
}

/// Equiprobable-quantile bin index for `x` given sorted reference `sorted`.
fn quantile_bin(sorted: &[f64], bins: usize, x: f64) -> usize {
    let n = sorted.len();
    let mut b = bins - 1;
    for k in 1..bins {
        // right edge of bin k−1 is the k/bins empirical quantile
        let edge = sorted[(k * n) / bins - 1];
        if x <= edge {
            b = k - 1;
            break;
        }
    }
    b
}

/// Chi-square independence test on the `bins × bins` contingency table of
/// equiprobable-quantile-binned pairs, with `(bins−1)²` degrees of freedom.
pub fn chi2_independence(x: &[f64], y: &[f64], bins: usize, alpha: f64) -> Result<TestReport> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::invalid("y", "paired samples must have equal length"));
    }
    if n < 100 {
        return Err(Error::Stats(format!(
            "chi-square independence needs at least 100 pairs, got {n}"
        )));
    }
    if bins < 3 {
        return Err(Error::invalid("bins", "need at least 3 bins per margin"));
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    ys.sort_by(|a, b| a.total_cmp(b));

    let mut table = vec![0.0f64; bins * bins];
    for (&xi, &yi) in x.iter().zip(y) {
        table[quantile_bin(&xs, bins, xi) * bins + quantile_bin(&ys, bins, yi)] += 1.0;
    }
    let row: Vec<f64> = (0..bins).map(|i| table[i * bins..(i + 1) * bins].iter().sum()).collect();
    let col: Vec<f64> = (0..bins).map(|j| (0..bins).map(|i| table[i * bins + j]).sum()).collect();

    let nf = n as f64;
    let mut stat = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let expected = row[i] * col[j] / nf;
            if expected < 5.0 {
                return Err(Error::Stats(format!(
                    "expected cell count {expected:.2} below 5 in cell ({i},{j}); use fewer bins"
                )));
            }
            let diff = table[i * bins + j] - expected;
            stat += diff * diff / expected;
        }
    }
    let dof = ((bins - 1) * (bins - 1)) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("dof > 0").cdf(stat);
    Ok(TestReport::new("chi2-independence", stat, p.clamp(0.0, 1.0), n, alpha))
}

/// Dynamical regime of one population over an analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeKind {
    Stationary,
    Oscillatory,
    Chaotic,
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegimeKind::Stationary => "stationary",
            RegimeKind::Oscillatory => "oscillatory",
            RegimeKind::Chaotic => "chaotic",
        })
    }
}

/// Regime label plus the diagnostics it was decided on.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeLabel {
    pub kind: RegimeKind,
    /// Peak-to-peak amplitude of the population-mean path in the window.
    pub amplitude: f64,
    /// Angular frequency (rad per unit time) of the dominant spectral peak.
    pub peak_frequency: f64,
    /// Time-averaged cross-neuron dispersion of temporally centered paths.
    pub dispersion: f64,
}

/// Cross-neuron dispersion threshold above which a non-oscillatory
/// population is called chaotic.
pub const DISPERSION_THRESHOLD: f64 = 0.05;

/// Hann-windowed periodogram of a mean-removed series; returns
/// `(angular frequency, power)` for the positive-frequency bins.
fn hann_periodogram(m: &[f64], dt: f64) -> Vec<(f64, f64)> {
    let n = m.len();
    let mean = m.iter().sum::<f64>() / n as f64;
    let windowed: Vec<f64> = m
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos());
            (v - mean) * w
        })
        .collect();
    (1..=n / 2)
        .map(|k| {
            let omega = 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * dt);
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in windowed.iter().enumerate() {
                let phase = omega * dt * i as f64;
                re += v * phase.cos();
                im -= v * phase.sin();
            }
            (omega, (re * re + im * im) / n as f64)
        })
        .collect()
}

/// Classifies the dynamical regime of `population` over the time window
/// `(t_start, t_end)` using the population-mean spectrum and the
/// cross-neuron dispersion:
///
/// * oscillatory — the dominant spectral peak of the population mean
///   exceeds 5× the spectral median and the in-window peak-to-peak
///   amplitude exceeds 10% of the mean path's full recorded range;
/// * chaotic — not oscillatory, and the time-averaged dispersion of
///   temporally centered single-neuron paths exceeds
///   [`DISPERSION_THRESHOLD`] (the mean stays flat while individual
///   neurons fluctuate);
/// * stationary — otherwise.
///
/// `theta` is the population's time constant, used to enforce the window
/// preconditions: the window must start after a transient of at least
/// `10·θ` and span at least `20·θ`.
pub fn regime_classify(
    bundle: &TrajectoryBundle,
    population: usize,
    window: (f64, f64),
    theta: f64,
) -> Result<RegimeLabel> {
    if population >= bundle.n_pops() {
        return Err(Error::invalid("population", "index out of range"));
    }
    let (t0, t1) = window;
    if t0 < 10.0 * theta - 1e-9 {
        return Err(Error::Stats(format!(
            "window must start after a transient of 10·theta = {}",
            10.0 * theta
        )));
    }
    if t1 - t0 < 20.0 * theta - 1e-9 {
        return Err(Error::Stats(format!(
            "window must span at least 20·theta = {}",
            20.0 * theta
        )));
    }
    let r0 = bundle.row_of_time(t0)?;
    let r1 = bundle.row_of_time(t1)?;
    let neurons = bundle.pop_range(population);
    let n_neurons = neurons.len();
    let n_rows = r1 - r0 + 1;

    // population-mean path over the window, and over the full recorded
    // path for the amplitude reference
    let pop_mean = |row: usize| {
        bundle.row(row)[neurons.clone()].iter().sum::<f64>() / n_neurons as f64
    };
    let m: Vec<f64> = (r0..=r1).map(pop_mean).collect();
    let (mut full_min, mut full_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in bundle.row_of_time(0.0)?..bundle.n_rows() {
        let v = pop_mean(row);
        full_min = full_min.min(v);
        full_max = full_max.max(v);
    }
    let full_range = full_max - full_min;
    let amplitude = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - m.iter().cloned().fold(f64::INFINITY, f64::min);

    // spectral peak against the spectral median
    let spectrum = hann_periodogram(&m, bundle.dt);
    let (peak_frequency, peak_power) = spectrum
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0.0, 0.0));
    let mut powers: Vec<f64> = spectrum.iter().map(|&(_, p)| p).collect();
    powers.sort_by(|a, b| a.total_cmp(b));
    let median_power = powers[powers.len() / 2];
    // the absolute floor keeps numerically-flat means (whose relative
    // spectral test is meaningless) out of the oscillatory class
    let oscillatory =
        peak_power > 5.0 * median_power && amplitude > 0.1 * full_range && amplitude > 1e-9;

    // dispersion of temporally centered paths: subtracting each neuron's
    // own window average removes static heterogeneity so only temporal
    // fluctuation diversity counts
    let mut neuron_means = vec![0.0f64; n_neurons];
    for row in r0..=r1 {
        for (k, &v) in bundle.row(row)[neurons.clone()].iter().enumerate() {
            neuron_means[k] += v;
        }
    }
    for nm in &mut neuron_means {
        *nm /= n_rows as f64;
    }
    let mut dispersion = 0.0;
    for row in r0..=r1 {
        let centered: Vec<f64> = bundle.row(row)[neurons.clone()]
            .iter()
            .zip(&neuron_means)
            .map(|(&v, &nm)| v - nm)
            .collect();
        let cm = centered.iter().sum::<f64>() / n_neurons as f64;
        let var = centered.iter().map(|&c| (c - cm) * (c - cm)).sum::<f64>() / n_neurons as f64;
        dispersion += var.sqrt();
    }
    dispersion /= n_rows as f64;

    let kind = if oscillatory {
        RegimeKind::Oscillatory
    } else if dispersion > DISPERSION_THRESHOLD {
        RegimeKind::Chaotic
    } else {
        RegimeKind::Stationary
    };
    Ok(RegimeLabel {
        kind,
        amplitude,
        peak_frequency,
        dispersion,
    })
}
