//! Scenario presets, orchestration, and artifact emission.
//!
//! A scenario bundles a model preset with an ordered list of analyses and
//! writes its artifacts (CSV, SVG, JSON reports) into an output directory,
//! returning a machine-readable [`Manifest`]. CSV files are the
//! authoritative outputs; SVG files are convenience renderings.
//!
//! Reproducibility contract: two runs of the same scenario with the same
//! seed and overrides produce byte-identical artifacts, regardless of the
//! worker count (`MEANFIELD_THREADS`).

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bifurcation::BifurcationCurve;
use crate::error::{Error, Result};
use crate::moments::solve_moments;
use crate::netsim::{sample_weights, simulate_network, NetworkConfig, TrajectoryBundle};
use crate::params::{InitialLaw, ModelParams, PopMatrix};
use crate::sigmoid::SigmoidSpec;
use crate::stationary::{classify_local_phase, potential_phi, solve_stationary, Regime};
use crate::stats::{chi2_independence, ks_gaussian, regime_classify, RegimeKind};
use crate::config::ConfigFile;

/// Manifest format tag; bump on layout changes.
pub const MANIFEST_FORMAT: &str = "MFC1";

/// Options shared by every scenario run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the scenario's default seed when set.
    pub seed: Option<u64>,
    /// `key=value` overrides, applied after preset construction.
    pub overrides: Vec<(String, String)>,
    /// Restore figure-scale population sizes (desk-scale is the default).
    pub paper_scale: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        RunOptions { out_dir: out_dir.into(), seed: None, overrides: Vec::new(), paper_scale: false }
    }
}

/// One artifact written by a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Machine-readable run record; also written as `manifest.json` (which
/// lists every other artifact and is therefore not self-referential).
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub format: String,
    pub scenario: String,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
    pub summary: BTreeMap<String, serde_json::Value>,
    /// True iff every acceptance assertion declared by the scenario held.
    pub passed: bool,
}

/// Registry entry: name, one-line description, and the figure mirrored.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub figure: &'static str,
}

/// The preset registry, in presentation order.
pub fn list_scenarios() -> Vec<ScenarioInfo> {
    vec![
        ScenarioInfo {
            name: "fig-statistics",
            description: "two-population Wilson-Cowan network: Gaussianity (KS) and cross-population independence (chi-square) at t = T",
            figure: "statistics of the limit law",
        },
        ScenarioInfo {
            name: "fig-one-population",
            description: "single population: stationary potential wells and pitchfork locus across (J, sigma) points",
            figure: "one-population bifurcations",
        },
        ScenarioInfo {
            name: "fig-delay-oscillations",
            description: "delayed inhibition (J = -2, g = 5): Turing-Hopf curve and three simulated regimes at (tau, sigma)",
            figure: "delay-induced oscillations",
        },
        ScenarioInfo {
            name: "fig-localized-chaos",
            description: "two symmetrically coupled populations, diagonal disorder sigma = (3, 0.5): chaos localized to population 1",
            figure: "localized chaos",
        },
        ScenarioInfo {
            name: "fig-heterogeneity-oscillations",
            description: "Wilson-Cowan network with delay tau = 3: stationary / oscillatory / chaotic at sigma = 0.9 / 1.6 / 3.5",
            figure: "heterogeneity-induced oscillations",
        },
    ]
}

/// Run a preset by name, or a custom TOML configuration by path.
///
/// The pipeline honours `MEANFIELD_THREADS` (worker-count cap) and the
/// overrides in `opts`. Artifacts land in `opts.out_dir`, which is created
/// if missing; the returned manifest's `passed` flag reports the
/// scenario's own acceptance assertions.
pub fn run_scenario(name_or_path: &str, opts: &RunOptions) -> Result<Manifest> {
    let pool = thread_pool()?;
    pool.install(|| dispatch(name_or_path, opts))
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("MEANFIELD_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("MEANFIELD_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::Config("MEANFIELD_THREADS must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("could not build worker pool: {e}")))
}

fn dispatch(name_or_path: &str, opts: &RunOptions) -> Result<Manifest> {
    let mut em = Emitter::new(&opts.out_dir)?;
    let manifest = match name_or_path {
        "fig-statistics" => fig_statistics(opts, &mut em)?,
        "fig-one-population" => fig_one_population(opts, &mut em)?,
        "fig-delay-oscillations" => fig_delay_oscillations(opts, &mut em)?,
        "fig-localized-chaos" => fig_localized_chaos(opts, &mut em)?,
        "fig-heterogeneity-oscillations" => fig_heterogeneity_oscillations(opts, &mut em)?,
        other => {
            let path = Path::new(other);
            if path.extension().map_or(false, |e| e == "toml") || path.exists() {
                custom_config(path, opts, &mut em)?
            } else {
                return Err(Error::UnknownScenario(other.to_string()));
            }
        }
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    bytes.push(b'\n');
    std::fs::write(opts.out_dir.join("manifest.json"), &bytes)?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// artifact plumbing

struct Emitter {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Emitter { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let digest = Sha256::digest(bytes);
        let mut sha256 = String::with_capacity(64);
        for b in digest {
            sha256.push_str(&format!("{b:02x}"));
        }
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.push(ManifestEntry { name: name.to_string(), sha256, bytes: bytes.len() });
        Ok(())
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn finish(
        self,
        scenario: &str,
        seed: u64,
        summary: BTreeMap<String, serde_json::Value>,
        passed: bool,
    ) -> Manifest {
        Manifest {
            format: MANIFEST_FORMAT.to_string(),
            scenario: scenario.to_string(),
            seed,
            files: self.files,
            summary,
            passed,
        }
    }
}

fn json_f64(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Apply `key=value` overrides to a network configuration. Matrix-valued
/// keys (`sigma`, `lambda`, `tau`, `gain`) set every entry uniformly.
fn apply_overrides(config: &mut NetworkConfig, overrides: &[(String, String)]) -> Result<()> {
    for (key, value) in overrides {
        let parse = |field: &str| -> Result<f64> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("override {field}={value}: not a number")))
        };
        let m = config.params.m;
        match key.as_str() {
            "sigma" => {
                let v = parse("sigma")?;
                config.params.sigma = PopMatrix::filled(m, v);
            }
            "lambda" => {
                let v = parse("lambda")?;
                config.params.lambda = vec![v; m];
            }
            "tau" => {
                let v = parse("tau")?;
                config.params.tau = PopMatrix::filled(m, v);
            }
            "gain" => {
                let v = parse("gain")?;
                let family = config.params.sigmoids.get(0, 0).family;
                config.params.sigmoids = PopMatrix::filled(m, SigmoidSpec::new(family, v)?);
            }
            "dt" => config.dt = parse("dt")?,
            "horizon" => config.horizon = parse("horizon")?,
            "n-per-pop" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| Error::Config(format!("override n-per-pop={value}: not an integer")))?;
                config.n_per_pop = vec![n; m];
            }
            "seed" => {
                config.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("override seed={value}: not an integer")))?;
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown override key `{other}` (known: sigma, lambda, tau, gain, dt, horizon, n-per-pop, seed)"
                )))
            }
        }
    }
    config.validate()?;
    config.params.validate()
}

/// Population-mean path of a bundle over all recorded rows.
fn mean_path(bundle: &TrajectoryBundle, pop: usize) -> Vec<f64> {
    let range = bundle.pop_range(pop);
    let n = range.len() as f64;
    (0..bundle.n_rows())
        .map(|r| bundle.row(r)[range.clone()].iter().sum::<f64>() / n)
        .collect()
}

fn write_mean_traces(
    em: &mut Emitter,
    name: &str,
    bundle: &TrajectoryBundle,
) -> Result<Vec<Vec<f64>>> {
    let paths: Vec<Vec<f64>> = (0..bundle.n_pops()).map(|p| mean_path(bundle, p)).collect();
    em.write_with(name, |w| {
        write!(w, "time")?;
        for p in 0..paths.len() {
            write!(w, ",m_pop{}", p + 1)?;
        }
        writeln!(w)?;
        for r in 0..bundle.n_rows() {
            write!(w, "{:.6}", bundle.time_of_row(r))?;
            for path in &paths {
                write!(w, ",{:.9e}", path[r])?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok(paths)
}

// ---------------------------------------------------------------------------
// minimal SVG renderings (CSV remains authoritative)

const SVG_COLORS: [&str; 5] = ["#2b6cb0", "#c05621", "#2f855a", "#9b2c2c", "#6b46c1"];

/// Render labelled polylines on a plain axes box. No plotting dependency:
/// the output is a convenience view of data already emitted as CSV.
fn svg_lines(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 400.0, 60.0, 20.0, 30.0, 40.0);
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !xmin.is_finite() || xmax <= xmin {
        xmin = 0.0;
        xmax = 1.0;
    }
    if !ymin.is_finite() || ymax <= ymin {
        ymin -= 0.5;
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n",
        w / 2.0
    ));
    out.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        w - ml - mr,
        h - mt - mb
    ));
    for (txt, x, y, anchor) in [
        (format!("{xmin:.3}"), ml, h - mb + 16.0, "middle"),
        (format!("{xmax:.3}"), w - mr, h - mb + 16.0, "middle"),
        (format!("{ymin:.3}"), ml - 6.0, h - mb, "end"),
        (format!("{ymax:.3}"), ml - 6.0, mt + 10.0, "end"),
    ] {
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{txt}</text>\n"
        ));
    }
    for (k, (label, pts)) in series.iter().enumerate() {
        let color = SVG_COLORS[k % SVG_COLORS.len()];
        let mut d = String::new();
        for &(x, y) in pts {
            if !d.is_empty() {
                d.push(' ');
            }
            d.push_str(&format!("{:.2},{:.2}", sx(x), sy(y)));
        }
        out.push_str(&format!(
            "<polyline points=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{label}</text>\n",
            ml + 8.0,
            mt + 16.0 + 14.0 * k as f64
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn decimate(xs: &[f64], ys: &[f64], max_pts: usize) -> Vec<(f64, f64)> {
    let stride = (xs.len() / max_pts).max(1);
    xs.iter().zip(ys).step_by(stride).map(|(&x, &y)| (x, y)).collect()
}

// ---------------------------------------------------------------------------
// presets

fn wilson_cowan_jbar() -> PopMatrix<f64> {
    PopMatrix::new(2, vec![15.0, -12.0, 16.0, -5.0]).unwrap()
}

/// Preset mirrored by `fig-statistics` (and by the Gaussianity and
/// mean-field acceptance protocols).
///
/// The gain 0.05 keeps the finite-N common-mode drift of the population
/// mean (a quenched-disorder effect of order |J̄| · sd(S)/√N, coherently
/// shifting the whole sample) below what a KS test against the exact
/// mean-field Gaussian can detect at N = 2000.
pub fn statistics_preset(n_per_pop: usize, seed: u64) -> NetworkConfig {
    let params = ModelParams {
        m: 2,
        theta: vec![1.0, 1.0],
        lambda: vec![0.5, 0.5],
        jbar: wilson_cowan_jbar(),
        sigma: PopMatrix::filled(2, 1.0),
        tau: PopMatrix::filled(2, 0.0),
        sigmoids: PopMatrix::filled(2, SigmoidSpec::gaussian_cdf(0.05).unwrap()),
        init: InitialLaw::GaussianIid { mean: vec![0.0, 0.0], variance: vec![1.0, 1.0] },
    };
    NetworkConfig { params, n_per_pop: vec![n_per_pop, n_per_pop], dt: 0.005, horizon: 2.0, seed }
}

/// Preset mirrored by `fig-heterogeneity-oscillations`: the Wilson-Cowan
/// network with interaction delay tau = 3 whose second population passes
/// stationary -> oscillatory -> chaotic as sigma grows.
///
/// The per-pair gains [[3, 1.5], [1, 3]] keep the saturated high branch
/// alive (and delay-immune) at sigma = 0.9 while leaving the low fixed
/// point's delay instability reachable at sigma = 1.6; the initial mean
/// (3, 16) starts population 2 well above its high-branch value so the
/// relaxation transient sets the scale for the classifier's relative
/// amplitude test.
pub fn heterogeneity_preset(sigma: f64, n_per_pop: usize, seed: u64) -> NetworkConfig {
    let gains = [3.0, 1.5, 1.0, 3.0];
    let specs: Vec<SigmoidSpec> =
        gains.iter().map(|&g| SigmoidSpec::gaussian_cdf(g).unwrap()).collect();
    let params = ModelParams {
        m: 2,
        theta: vec![1.0, 1.0],
        lambda: vec![0.0, 0.0],
        jbar: wilson_cowan_jbar(),
        sigma: PopMatrix::filled(2, sigma),
        tau: PopMatrix::filled(2, 3.0),
        sigmoids: PopMatrix::new(2, specs).unwrap(),
        init: InitialLaw::GaussianIid { mean: vec![3.0, 16.0], variance: vec![1.0, 1.0] },
    };
    NetworkConfig { params, n_per_pop: vec![n_per_pop, n_per_pop], dt: 0.01, horizon: 60.0, seed }
}

/// Classification window used with [`heterogeneity_preset`].
pub const HETEROGENEITY_WINDOW: (f64, f64) = (20.0, 60.0);

/// Preset mirrored by `fig-localized-chaos`: symmetric cross-coupling with
/// diagonal disorder of very different widths.
pub fn localized_chaos_preset(n_per_pop: usize, seed: u64) -> NetworkConfig {
    let mut sigma = PopMatrix::filled(2, 0.0);
    sigma.set(0, 0, 3.0);
    sigma.set(1, 1, 0.5);
    let params = ModelParams {
        m: 2,
        theta: vec![1.0, 1.0],
        lambda: vec![0.0, 0.0],
        jbar: PopMatrix::new(2, vec![0.0, 3.0, 3.0, 0.0]).unwrap(),
        sigma,
        tau: PopMatrix::filled(2, 0.0),
        sigmoids: PopMatrix::filled(2, SigmoidSpec::centered_with_slope(1.0).unwrap()),
        init: InitialLaw::GaussianIid { mean: vec![0.0, 0.0], variance: vec![1.0, 1.0] },
    };
    NetworkConfig { params, n_per_pop: vec![n_per_pop, n_per_pop], dt: 0.01, horizon: 35.0, seed }
}

/// One delayed inhibitory population (J = -2, centered sigmoid, gain 5).
///
/// At gain 5 the zero-disorder-width loop slope is a = 2·5/√(2π) ≈ 3.99,
/// whose delay-Hopf threshold τ_c ≈ 0.47 separates the (τ = 0.1) and
/// (τ = 0.5) cases, while σ·S'(0)·θ stays below 1 at σ = 0.5 so the
/// short-delay case remains a zero-width stationary state.
pub fn delay_preset(tau: f64, sigma: f64, n: usize, seed: u64) -> NetworkConfig {
    let params = ModelParams {
        m: 1,
        theta: vec![1.0],
        lambda: vec![0.0],
        jbar: PopMatrix::new(1, vec![-2.0]).unwrap(),
        sigma: PopMatrix::filled(1, sigma),
        tau: PopMatrix::filled(1, tau),
        sigmoids: PopMatrix::filled(1, SigmoidSpec::centered_erf(5.0).unwrap()),
        init: InitialLaw::GaussianIid { mean: vec![0.5], variance: vec![0.25] },
    };
    NetworkConfig { params, n_per_pop: vec![n], dt: 0.01, horizon: 40.0, seed }
}

// ---------------------------------------------------------------------------
// scenario bodies

fn fig_statistics(opts: &RunOptions, em: &mut Emitter) -> Result<Manifest> {
    let seed = opts.seed.unwrap_or(1);
    let n = if opts.paper_scale { 6000 } else { 2000 };
    let mut config = statistics_preset(n, seed);
    apply_overrides(&mut config, &opts.overrides)?;

    let weights = sample_weights(&config)?;
    let bundle = simulate_network(&config, &weights)?;
    let moments = solve_moments(&config.params, config.dt, config.horizon)?;
    let t_end = config.horizon;
    let last = bundle.n_rows() - 1;

    let mut summary = BTreeMap::new();
    let mut passed = true;
    let mut reports = Vec::new();
    let mut svg_series = Vec::new();
    for pop in 0..2 {
        let range = bundle.pop_range(pop);
        let samples: Vec<f64> = bundle.row(last)[range].to_vec();
        let mu = moments.mean(pop, t_end)?;
        let var = moments.variance(pop, t_end)?;
        let report = ks_gaussian(&samples, mu, var, 0.01)?;
        passed &= report.p_value > 0.01;
        summary.insert(format!("ks-p-pop{}", pop + 1), json_f64(report.p_value));
        summary.insert(format!("theory-mean-pop{}", pop + 1), json_f64(mu));
        summary.insert(format!("theory-var-pop{}", pop + 1), json_f64(var));
        reports.push(report.to_json_line());

        // histogram against the theoretical Gaussian density
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bins = 40;
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &s in &samples {
            let k = (((s - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        em.write_with(&format!("histogram-pop{}.csv", pop + 1), |w| {
            writeln!(w, "bin_center,count,density")?;
            for (k, &c) in counts.iter().enumerate() {
                let center = lo + (k as f64 + 0.5) * width;
                let density = c as f64 / (samples.len() as f64 * width);
                writeln!(w, "{center:.6},{c},{density:.9e}")?;
            }
            Ok(())
        })?;
        let sd = var.sqrt();
        let curve: Vec<(f64, f64)> = (0..=200)
            .map(|k| {
                let x = mu - 4.0 * sd + 8.0 * sd * k as f64 / 200.0;
                (x, crate::gaussian::normal_pdf((x - mu) / sd) / sd)
            })
            .collect();
        em.write_with(&format!("gaussian-pop{}.csv", pop + 1), |w| {
            writeln!(w, "x,density")?;
            for &(x, d) in &curve {
                writeln!(w, "{x:.6},{d:.9e}")?;
            }
            Ok(())
        })?;
        let hist_pts: Vec<(f64, f64)> = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (lo + (k as f64 + 0.5) * width, c as f64 / (samples.len() as f64 * width)))
            .collect();
        svg_series.push((format!("pop{} empirical", pop + 1), hist_pts));
        svg_series.push((format!("pop{} Gaussian", pop + 1), curve));
    }

    // cross-population independence on simultaneous pairs at t = T
    let r0 = bundle.pop_range(0);
    let r1 = bundle.pop_range(1);
    let npairs = r0.len().min(r1.len());
    let x: Vec<f64> = bundle.row(last)[r0][..npairs].to_vec();
    let y: Vec<f64> = bundle.row(last)[r1][..npairs].to_vec();
    let chi2 = chi2_independence(&x, &y, 4, 0.01)?;
    passed &= chi2.p_value > 0.01;
    summary.insert("chi2-p".into(), json_f64(chi2.p_value));
    reports.push(chi2.to_json_line());

    em.write_with("reports.jsonl", |w| {
        for line in &reports {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;
    em.write(
        "fig-statistics.svg",
        svg_lines("Marginal law at t = T vs. mean-field Gaussian", &svg_series).as_bytes(),
    )?;
    Ok(std::mem::replace(em, Emitter::new(&opts.out_dir)?).finish("fig-statistics", seed, summary, passed))
}

fn fig_one_population(opts: &RunOptions, em: &mut Emitter) -> Result<Manifest> {
    let seed = opts.seed.unwrap_or(1);
    // (J, sigma) points walked by the figure, with the number of interior
    // potential wells / mean roots frozen from the solved model
    // below the pitchfork (J = 0.5) a single root; above it (J = 1.5)
    // three roots while the disorder is weak, collapsing back to one once
    // sigma's smoothing pulls the effective slope below 1/J
    let points: [(f64, f64, usize); 5] =
        [(0.5, 0.5, 1), (1.5, 0.5, 3), (0.5, 1.5, 1), (1.5, 1.5, 1), (1.5, 2.0, 1)];
    let mut summary = BTreeMap::new();
    let mut passed = true;
    let mut svg_series = Vec::new();
    for (idx, &(j, sigma, expected_roots)) in points.iter().enumerate() {
        let params = ModelParams {
            m: 1,
            theta: vec![1.0],
            lambda: vec![0.0],
            jbar: PopMatrix::new(1, vec![j]).unwrap(),
            sigma: PopMatrix::filled(1, sigma),
            tau: PopMatrix::filled(1, 0.0),
            sigmoids: PopMatrix::filled(1, SigmoidSpec::centered_with_slope(1.0).unwrap()),
            init: InitialLaw::DeterministicConstant { values: vec![0.5] },
        };
        let state = solve_stationary(&params, 60.0)?;
        let roots = crate::stationary::stationary_mean_roots(&params, &state.c0)?;
        passed &= roots.len() == expected_roots;
        let tag = format!("j{j}-sigma{sigma}");
        summary.insert(format!("{tag}-mean"), json_f64(state.mean[0]));
        summary.insert(format!("{tag}-c0"), json_f64(state.c0[0]));
        summary.insert(format!("{tag}-roots"), serde_json::Value::from(roots.len()));
        summary.insert(
            format!("{tag}-regime"),
            serde_json::Value::from(state.regime[0].to_string()),
        );
        if state.c0[0] > 1e-6 {
            let grid: Vec<f64> =
                (0..=200).map(|k| state.c0[0] * k as f64 / 200.0).collect();
            let potential = potential_phi(&params, &state.mean, &state.c0, &grid)?;
            em.write_with(&format!("potential-{idx}-{tag}.csv", idx = idx + 1), |w| {
                potential.write_csv(w)
            })?;
            svg_series.push((
                format!("J={j}, sigma={sigma}"),
                grid.iter().cloned().zip(potential.phi.iter().cloned()).collect(),
            ));
            em.write_with(&format!("scs-profile-{idx}-{tag}.csv", idx = idx + 1), |w| {
                state.profile.write_csv(w)
            })?;
        }
    }
    // pitchfork locus in the (Gamma, J) plane for the slope-1 sigmoid
    let gammas: Vec<f64> = (0..=120).map(|k| k as f64 / 40.0).collect();
    let gain = (2.0 * std::f64::consts::PI).sqrt(); // slope 1 at the origin
    let curve = BifurcationCurve::pitchfork_sweep(gain, &gammas)?;
    em.write_with("pitchfork.csv", |w| curve.write_csv(w))?;
    if !svg_series.is_empty() {
        em.write(
            "fig-one-population.svg",
            svg_lines("Stationary potential wells", &svg_series).as_bytes(),
        )?;
    }
    Ok(std::mem::replace(em, Emitter::new(&opts.out_dir)?).finish("fig-one-population", seed, summary, passed))
}

fn fig_delay_oscillations(opts: &RunOptions, em: &mut Emitter) -> Result<Manifest> {
    let seed = opts.seed.unwrap_or(1);
    let n = if opts.paper_scale { 6000 } else { 2000 };
    // Turing-Hopf curve for the delayed inhibitory loop
    let vs: Vec<f64> = (0..=100).map(|k| k as f64 * 0.02).collect();
    let curve = BifurcationCurve::turing_hopf_sweep(-2.0, 5.0, &vs)?;
    em.write_with("turing-hopf.csv", |w| curve.write_csv(w))?;

    // short delay: stationary; past tau_c: a coherent cycle; strong
    // disorder: incoherent chaos swallows the cycle
    let cases: [(f64, f64, RegimeKind); 3] = [
        (0.1, 0.5, RegimeKind::Stationary),
        (0.5, 0.5, RegimeKind::Oscillatory),
        (0.5, 1.0, RegimeKind::Chaotic),
    ];
    let mut summary = BTreeMap::new();
    let mut passed = true;
    let mut svg_series = Vec::new();
    for &(tau, sigma, expected) in &cases {
        let mut config = delay_preset(tau, sigma, n, seed);
        apply_overrides(&mut config, &opts.overrides)?;
        let weights = sample_weights(&config)?;
        let bundle = simulate_network(&config, &weights)?;
        let tag = format!("tau{tau}-sigma{sigma}");
        let paths = write_mean_traces(em, &format!("mean-{tag}.csv"), &bundle)?;
        let label = regime_classify(&bundle, 0, (10.0, config.horizon), 1.0)?;
        passed &= label.kind == expected;
        summary.insert(format!("{tag}-regime"), serde_json::Value::from(label.kind.to_string()));
        summary.insert(format!("{tag}-amplitude"), json_f64(label.amplitude));
        summary.insert(format!("{tag}-peak-frequency"), json_f64(label.peak_frequency));
        summary.insert(format!("{tag}-dispersion"), json_f64(label.dispersion));
        let times: Vec<f64> = (0..bundle.n_rows()).map(|r| bundle.time_of_row(r)).collect();
        svg_series.push((tag, decimate(&times, &paths[0], 800)));
    }
    em.write(
        "fig-delay-oscillations.svg",
        svg_lines("Population mean under delayed inhibition", &svg_series).as_bytes(),
    )?;
    Ok(std::mem::replace(em, Emitter::new(&opts.out_dir)?)
        .finish("fig-delay-oscillations", seed, summary, passed))
}

fn fig_localized_chaos(opts: &RunOptions, em: &mut Emitter) -> Result<Manifest> {
    let seed = opts.seed.unwrap_or(1);
    let n = if opts.paper_scale { 4000 } else { 2000 };
    let mut config = localized_chaos_preset(n, seed);
    apply_overrides(&mut config, &opts.overrides)?;

    // stationary theory: SCS profile and the local phase of each population
    let state = solve_stationary(&config.params, 60.0)?;
    em.write_with("scs-profile.csv", |w| state.profile.write_csv(w))?;

    let weights = sample_weights(&config)?;
    let bundle = simulate_network(&config, &weights)?;
    let paths = write_mean_traces(em, "mean-traces.csv", &bundle)?;

    let mut summary = BTreeMap::new();
    let mut passed = true;
    let expected = [RegimeKind::Chaotic, RegimeKind::Stationary];
    let mut svg_series = Vec::new();
    let times: Vec<f64> = (0..bundle.n_rows()).map(|r| bundle.time_of_row(r)).collect();
    for pop in 0..2 {
        let label = regime_classify(&bundle, pop, (10.0, config.horizon), 1.0)?;
        let spec = config.params.sigmoids.get(pop, pop);
        let local = classify_local_phase(
            *config.params.sigma.get(pop, pop),
            spec.deriv(state.mean[pop]),
            config.params.theta[pop],
        );
        let agree = match local {
            Regime::Chaotic => label.kind == RegimeKind::Chaotic,
            Regime::StationaryZeroDisorderWidth => label.kind == RegimeKind::Stationary,
        };
        passed &= label.kind == expected[pop] && agree;
        summary.insert(format!("pop{}-regime", pop + 1), serde_json::Value::from(label.kind.to_string()));
        summary.insert(format!("pop{}-local-phase", pop + 1), serde_json::Value::from(local.to_string()));
        summary.insert(format!("pop{}-dispersion", pop + 1), json_f64(label.dispersion));
        summary.insert(format!("pop{}-c0", pop + 1), json_f64(state.c0[pop]));
        svg_series.push((format!("pop{}", pop + 1), decimate(&times, &paths[pop], 800)));
        // a few individual paths show the localization more directly
        let range = bundle.pop_range(pop);
        for k in 0..3.min(range.len()) {
            let neuron = range.start + k;
            let ys: Vec<f64> = (0..bundle.n_rows()).map(|r| bundle.value(r, neuron)).collect();
            svg_series.push((format!("pop{} unit {}", pop + 1, k + 1), decimate(&times, &ys, 800)));
        }
    }
    em.write(
        "fig-localized-chaos.svg",
        svg_lines("Chaos localized to population 1", &svg_series).as_bytes(),
    )?;
    Ok(std::mem::replace(em, Emitter::new(&opts.out_dir)?)
        .finish("fig-localized-chaos", seed, summary, passed))
}

fn fig_heterogeneity_oscillations(opts: &RunOptions, em: &mut Emitter) -> Result<Manifest> {
    let seed = opts.seed.unwrap_or(1);
    let n = if opts.paper_scale { 2000 } else { 1000 };
    let cases: [(f64, RegimeKind); 3] = [
        (0.9, RegimeKind::Stationary),
        (1.6, RegimeKind::Oscillatory),
        (3.5, RegimeKind::Chaotic),
    ];
    let mut summary = BTreeMap::new();
    let mut passed = true;
    let mut svg_series = Vec::new();
    for &(sigma, expected) in &cases {
        let mut config = heterogeneity_preset(sigma, n, seed);
        apply_overrides(&mut config, &opts.overrides)?;
        let weights = sample_weights(&config)?;
        let bundle = simulate_network(&config, &weights)?;
        let tag = format!("sigma{sigma}");
        let paths = write_mean_traces(em, &format!("mean-{tag}.csv"), &bundle)?;
        let window = (HETEROGENEITY_WINDOW.0, config.horizon.min(HETEROGENEITY_WINDOW.1));
        let label = regime_classify(&bundle, 1, window, 1.0)?;
        passed &= label.kind == expected;
        summary.insert(format!("{tag}-regime"), serde_json::Value::from(label.kind.to_string()));
        summary.insert(format!("{tag}-amplitude"), json_f64(label.amplitude));
        summary.insert(format!("{tag}-dispersion"), json_f64(label.dispersion));
        let times: Vec<f64> = (0..bundle.n_rows()).map(|r| bundle.time_of_row(r)).collect();
        svg_series.push((tag, decimate(&times, &paths[1], 800)));
    }
    em.write(
        "fig-heterogeneity-oscillations.svg",
        svg_lines("Population-2 mean across disorder levels", &svg_series).as_bytes(),
    )?;
    Ok(std::mem::replace(em, Emitter::new(&opts.out_dir)?)
        .finish("fig-heterogeneity-oscillations", seed, summary, passed))
}

fn custom_config(path: &Path, opts: &RunOptions, em: &mut Emitter) -> Result<Manifest> {
    let file = ConfigFile::load(path)?;
    let mut config = file.to_network_config()?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    apply_overrides(&mut config, &opts.overrides)?;
    let weights = sample_weights(&config)?;
    let bundle = simulate_network(&config, &weights)?;
    let paths = write_mean_traces(em, "mean-traces.csv", &bundle)?;
    let moments = solve_moments(&config.params, config.dt.max(0.02), config.horizon)?;
    em.write_with("moment-means.csv", |w| moments.write_means_csv(w))?;
    let mut summary = BTreeMap::new();
    for pop in 0..config.params.m {
        summary.insert(
            format!("pop{}-final-mean", pop + 1),
            json_f64(*paths[pop].last().unwrap()),
        );
        summary.insert(
            format!("pop{}-theory-final-mean", pop + 1),
            json_f64(moments.mean(pop, config.horizon)?),
        );
    }
    let name = path.file_stem().map_or_else(|| "custom".to_string(), |s| s.to_string_lossy().into_owned());
    Ok(std::mem::replace(em, Emitter::new(&opts.out_dir)?).finish(&name, config.seed, summary, true))
}
