//! Finite-N simulation of the delayed stochastic network with quenched
//! Gaussian synaptic disorder.
//!
//! Euler–Maruyama advance with delays snapped to grid nodes and read from
//! the stored trajectory (the whole path is kept, so delayed reads are
//! O(1) slices). All randomness is drawn from counter-style per-neuron
//! streams, so results are bitwise identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{InitialLaw, ModelParams};

/// Divergence sentinel: bounded sigmoids keep genuine solutions well below
/// this, so crossing it indicates a configuration error.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// splitmix64; used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn stream_seed(seed: u64, tag: u64, id: u64) -> u64 {
    mix(mix(seed ^ mix(tag)) ^ mix(id))
}

#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub params: ModelParams,
    pub n_per_pop: Vec<usize>,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let m = self.params.m;
        if self.n_per_pop.len() != m {
            return Err(Error::invalid("n_per_pop", format!("expected {m} entries")));
        }
        if self.n_per_pop.iter().any(|&n| n == 0) {
            return Err(Error::invalid("n_per_pop", "population sizes must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive"));
        }
        let min_theta = self.params.theta.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.dt >= min_theta / 10.0 {
            return Err(Error::invalid("dt", format!("must be < min theta / 10 = {}", min_theta / 10.0)));
        }
        for tau in &self.params.tau.data {
            let steps = tau / self.dt;
            if (steps - steps.round()).abs() > 1e-9 {
                return Err(Error::invalid("tau", format!("delay {tau} does not land on the dt = {} grid", self.dt)));
            }
        }
        Ok(())
    }

    pub fn n_total(&self) -> usize {
        self.n_per_pop.iter().sum()
    }

    pub fn delay_steps(&self, alpha: usize, gamma: usize) -> usize {
        (self.params.tau.get(alpha, gamma) / self.dt).round() as usize
    }

    pub fn history_steps(&self) -> usize {
        (self.params.max_delay() / self.dt).round() as usize
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn pop_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.params.m + 1);
        let mut acc = 0;
        off.push(0);
        for &n in &self.n_per_pop {
            acc += n;
            off.push(acc);
        }
        off
    }
}

/// Quenched synaptic weights, blocked by population pair. Block `(α, γ)`
/// holds `N_α × N_γ` entries row-major (post-synaptic index major). A block
/// with zero mean and zero disorder is not materialized.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    pub m: usize,
    pub n_per_pop: Vec<usize>,
    blocks: Vec<Option<Vec<f64>>>,
}

impl WeightMatrix {
    pub fn block(&self, alpha: usize, gamma: usize) -> Option<&[f64]> {
        self.blocks[alpha * self.m + gamma].as_deref()
    }

    /// Entry `J_{ij}` by local indices within the `(α, γ)` block.
    pub fn entry(&self, alpha: usize, gamma: usize, post: usize, pre: usize) -> f64 {
        match self.block(alpha, gamma) {
            Some(b) => b[post * self.n_per_pop[gamma] + pre],
            None => 0.0,
        }
    }

    pub fn block_mut(&mut self, alpha: usize, gamma: usize) -> Option<&mut Vec<f64>> {
        self.blocks[alpha * self.m + gamma].as_mut()
    }
}

/// Draw the quenched weights: block `(α, γ)` entries are i.i.d.
/// `N(J̄_{αγ}/N_γ, (σ_{αγ}/√N_γ)²)`, deterministic given the seed.
pub fn sample_weights(config: &NetworkConfig) -> Result<WeightMatrix> {
    config.validate()?;
    let m = config.params.m;
    let mut blocks = Vec::with_capacity(m * m);
    for a in 0..m {
        for g in 0..m {
            let jbar = *config.params.jbar.get(a, g);
            let sigma = *config.params.sigma.get(a, g);
            if jbar == 0.0 && sigma == 0.0 {
                blocks.push(None);
                continue;
            }
            let n_g = config.n_per_pop[g] as f64;
            let mean = jbar / n_g;
            let sd = sigma / n_g.sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, 0x57 + a as u64 * 0x1_0000 + g as u64, 0));
            let len = config.n_per_pop[a] * config.n_per_pop[g];
            let mut data = Vec::with_capacity(len);
            if sd == 0.0 {
                data.resize(len, mean);
            } else {
                for _ in 0..len {
                    let z: f64 = rng.sample(StandardNormal);
                    data.push(mean + sd * z);
                }
            }
            blocks.push(Some(data));
        }
    }
    Ok(WeightMatrix { m, n_per_pop: config.n_per_pop.clone(), blocks })
}

/// Simulated paths of all neurons on the uniform grid from `-τ` to `T`,
/// including the history window. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    pub dt: f64,
    /// Grid rows before t = 0.
    pub n_history: usize,
    /// Grid rows after t = 0 (so the grid has `n_history + n_steps + 1` rows).
    pub n_steps: usize,
    pub n_total: usize,
    /// Population boundaries: neuron `i` belongs to population `α` iff
    /// `pop_offsets[α] <= i < pop_offsets[α+1]`.
    pub pop_offsets: Vec<usize>,
    /// Row-major `[time][neuron]`.
    data: Vec<f64>,
}

impl TrajectoryBundle {
    /// Assembles a bundle from row-major samples (one row per grid time,
    /// `n_history` of them before t = 0). Useful for feeding externally
    /// produced paths to the validation routines.
    pub fn from_rows(
        dt: f64,
        n_history: usize,
        pop_offsets: Vec<usize>,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::invalid("dt", "time step must be positive"));
        }
        if pop_offsets.len() < 2 || pop_offsets[0] != 0 || pop_offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("pop_offsets", "offsets must start at 0 and strictly increase"));
        }
        let n_total = *pop_offsets.last().unwrap();
        if rows.len() <= n_history {
            return Err(Error::invalid("rows", "need at least one row at or after t = 0"));
        }
        if rows.iter().any(|r| r.len() != n_total) {
            return Err(Error::invalid("rows", "every row must have one entry per neuron"));
        }
        Ok(Self {
            dt,
            n_history,
            n_steps: rows.len() - n_history - 1,
            n_total,
            pop_offsets,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_history + self.n_steps + 1
    }

    pub fn time_of_row(&self, row: usize) -> f64 {
        (row as f64 - self.n_history as f64) * self.dt
    }

    /// Grid row for time `t`; errors when `t` is off-grid.
    pub fn row_of_time(&self, t: f64) -> Result<usize> {
        let r = t / self.dt + self.n_history as f64;
        let ri = r.round();
        if (r - ri).abs() > 1e-6 || ri < 0.0 || ri as usize >= self.n_rows() {
            return Err(Error::Domain(format!("time {t} is not on the grid")));
        }
        Ok(ri as usize)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_total..(row + 1) * self.n_total]
    }

    pub fn value(&self, row: usize, neuron: usize) -> f64 {
        self.data[row * self.n_total + neuron]
    }

    pub fn n_pops(&self) -> usize {
        self.pop_offsets.len() - 1
    }

    pub fn pop_range(&self, alpha: usize) -> std::ops::Range<usize> {
        self.pop_offsets[alpha]..self.pop_offsets[alpha + 1]
    }

    /// One row per grid time, one column per neuron; the header names each
    /// neuron's population.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "t")?;
        for alpha in 0..self.n_pops() {
            for i in self.pop_range(alpha) {
                write!(w, ",pop{}_n{}", alpha + 1, i - self.pop_offsets[alpha])?;
            }
        }
        writeln!(w)?;
        for r in 0..self.n_rows() {
            write!(w, "{}", format_sig(self.time_of_row(r)))?;
            for v in self.row(r) {
                write!(w, ",{}", format_sig(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub(crate) fn format_sig(v: f64) -> String {
    // shortest round-trip representation keeps CSVs byte-stable
    format!("{v}")
}

/// Simulate with the default noise-stream assignment (stream id = neuron
/// index).
pub fn simulate_network(config: &NetworkConfig, weights: &WeightMatrix) -> Result<TrajectoryBundle> {
    let ids: Vec<u64> = (0..config.n_total() as u64).collect();
    simulate_network_with_streams(config, weights, &ids)
}

/// Simulate with explicit per-neuron stream ids. The initial draw and the
/// per-step noise of neuron `i` depend only on `(seed, stream_ids[i])`, so
/// permuting neurons together with their streams and weight rows/columns
/// permutes the paths.
pub fn simulate_network_with_streams(
    config: &NetworkConfig,
    weights: &WeightMatrix,
    stream_ids: &[u64],
) -> Result<TrajectoryBundle> {
    config.validate()?;
    let m = config.params.m;
    let n = config.n_total();
    if stream_ids.len() != n {
        return Err(Error::invalid("stream_ids", format!("expected {n} entries")));
    }
    if weights.m != m || weights.n_per_pop != config.n_per_pop {
        return Err(Error::invalid("weights", "shape incompatible with config"));
    }
    let offsets = config.pop_offsets();
    let n_hist = config.history_steps();
    let n_steps = config.n_steps();
    let n_rows = n_hist + n_steps + 1;

    let mut rngs: Vec<ChaCha8Rng> = stream_ids
        .iter()
        .map(|&id| ChaCha8Rng::seed_from_u64(stream_seed(config.seed, 0x4e, id)))
        .collect();

    let mut data = vec![0.0f64; n_rows * n];
    // initial draws, held constant over the history window
    {
        let init = &config.params.init;
        let first: Vec<f64> = (0..n)
            .map(|i| {
                let alpha = pop_of(&offsets, i);
                match init {
                    InitialLaw::DeterministicConstant { values } => values[alpha],
                    InitialLaw::GaussianIid { mean, variance } => {
                        let z: f64 = rngs[i].sample(StandardNormal);
                        mean[alpha] + variance[alpha].sqrt() * z
                    }
                }
            })
            .collect();
        for r in 0..=n_hist {
            data[r * n..(r + 1) * n].copy_from_slice(&first);
        }
    }

    let sqrt_dt = config.dt.sqrt();
    let mut rates: Vec<Vec<f64>> = vec![Vec::new(); m * m];
    for k in 0..n_steps {
        let row = n_hist + k;
        let (past, future) = data.split_at_mut((row + 1) * n);
        let next = &mut future[..n];

        // firing rates per (post, pre) population pair, read at the delayed row
        for a in 0..m {
            for g in 0..m {
                if weights.block(a, g).is_none() {
                    continue;
                }
                let d = config.delay_steps(a, g);
                let src = &past[(row - d) * n + offsets[g]..(row - d) * n + offsets[g + 1]];
                let spec = config.params.sigmoids.get(a, g);
                let buf = &mut rates[a * m + g];
                buf.clear();
                buf.extend(src.iter().map(|&x| spec.eval(x)));
            }
        }

        let cur = &past[row * n..(row + 1) * n];
        let params = &config.params;
        let rates_ref = &rates;
        let offsets_ref = &offsets;
        next.par_iter_mut().zip(rngs.par_iter_mut()).enumerate().for_each(|(i, (out, rng))| {
            let alpha = pop_of(offsets_ref, i);
            let il = i - offsets_ref[alpha];
            let mut drift = -cur[i] / params.theta[alpha];
            for g in 0..m {
                if let Some(block) = weights.block(alpha, g) {
                    let ng = offsets_ref[g + 1] - offsets_ref[g];
                    let jrow = &block[il * ng..(il + 1) * ng];
                    let r = &rates_ref[alpha * m + g];
                    drift += dot(jrow, &r[..jrow.len()]);
                }
            }
            let lambda = params.lambda[alpha];
            let noise = if lambda > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                lambda * sqrt_dt * z
            } else {
                0.0
            };
            *out = cur[i] + config.dt * drift + noise;
        });

        if let Some((i, &v)) = next.iter().enumerate().find(|(_, v)| !v.is_finite() || v.abs() > DIVERGENCE_BOUND) {
            let _ = v;
            return Err(Error::SimulationDiverged { step: k + 1, time: (k + 1) as f64 * config.dt, neuron: i });
        }
    }

    Ok(TrajectoryBundle {
        dt: config.dt,
        n_history: n_hist,
        n_steps,
        n_total: n,
        pop_offsets: offsets,
        data,
    })
}

/// Dot product with four independent accumulators so the floating-point
/// additions pipeline instead of forming one serial dependency chain.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (qa, qb) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        s[0] += qa[0] * qb[0];
        s[1] += qa[1] * qb[1];
        s[2] += qa[2] * qb[2];
        s[3] += qa[3] * qb[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

fn pop_of(offsets: &[usize], i: usize) -> usize {
    // populations are few; linear scan is fine
    (0..offsets.len() - 1).find(|&a| i < offsets[a + 1]).expect("neuron index out of range")
}

/// Sample mean and unbiased sample variance of one population at a grid
/// time.
pub fn empirical_moments(bundle: &TrajectoryBundle, population: usize, t: f64) -> Result<(f64, f64)> {
    if population >= bundle.n_pops() {
        return Err(Error::Domain(format!("population {population} out of range")));
    }
    let range = bundle.pop_range(population);
    let n = range.len();
    if n == 0 {
        return Err(Error::Domain("population is empty".into()));
    }
    let row = bundle.row_of_time(t)?;
    let vals = &bundle.row(row)[range];
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        vals.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
    } else {
        0.0
    };
    Ok((mean, var))
}
