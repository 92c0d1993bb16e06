//! Property-based tests for the library's stated invariants: kernel
//! bounds, monotonicity, Lipschitz inheritance, symmetry and
//! factorization of the Gaussian expectations; covariance structure of
//! moment solutions; and calibration of the statistical tests.

use meanfield::gaussian::{gauss_expect_s, gauss_expect_ss, gauss_expect_ss_with, BivariateGaussian, GaussHermite};
use meanfield::moments::solve_moments;
use meanfield::params::{InitialLaw, ModelParams, PopMatrix};
use meanfield::sigmoid::{SigmoidFamily, SigmoidSpec};
use meanfield::stats::{chi2_independence, ks_gaussian};
use proptest::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn families() -> impl Strategy<Value = SigmoidFamily> {
    prop_oneof![Just(SigmoidFamily::GaussianCdf), Just(SigmoidFamily::CenteredErf)]
}

fn specs() -> impl Strategy<Value = SigmoidSpec> {
    (families(), 0.05f64..6.0).prop_map(|(f, g)| SigmoidSpec::new(f, g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expect_s_is_increasing_in_mu(
        spec in specs(),
        mu in -8.0f64..8.0,
        dmu in 1e-3f64..4.0,
        v in 0.0f64..9.0,
    ) {
        let lo = gauss_expect_s(&spec, mu, v).unwrap();
        let hi = gauss_expect_s(&spec, mu + dmu, v).unwrap();
        prop_assert!(hi >= lo, "decreasing: S({mu}) = {lo}, S({}) = {hi}", mu + dmu);
        // strictness is only observable away from floating-point saturation
        let (rlo, rhi) = spec.range();
        if lo > rlo + 1e-12 && hi < rhi - 1e-12 {
            prop_assert!(hi > lo, "not strictly increasing at mu = {mu}");
        }
    }

    #[test]
    fn expect_s_respects_the_sigmoid_range(
        spec in specs(),
        mu in -10.0f64..10.0,
        v in 0.0f64..10.0,
    ) {
        let (lo, hi) = spec.range();
        let s = gauss_expect_s(&spec, mu, v).unwrap();
        prop_assert!(s >= lo && s <= hi, "{s} outside [{lo}, {hi}]");
    }

    #[test]
    fn expect_s_inherits_the_sigmoid_lipschitz_constant(
        spec in specs(),
        mu1 in -8.0f64..8.0,
        mu2 in -8.0f64..8.0,
        v in 0.0f64..9.0,
    ) {
        let lip = spec.gain / (2.0 * std::f64::consts::PI).sqrt();
        let s1 = gauss_expect_s(&spec, mu1, v).unwrap();
        let s2 = gauss_expect_s(&spec, mu2, v).unwrap();
        prop_assert!((s1 - s2).abs() <= lip * (mu1 - mu2).abs() + 1e-12);
    }

    // 64-node Gauss-Hermite only resolves the closed form to 1e-8 for
    // moderate gains; g = 0.8 is the measured ceiling on the full grid
    #[test]
    fn expect_s_matches_quadrature(
        spec in (families(), 0.05f64..0.8).prop_map(|(f, g)| SigmoidSpec::new(f, g).unwrap()),
        mu in -10.0f64..10.0,
        v in 0.0f64..10.0,
    ) {
        let closed = gauss_expect_s(&spec, mu, v).unwrap();
        let rule = GaussHermite::new(64);
        let quad = rule.expect(mu, v, |x| spec.eval(x));
        prop_assert!((closed - quad).abs() <= 1e-8, "closed {closed} vs quad {quad}");
    }

    // swap symmetry and factorization hold only to quadrature accuracy,
    // so stay in the gain range where 32/64-node Gauss-Hermite is sharp
    #[test]
    fn expect_ss_is_swap_symmetric(
        spec in (families(), 0.05f64..0.8).prop_map(|(f, g)| SigmoidSpec::new(f, g).unwrap()),
        m1 in -5.0f64..5.0,
        m2 in -5.0f64..5.0,
        c11 in 0.01f64..6.0,
        c22 in 0.01f64..6.0,
        rho in -0.95f64..0.95,
    ) {
        let c12 = rho * (c11 * c22).sqrt();
        let rule = GaussHermite::new(64);
        let a = gauss_expect_ss_with(&spec, &BivariateGaussian::new((m1, m2), (c11, c12, c22)).unwrap(), &rule).unwrap();
        let b = gauss_expect_ss_with(&spec, &BivariateGaussian::new((m2, m1), (c22, c12, c11)).unwrap(), &rule).unwrap();
        prop_assert!((a - b).abs() <= 1e-10, "swap asymmetry: {a} vs {b}");
    }

    #[test]
    fn expect_ss_factorizes_when_uncorrelated(
        spec in (families(), 0.05f64..0.8).prop_map(|(f, g)| SigmoidSpec::new(f, g).unwrap()),
        m1 in -5.0f64..5.0,
        m2 in -5.0f64..5.0,
        c11 in 0.0f64..6.0,
        c22 in 0.0f64..6.0,
    ) {
        let rule = GaussHermite::new(64);
        let joint = gauss_expect_ss_with(&spec, &BivariateGaussian::new((m1, m2), (c11, 0.0, c22)).unwrap(), &rule).unwrap();
        let product = gauss_expect_s(&spec, m1, c11).unwrap() * gauss_expect_s(&spec, m2, c22).unwrap();
        prop_assert!((joint - product).abs() <= 1e-9, "joint {joint} vs product {product}");
    }

    #[test]
    fn expect_ss_respects_the_product_bounds(
        spec in specs(),
        m1 in -5.0f64..5.0,
        m2 in -5.0f64..5.0,
        c11 in 0.01f64..6.0,
        c22 in 0.01f64..6.0,
        rho in -0.95f64..0.95,
    ) {
        let c12 = rho * (c11 * c22).sqrt();
        let ss = gauss_expect_ss(&spec, &BivariateGaussian::new((m1, m2), (c11, c12, c22)).unwrap()).unwrap();
        let (lo, hi) = spec.range();
        let bound = lo.abs().max(hi.abs());
        prop_assert!(ss.abs() <= bound * bound + 1e-12);
    }

    #[test]
    fn sigmoid_eval_is_monotone_and_bounded(
        spec in specs(),
        x in -20.0f64..20.0,
        dx in 1e-6f64..5.0,
    ) {
        let (lo, hi) = spec.range();
        let a = spec.eval(x);
        let b = spec.eval(x + dx);
        prop_assert!(a >= lo && a <= hi);
        prop_assert!(b >= a);
    }
}

proptest! {
    // moment solutions are expensive; fewer cases suffice for structure
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn covariance_satisfies_cauchy_schwarz(
        j in -2.0f64..2.0,
        sigma in 0.0f64..1.5,
        lambda in 0.0f64..1.0,
        gain in 0.2f64..3.0,
        family in families(),
    ) {
        let params = ModelParams {
            m: 1,
            theta: vec![1.0],
            lambda: vec![lambda],
            jbar: PopMatrix::new(1, vec![j]).unwrap(),
            sigma: PopMatrix::filled(1, sigma),
            tau: PopMatrix::filled(1, 0.0),
            sigmoids: PopMatrix::filled(1, SigmoidSpec::new(family, gain).unwrap()),
            init: InitialLaw::GaussianIid { mean: vec![0.3], variance: vec![0.5] },
        };
        let sol = solve_moments(&params, 0.05, 3.0).unwrap();
        let n = 30;
        for i in 0..=n {
            for k in 0..=i {
                let cii = sol.covariance_at_rows(0, i, i);
                let ckk = sol.covariance_at_rows(0, k, k);
                let cik = sol.covariance_at_rows(0, i, k);
                prop_assert!(
                    cik.abs() <= (cii * ckk).sqrt() + 1e-10,
                    "C-S violated at ({i},{k}): |{cik}| > sqrt({cii}*{ckk})"
                );
            }
        }
    }
}

/// Under the null, both tests' p-values are approximately uniform: the KS
/// distance of the p-value sample to Uniform(0,1) stays below 0.1 at 200
/// repetitions.
#[test]
fn p_values_are_uniform_under_the_null() {
    let reps = 200;
    let mut ks_rng = ChaCha8Rng::seed_from_u64(9);
    let mut chi2_rng = ChaCha8Rng::seed_from_u64(9);
    let mut ks_ps = Vec::with_capacity(reps);
    let mut chi2_ps = Vec::with_capacity(reps);
    for _ in 0..reps {
        let samples: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut ks_rng)).collect();
        ks_ps.push(ks_gaussian(&samples, 0.0, 1.0, 0.05).unwrap().p_value);
        let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut chi2_rng)).collect();
        let y: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut chi2_rng)).collect();
        chi2_ps.push(chi2_independence(&x, &y, 4, 0.05).unwrap().p_value);
    }
    for (name, mut ps) in [("ks", ks_ps), ("chi2", chi2_ps)] {
        ps.sort_by(|a, b| a.total_cmp(b));
        let n = ps.len() as f64;
        let dist = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let lo = i as f64 / n;
                let hi = (i + 1) as f64 / n;
                (p - lo).abs().max((p - hi).abs())
            })
            .fold(0.0f64, f64::max);
        assert!(dist <= 0.1, "{name} p-value sample is not uniform: KS distance {dist}");
    }
}

/// Weights and trajectories depend only on (config, seed): resampling with
/// the same seed reproduces identical paths, and a different seed does not.
#[test]
fn simulation_is_seed_deterministic() {
    use meanfield::netsim::{sample_weights, simulate_network, NetworkConfig};
    let params = ModelParams {
        m: 2,
        theta: vec![1.0, 1.0],
        lambda: vec![0.4, 0.4],
        jbar: PopMatrix::new(2, vec![1.0, -0.5, 0.5, -1.0]).unwrap(),
        sigma: PopMatrix::filled(2, 0.7),
        tau: PopMatrix::filled(2, 0.1),
        sigmoids: PopMatrix::filled(2, SigmoidSpec::gaussian_cdf(1.0).unwrap()),
        init: InitialLaw::GaussianIid { mean: vec![0.0, 0.0], variance: vec![1.0, 1.0] },
    };
    let config = NetworkConfig { params, n_per_pop: vec![40, 40], dt: 0.05, horizon: 1.0, seed: 11 };
    let w1 = sample_weights(&config).unwrap();
    let w2 = sample_weights(&config).unwrap();
    assert_eq!(w1.block(0, 1).unwrap(), w2.block(0, 1).unwrap());
    let b1 = simulate_network(&config, &w1).unwrap();
    let b2 = simulate_network(&config, &w2).unwrap();
    for r in 0..b1.n_rows() {
        assert_eq!(b1.row(r), b2.row(r), "row {r} differs between identical runs");
    }
    let other = NetworkConfig { seed: 12, ..config };
    let b3 = simulate_network(&other, &sample_weights(&other).unwrap()).unwrap();
    let last = b1.n_rows() - 1;
    assert_ne!(b1.row(last), b3.row(last), "different seeds gave identical paths");
}

/// Weak convergence order of the Euler scheme: for the uncoupled OU case
/// the empirical-variance error decreases roughly linearly in dt.
#[test]
fn ou_variance_error_shrinks_linearly_in_dt() {
    use meanfield::netsim::{empirical_moments, sample_weights, simulate_network, NetworkConfig};
    let t_end = 2.0f64;
    let theta = 1.0f64;
    let lambda = 1.0f64;
    let analytic = theta * lambda * lambda / 2.0 * (1.0 - (-2.0 * t_end / theta).exp());
    let mut errors = Vec::new();
    for dt in [0.02, 0.01, 0.005] {
        let params = ModelParams {
            m: 1,
            theta: vec![theta],
            lambda: vec![lambda],
            jbar: PopMatrix::new(1, vec![0.0]).unwrap(),
            sigma: PopMatrix::filled(1, 0.0),
            tau: PopMatrix::filled(1, 0.0),
            sigmoids: PopMatrix::filled(1, SigmoidSpec::gaussian_cdf(1.0).unwrap()),
            init: InitialLaw::DeterministicConstant { values: vec![0.0] },
        };
        let config = NetworkConfig { params, n_per_pop: vec![4000], dt, horizon: t_end, seed: 5 };
        let weights = sample_weights(&config).unwrap();
        let bundle = simulate_network(&config, &weights).unwrap();
        let (_, var) = empirical_moments(&bundle, 0, t_end).unwrap();
        errors.push((var - analytic).abs());
    }
    // halving dt should roughly halve the bias; allow generous slack for
    // the Monte Carlo floor
    assert!(
        errors[2] < errors[0] * 0.6 + 0.002,
        "no first-order decrease: errors {errors:?}"
    );
}

/// A fresh draw of model parameters keeps the mean-field Gram matrix PSD
/// on random 6-point grid subsets (acceptance tolerance -1e-8 * trace).
#[test]
fn gram_matrices_stay_psd_on_random_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for draw in 0..10 {
        let j: f64 = rng.gen_range(-1.5..1.5);
        let sigma: f64 = rng.gen_range(0.0..1.2);
        let lambda: f64 = rng.gen_range(0.0..0.8);
        let gain: f64 = rng.gen_range(0.3..2.5);
        let params = ModelParams {
            m: 1,
            theta: vec![1.0],
            lambda: vec![lambda],
            jbar: PopMatrix::new(1, vec![j]).unwrap(),
            sigma: PopMatrix::filled(1, sigma),
            tau: PopMatrix::filled(1, 0.0),
            sigmoids: PopMatrix::filled(1, SigmoidSpec::gaussian_cdf(gain).unwrap()),
            init: InitialLaw::GaussianIid { mean: vec![0.0], variance: vec![0.4] },
        };
        let sol = solve_moments(&params, 0.05, 3.0).unwrap();
        let rows = 61usize;
        for _ in 0..5 {
            let mut idx: Vec<usize> = (0..6).map(|_| rng.gen_range(0..rows)).collect();
            idx.sort_unstable();
            idx.dedup();
            let k = idx.len();
            let mut gram = vec![0.0f64; k * k];
            for a in 0..k {
                for b in 0..k {
                    gram[a * k + b] = sol.covariance_at_rows(0, idx[a], idx[b]);
                }
            }
            let trace: f64 = (0..k).map(|a| gram[a * k + a]).sum();
            let min_eig = min_eigenvalue(&gram, k);
            assert!(
                min_eig >= -1e-8 * trace.max(1e-12),
                "draw {draw}: min eigenvalue {min_eig} < -1e-8 * trace {trace}"
            );
        }
    }
}

/// Smallest eigenvalue of a small symmetric matrix via Jacobi rotations.
fn min_eigenvalue(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    for _ in 0..100 {
        let mut off = 0.0;
        let (mut p, mut q) = (0, 1);
        for i in 0..n {
            for j in (i + 1)..n {
                if m[i * n + j].abs() > off {
                    off = m[i * n + j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if off < 1e-14 || n < 2 {
            break;
        }
        let app = m[p * n + p];
        let aqq = m[q * n + q];
        let apq = m[p * n + q];
        let phi = 0.5 * (2.0 * apq).atan2(aqq - app);
        let (s, c) = phi.sin_cos();
        for k in 0..n {
            let akp = m[k * n + p];
            let akq = m[k * n + q];
            m[k * n + p] = c * akp - s * akq;
            m[k * n + q] = s * akp + c * akq;
        }
        for k in 0..n {
            let apk = m[p * n + k];
            let aqk = m[q * n + k];
            m[p * n + k] = c * apk - s * aqk;
            m[q * n + k] = s * apk + c * aqk;
        }
    }
    (0..n).map(|i| m[i * n + i]).fold(f64::INFINITY, f64::min)
}
