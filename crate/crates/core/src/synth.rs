//! Gaussian simulation designs and Monte Carlo benchmarks.
//!
//! Rows are drawn i.i.d. from `N(0, Σ(ρ))` with unit diagonal and constant
//! off-diagonal `ρ`, and `y = Xβ + ε` with `ε ~ N(0, σ²)`. The noise level is
//! either given directly or derived from the signal-to-noise ratio
//! `SNR = √(βᵀΣβ) / σ`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::baselines::{best_subset, lasso_cd, lasso_lambda_max, BEST_SUBSET_MAX_P};
use crate::data::{destandardize, Dataset, GramCache};
use crate::estimator::{default_grid, diagnostics, fit, log_grid, DEFAULT_GRID_RATIO};
use crate::linalg::{inf_norm, sym_inv_sqrt};
use crate::selection::{cross_validate, kfold_split, prepare, Method, Rule};
use crate::weights::{ols_coefficients, ols_weights_from_gram, WeightScheme, DEFAULT_PHI};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Snr(f64),
    Sigma(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign {
    pub n: usize,
    pub p: usize,
    pub p0: usize,
    pub rho: f64,
    /// Infinite when `σ = 0`.
    pub snr: f64,
    pub beta_true: DVector<f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl SimDesign {
    pub fn new(n: usize, rho: f64, beta_true: DVector<f64>, noise: Noise, seed: u64) -> Result<Self> {
        let p = beta_true.len();
        if n == 0 || p == 0 {
            return Err(Error::InvalidArgument("n and p must be positive".into()));
        }
        let lower = if p > 1 { -1.0 / (p as f64 - 1.0) } else { f64::NEG_INFINITY };
        if !(rho > lower && rho < 1.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let signal = beta_true.dot(&(correlation_matrix(p, rho) * &beta_true)).sqrt();
        let (sigma, snr) = match noise {
            Noise::Snr(snr) => {
                if !(snr > 0.0) {
                    return Err(Error::InvalidArgument(format!("SNR must be positive, got {snr}")));
                }
                (signal / snr, snr)
            }
            Noise::Sigma(sigma) => {
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return Err(Error::InvalidArgument(format!("σ must be finite and ≥ 0, got {sigma}")));
                }
                (sigma, if sigma == 0.0 { f64::INFINITY } else { signal / sigma })
            }
        };
        if !sigma.is_finite() {
            return Err(Error::InvalidArgument("noise level is not finite".into()));
        }
        let p0 = beta_true.iter().filter(|b| **b != 0.0).count();
        Ok(SimDesign {
            n,
            p,
            p0,
            rho,
            snr,
            beta_true,
            sigma,
            seed,
        })
    }

    /// Indices of the nonzero true coefficients.
    pub fn support(&self) -> Vec<usize> {
        (0..self.p).filter(|&i| self.beta_true[i] != 0.0).collect()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimDesign { seed, ..self.clone() }
    }
}

/// `(p0, p0 − 1, …, 1, 0, …, 0)` of length `p`.
pub fn paper_beta(p: usize, p0: usize) -> DVector<f64> {
    DVector::from_fn(p, |i, _| if i < p0 { (p0 - i) as f64 } else { 0.0 })
}

pub fn correlation_matrix(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: Dataset,
    pub beta: DVector<f64>,
    pub sigma: f64,
}

pub fn generate(d: &SimDesign) -> Result<Simulated> {
    let chol = correlation_matrix(d.p, d.rho)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
    let mut z = DMatrix::<f64>::zeros(d.n, d.p);
    for i in 0..d.n {
        for j in 0..d.p {
            z[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    let x: DMatrix<f64> = z * l.transpose();
    let mut y = &x * &d.beta_true;
    for i in 0..d.n {
        let e: f64 = StandardNormal.sample(&mut rng);
        y[i] += d.sigma * e;
    }
    let names = (1..=d.p).map(|j| format!("x{j}")).collect();
    Ok(Simulated {
        data: Dataset::new(y, x, names)?,
        beta: d.beta_true.clone(),
        sigma: d.sigma,
    })
}

/// `(1 − π^{-1/2} ξ^{-1} (n log p)^{-1/2} κ p^{-nξ²/κ²})^p`, clamped to
/// `[0, 1]`. NaN for arguments outside `n, ξ, κ > 0`, `p ≥ 2`.
pub fn theorem3_probability_bound(n: f64, p: f64, xi: f64, kappa: f64) -> f64 {
    if !(n > 0.0 && p >= 2.0 && xi > 0.0 && kappa > 0.0) {
        return f64::NAN;
    }
    let log_p = p.ln();
    let decay = (-n * xi * xi / (kappa * kappa) * log_p).exp();
    let inner = kappa / (std::f64::consts::PI.sqrt() * xi * (n * log_p).sqrt()) * decay;
    if inner >= 1.0 {
        return 0.0;
    }
    // (1 − inner)^p through ln_1p keeps precision when inner is tiny.
    (p * (-inner).ln_1p()).exp().clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchMethod {
    Lags,
    LassoCd,
    HardOracle,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Lags => "LAGS",
            BenchMethod::LassoCd => "Lasso",
            BenchMethod::HardOracle => "HardOracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub method: BenchMethod,
    pub nonzeros: usize,
    pub train_err: f64,
    pub test_err: f64,
    pub support_recovered: bool,
    pub l2_err_sq: f64,
    /// Selected λ, or the selected subset size for the oracle.
    pub tuning: f64,
}

pub const BENCH_CSV_HEADER: &str =
    "method,n,p,p0,rho,snr,seed,nonzeros,train_err,test_err,support_recovered,l2_err_sq";

impl BenchResult {
    pub fn csv_row(&self, d: &SimDesign) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.16e},{:.16e},{},{:.16e}",
            self.method.name(),
            d.n,
            d.p,
            d.p0,
            d.rho,
            d.snr,
            d.seed,
            self.nonzeros,
            self.train_err,
            self.test_err,
            self.support_recovered,
            self.l2_err_sq
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub grid_len: usize,
    pub rule: Rule,
    /// LAGS weights; `None` uses inverse OLS when the training set has more
    /// rows than predictors and inverse ridge otherwise.
    pub scheme: Option<WeightScheme>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            grid_len: 50,
            rule: Rule::MinError,
            scheme: None,
        }
    }
}

pub fn run_benchmark(
    d: &SimDesign,
    methods: &[BenchMethod],
    train_fraction: f64,
    cv_k: usize,
    seed: u64,
) -> Result<Vec<BenchResult>> {
    run_benchmark_with(d, methods, train_fraction, cv_k, seed, &BenchConfig::default())
}

fn mse(data: &Dataset, intercept: f64, beta: &DVector<f64>) -> f64 {
    let pred = data.x() * beta;
    data.y()
        .iter()
        .zip(pred.iter())
        .map(|(y, f)| (y - intercept - f).powi(2))
        .sum::<f64>()
        / data.n() as f64
}

/// Simulates `d`, splits the rows into train and test, tunes each method by
/// `cv_k`-fold cross-validation on the training rows (fold seed `seed`),
/// refits on the whole training set and evaluates on both parts.
pub fn run_benchmark_with(
    d: &SimDesign,
    methods: &[BenchMethod],
    train_fraction: f64,
    cv_k: usize,
    seed: u64,
    config: &BenchConfig,
) -> Result<Vec<BenchResult>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction must be in (0,1), got {train_fraction}")));
    }
    let sim = generate(d)?;
    let n_train = ((d.n as f64) * train_fraction).round() as usize;
    if n_train < 2 || n_train >= d.n {
        return Err(Error::InvalidArgument("split leaves an empty part".into()));
    }
    let train = sim.data.select_rows(&(0..n_train).collect::<Vec<_>>())?;
    let test = sim.data.select_rows(&(n_train..d.n).collect::<Vec<_>>())?;
    let support = d.support();

    let mut out = Vec::new();
    for &m in methods {
        let (intercept, beta, tuning) = match m {
            BenchMethod::Lags | BenchMethod::LassoCd => {
                let (method, scheme) = if m == BenchMethod::Lags {
                    let scheme = config.scheme.unwrap_or(if n_train > d.p {
                        WeightScheme::InverseOls
                    } else {
                        WeightScheme::InverseRidge(DEFAULT_PHI)
                    });
                    (Method::Lags, scheme)
                } else {
                    (Method::Lasso, WeightScheme::Uniform)
                };
                let prep = prepare(&train, scheme, method)?;
                let grid = if method == Method::Lags {
                    default_grid(&prep.gram, &prep.weights, config.grid_len, DEFAULT_GRID_RATIO)?
                } else {
                    log_grid(lasso_lambda_max(&prep.gram), DEFAULT_GRID_RATIO, config.grid_len)
                };
                let cv = cross_validate(&train, cv_k, &grid, scheme, method, config.rule, seed)?;
                let lambda = cv.chosen_lambda;
                let beta_s = if method == Method::Lags {
                    fit(&prep.gram, lambda, &prep.weights, None)?.beta
                } else {
                    lasso_cd(&prep.gram, lambda)?.beta
                };
                let (a, b) = destandardize(&beta_s, &prep.design);
                (a, b, lambda)
            }
            BenchMethod::HardOracle => {
                if d.p > BEST_SUBSET_MAX_P {
                    continue;
                }
                let size = oracle_subset_size(&train, cv_k, seed)?;
                let prep = prepare(&train, WeightScheme::Uniform, Method::Lasso)?;
                let beta_s = best_subset(&prep.gram, size)?.beta;
                let (a, b) = destandardize(&beta_s, &prep.design);
                (a, b, size as f64)
            }
        };
        let active: Vec<usize> = (0..d.p).filter(|&i| beta[i] != 0.0).collect();
        out.push(BenchResult {
            method: m,
            nonzeros: active.len(),
            train_err: mse(&train, intercept, &beta),
            test_err: mse(&test, intercept, &beta),
            support_recovered: active == support,
            l2_err_sq: (&beta - &sim.beta).norm_squared(),
            tuning,
        });
    }
    Ok(out)
}

/// Best-subset size with the smallest cross-validated error.
fn oracle_subset_size(train: &Dataset, k: usize, seed: u64) -> Result<usize> {
    let p = train.p();
    let folds = kfold_split(train.n(), k, seed)?;
    let mut err = vec![0.0; p + 1];
    for test in &folds {
        let rows: Vec<usize> = (0..train.n()).filter(|i| test.binary_search(i).is_err()).collect();
        let prep = prepare(&train.select_rows(&rows)?, WeightScheme::Uniform, Method::Lasso)?;
        let held = train.select_rows(test)?;
        for (size, e) in err.iter_mut().enumerate() {
            let beta_s = best_subset(&prep.gram, size)?.beta;
            let (a, b) = destandardize(&beta_s, &prep.design);
            *e += mse(&held, a, &b);
        }
    }
    Ok((0..=p).fold(0, |best, s| if err[s] < err[best] { s } else { best }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem3Replicate {
    pub seed: u64,
    /// `None` when the λ band was empty.
    pub lambda: Option<f64>,
    pub band: (f64, f64),
    pub support_recovered: bool,
    /// Largest deviation between the fit and the OLS refit on the true
    /// support, over the support.
    pub ols_deviation: f64,
    pub l2_err_sq: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem3Report {
    pub replicates: Vec<Theorem3Replicate>,
    /// Replicates with exact support recovery and OLS coefficients on it.
    pub successes: usize,
    pub frequency: f64,
    pub mean_l2_err_sq: f64,
    pub empty_bands: usize,
    /// `2ξ² p0 log p σ²`.
    pub l2_bound: f64,
    /// Successful replicates exceeding `l2_bound`.
    pub bound_violations: usize,
    /// Probability bound at the median κ over replicates.
    pub probability_bound: f64,
}

/// Samples used for the γ estimate in every replicate.
pub const GAMMA_SAMPLES: usize = 2000;

/// Tolerance for "equal to the OLS refit on the support".
pub const OLS_MATCH_TOL: f64 = 1e-8;

/// Monte Carlo check of the support-recovery theorem at finite size.
///
/// Each replicate fits the uncentered system `(XᵀX/n, Xᵀy/n)` of the
/// no-intercept model with inverse-OLS weights, at the geometric mean of
/// the band `ξ√(2 log p)σ‖C_n‖∞ ≤ λ ≤ (c − ξ)√(2 log p)σγ_n` (sampled γ_n).
pub fn monte_carlo_theorem3(d: &SimDesign, replicates: usize, xi: f64, c: f64) -> Result<Theorem3Report> {
    let p = d.p as f64;
    let scale = (2.0 * p.ln()).sqrt() * d.sigma;
    let support = d.support();
    let min_signal = support.iter().map(|&i| d.beta_true[i].abs()).fold(f64::INFINITY, f64::min);
    if support.is_empty() || support.len() == d.p {
        return Err(Error::Precondition("support must be a nonempty proper subset".into()));
    }
    if !(min_signal > c * scale) {
        return Err(Error::Precondition(format!(
            "smallest signal {min_signal} does not exceed c·√(2 log p)·σ = {}",
            c * scale
        )));
    }
    if d.n <= d.p {
        return Err(Error::Precondition("need n > p".into()));
    }
    if !(xi > 0.0 && c > xi) {
        return Err(Error::Precondition("need 0 < ξ < c".into()));
    }
    let mut root = ChaCha8Rng::seed_from_u64(d.seed);
    let seeds: Vec<u64> = (0..replicates).map(|_| root.random()).collect();
    let reps: Vec<Theorem3Replicate> = seeds
        .par_iter()
        .map(|&s| theorem3_replicate(&d.with_seed(s), &support, xi, c, scale))
        .collect::<Result<_>>()?;

    let l2_bound = 2.0 * xi * xi * support.len() as f64 * p.ln() * d.sigma * d.sigma;
    let ok = |r: &Theorem3Replicate| {
        r.lambda.is_some()
            && r.support_recovered
            && r.ols_deviation <= OLS_MATCH_TOL * (1.0 + min_signal.max(1.0))
    };
    let successes = reps.iter().filter(|r| ok(r)).count();
    let bound_violations = reps
        .iter()
        .filter(|r| ok(r) && r.l2_err_sq > l2_bound * (1.0 + 1e-12))
        .count();
    let empty_bands = reps.iter().filter(|r| r.lambda.is_none()).count();
    let mut kappas: Vec<f64> = reps.iter().map(|r| r.kappa).collect();
    kappas.sort_by(f64::total_cmp);
    let kappa = kappas.get(kappas.len() / 2).copied().unwrap_or(f64::NAN);
    Ok(Theorem3Report {
        successes,
        frequency: successes as f64 / replicates.max(1) as f64,
        mean_l2_err_sq: reps.iter().map(|r| r.l2_err_sq).sum::<f64>() / replicates.max(1) as f64,
        empty_bands,
        l2_bound,
        bound_violations,
        probability_bound: theorem3_probability_bound(d.n as f64, p, xi, kappa),
        replicates: reps,
    })
}

fn theorem3_replicate(d: &SimDesign, support: &[usize], xi: f64, c: f64, scale: f64) -> Result<Theorem3Replicate> {
    let sim = generate(d)?;
    let x = sim.data.x();
    let n = d.n as f64;
    let g = GramCache::from_parts(x.tr_mul(x) / n, x.tr_mul(sim.data.y()) / n)?;
    let kappa = sym_inv_sqrt(g.c_n()).map(|m| inf_norm(&m)).unwrap_or(f64::INFINITY);
    let w = ols_weights_from_gram(&g)?;
    let diag = diagnostics(&g, &w, support, GAMMA_SAMPLES, d.seed)?;
    let band = (xi * scale * diag.c_inf_norm, (c - xi) * scale * diag.gamma_estimate);
    let lambda = if band.0 <= band.1 { Some((band.0 * band.1).sqrt()) } else { None };

    let beta_hat = match lambda {
        Some(l) => fit(&g, l, &w, None)?.beta,
        None => ols_coefficients(&g)?,
    };
    let active: Vec<usize> = (0..d.p).filter(|&i| beta_hat[i] != 0.0).collect();
    let s0 = support.len();
    let css = DMatrix::from_fn(s0, s0, |a, b| g.c_n()[(support[a], support[b])]);
    let ds = DVector::from_fn(s0, |a, _| g.xty()[support[a]]);
    let refit = crate::linalg::solve_spd(&css, &ds).ok_or(Error::SingularC11)?;
    let ols_deviation = support
        .iter()
        .enumerate()
        .map(|(a, &i)| (beta_hat[i] - refit[a]).abs())
        .fold(0.0, f64::max);
    Ok(Theorem3Replicate {
        seed: d.seed,
        lambda,
        band,
        support_recovered: active == support,
        ols_deviation,
        l2_err_sq: (&beta_hat - &sim.beta).norm_squared(),
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigma_from_snr() {
        let d = SimDesign::new(10, 0.0, DVector::from_vec(vec![1.0, 0.0]), Noise::Snr(2.0), 1).unwrap();
        assert_abs_diff_eq!(d.sigma, 0.5, epsilon = 1e-15);
        assert_eq!(d.p0, 1);
        let d = SimDesign::new(10, 0.0, DVector::from_vec(vec![1.0, 0.0]), Noise::Sigma(0.0), 1).unwrap();
        assert!(d.snr.is_infinite());
        assert!(SimDesign::new(10, -0.6, paper_beta(3, 1), Noise::Snr(1.0), 1).is_err());
        assert!(SimDesign::new(10, 1.0, paper_beta(3, 1), Noise::Snr(1.0), 1).is_err());
    }

    #[test]
    fn paper_beta_pattern() {
        let b = paper_beta(40, 30);
        assert_eq!(b[0], 30.0);
        assert_eq!(b[29], 1.0);
        assert_eq!(b.iter().filter(|v| **v == 0.0).count(), 10);
    }

    #[test]
    fn generate_is_deterministic() {
        let d = SimDesign::new(20, 0.3, paper_beta(5, 2), Noise::Snr(3.0), 9).unwrap();
        let a = generate(&d).unwrap();
        let b = generate(&d).unwrap();
        assert_eq!(a.data, b.data);
        let c = generate(&d.with_seed(10)).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn probability_bound_behaviour() {
        assert!(theorem3_probability_bound(1e9, 10.0, 1.0, 1.0) >= 1.0 - 1e-9);
        let b: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&n| theorem3_probability_bound(n, 10.0, 0.1, 1.0))
            .collect();
        assert!(b[0] <= b[1] && b[1] <= b[2]);
        assert!(b[0] < b[2]);
        // Inner term ≥ 1 clamps to zero.
        assert_eq!(theorem3_probability_bound(1e-3, 2.0, 1e-3, 10.0), 0.0);
        assert!(theorem3_probability_bound(10.0, 1.0, 1.0, 1.0).is_nan());
    }

    #[test]
    fn theorem3_preconditions() {
        let d = SimDesign::new(50, 0.0, paper_beta(5, 2), Noise::Sigma(1.0), 1).unwrap();
        assert!(matches!(monte_carlo_theorem3(&d, 2, 1.0, 4.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn theorem3_noiseless() {
        let beta = DVector::from_vec(vec![3.0, -2.0, 0.0, 0.0, 0.0]);
        let d = SimDesign::new(40, 0.0, beta, Noise::Sigma(0.0), 3).unwrap();
        let r = monte_carlo_theorem3(&d, 5, 1.0, 4.0).unwrap();
        assert_eq!(r.successes, 5);
        assert!(r.mean_l2_err_sq <= 1e-20);
    }

    #[test]
    fn csv_row_schema() {
        let d = SimDesign::new(20, 0.2, paper_beta(4, 2), Noise::Snr(2.0), 5).unwrap();
        let r = BenchResult {
            method: BenchMethod::Lags,
            nonzeros: 2,
            train_err: 1.0,
            test_err: 2.0,
            support_recovered: true,
            l2_err_sq: 0.5,
            tuning: 0.1,
        };
        let row = r.csv_row(&d);
        assert_eq!(row.split(',').count(), BENCH_CSV_HEADER.split(',').count());
        assert!(row.starts_with("LAGS,20,4,2,0.2,"));
    }
}
