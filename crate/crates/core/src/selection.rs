//! K-fold cross-validation over λ grids and λ selection rules.
//!
//! Each fold standardizes its own training rows and recomputes the penalty
//! weights from them, so nothing about a held-out row reaches the model
//! that predicts it.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::lasso_cd_warm;
use crate::data::{destandardize, gram, standardize, Dataset, GramCache, StandardizedDesign};
use crate::estimator::{fit, weighted_dantzig};
use crate::simplex::Basis;
use crate::weights::{compute, WeightScheme, WeightVector};
use crate::{Error, Result};

/// Default fraction for [`Rule::FractionSe`].
pub const DEFAULT_SE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    MinError,
    OneSe,
    FractionSe(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Lags,
    Lasso,
    WeightedDantzig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub lambdas: Vec<f64>,
    /// Mean held-out squared error; NaN where every fold failed.
    pub mean_err: Vec<f64>,
    pub se_err: Vec<f64>,
    /// Active-set size of the full-data fit (0 if it failed).
    pub nonzeros: Vec<usize>,
    pub chosen_lambda: f64,
    pub rule: Rule,
    /// Number of (fold, λ) fits that failed and were left out of the means.
    pub failed_fits: usize,
}

/// Splits `0..n` into `k` shuffled folds whose sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::BadK { k, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Standardized design, Gram cache and weights of one training set.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub design: StandardizedDesign,
    pub gram: GramCache,
    pub weights: WeightVector,
}

pub fn prepare(d: &Dataset, scheme: WeightScheme, method: Method) -> Result<Prepared> {
    let design = standardize(d)?;
    let gram = gram(&design);
    let weights = match method {
        Method::Lasso => WeightVector::uniform(d.p()),
        _ => compute(scheme, &design)?,
    };
    Ok(Prepared { design, gram, weights })
}

/// Standardized-scale coefficients at every grid value, in grid order.
/// LAGS fits warm-start from the previous grid point, the Lasso from the
/// previous coefficients.
pub fn fit_grid(prep: &Prepared, grid: &[f64], method: Method) -> Vec<Result<DVector<f64>>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut basis: Option<Basis> = None;
    let mut start = DVector::zeros(prep.gram.p());
    for &lambda in grid {
        let r = match method {
            Method::Lags => fit(&prep.gram, lambda, &prep.weights, basis.as_ref()).map(|f| {
                if f.basis.is_some() {
                    basis = f.basis;
                }
                f.beta
            }),
            Method::Lasso => lasso_cd_warm(&prep.gram, lambda, &start).map(|f| {
                start = f.beta.clone();
                f.beta
            }),
            Method::WeightedDantzig => weighted_dantzig(&prep.gram, lambda, &prep.weights).map(|f| f.beta),
        };
        out.push(r);
    }
    out
}

/// Raw-scale models trained on one fold's training rows.
#[derive(Debug, Clone)]
pub struct FoldModel {
    /// `(intercept, β)` per grid value; `None` where the fit failed.
    pub models: Vec<Option<(f64, DVector<f64>)>>,
}

pub fn train_fold(d: &Dataset, train: &[usize], grid: &[f64], scheme: WeightScheme, method: Method) -> Result<FoldModel> {
    let prep = prepare(&d.select_rows(train)?, scheme, method)?;
    let models = fit_grid(&prep, grid, method)
        .into_iter()
        .map(|r| r.ok().map(|b| destandardize(&b, &prep.design)))
        .collect();
    Ok(FoldModel { models })
}

fn mse(d: &Dataset, rows: &[usize], intercept: f64, beta: &DVector<f64>) -> f64 {
    let x = d.x();
    let y = d.y();
    let sum: f64 = rows
        .iter()
        .map(|&i| {
            let pred = intercept + x.row(i).transpose().dot(beta);
            (y[i] - pred).powi(2)
        })
        .sum();
    sum / rows.len() as f64
}

pub fn cross_validate(
    d: &Dataset,
    k: usize,
    grid: &[f64],
    scheme: WeightScheme,
    method: Method,
    rule: Rule,
    seed: u64,
) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty λ grid".into()));
    }
    if grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("grid must be positive and strictly descending".into()));
    }
    let folds = kfold_split(d.n(), k, seed)?;
    let fold_errors: Vec<Vec<Option<f64>>> = folds
        .par_iter()
        .map(|test| {
            let train: Vec<usize> = (0..d.n()).filter(|i| test.binary_search(i).is_err()).collect();
            match train_fold(d, &train, grid, scheme, method) {
                Ok(m) => m
                    .models
                    .iter()
                    .map(|m| m.as_ref().map(|(a, b)| mse(d, test, *a, b)))
                    .collect(),
                Err(_) => vec![None; grid.len()],
            }
        })
        .collect();

    let mut mean_err = Vec::with_capacity(grid.len());
    let mut se_err = Vec::with_capacity(grid.len());
    let mut failed_fits = 0;
    for j in 0..grid.len() {
        let errs: Vec<f64> = fold_errors.iter().filter_map(|f| f[j]).collect();
        failed_fits += k - errs.len();
        let m = errs.len() as f64;
        if errs.is_empty() {
            mean_err.push(f64::NAN);
            se_err.push(f64::NAN);
            continue;
        }
        let mean = errs.iter().sum::<f64>() / m;
        let var = if errs.len() > 1 {
            errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        mean_err.push(mean);
        se_err.push((var / m).sqrt());
    }

    let nonzeros = match prepare(d, scheme, method) {
        Ok(prep) => fit_grid(&prep, grid, method)
            .into_iter()
            .map(|r| r.map(|b| b.iter().filter(|v| **v != 0.0).count()).unwrap_or(0))
            .collect(),
        Err(_) => vec![0; grid.len()],
    };

    let mut report = CvReport {
        lambdas: grid.to_vec(),
        mean_err,
        se_err,
        nonzeros,
        chosen_lambda: grid[0],
        rule,
        failed_fits,
    };
    report.chosen_lambda = select_lambda(&report, rule);
    Ok(report)
}

/// Largest λ whose mean error is within `f · se` of the minimum, where `se`
/// is the standard error at the minimizing λ (`f = 0` for MinError,
/// `f = 1` for OneSe). Grid points without a mean error are skipped.
pub fn select_lambda(r: &CvReport, rule: Rule) -> f64 {
    let f = match rule {
        Rule::MinError => 0.0,
        Rule::OneSe => 1.0,
        Rule::FractionSe(f) => f.max(0.0),
    };
    let valid: Vec<usize> = (0..r.lambdas.len()).filter(|&i| r.mean_err[i].is_finite()).collect();
    let Some(&first) = valid.first() else {
        return r.lambdas[0];
    };
    let mut best = first;
    for &i in &valid {
        let (m, mb) = (r.mean_err[i], r.mean_err[best]);
        if m < mb || (m == mb && r.lambdas[i] > r.lambdas[best]) {
            best = i;
        }
    }
    let se = if r.se_err[best].is_finite() { r.se_err[best] } else { 0.0 };
    let threshold = r.mean_err[best] + f * se;
    valid
        .iter()
        .filter(|&&i| r.mean_err[i] <= threshold)
        .map(|&i| r.lambdas[i])
        .fold(r.lambdas[best], f64::max)
}
