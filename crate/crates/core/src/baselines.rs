//! Reference estimators: orthonormal thresholding operators, Lasso by
//! coordinate descent, OLS, ridge and exhaustive best-subset OLS.
//!
//! Everything works in the scaled Gram units of [`GramCache`], so the Lasso
//! criterion is `½ βᵀC_nβ − dᵀβ + λ‖β‖₁` and its stationarity conditions
//! read `|dⱼ − (C_nβ)ⱼ| = λ` on the active set.

use nalgebra::{DMatrix, DVector};

use crate::data::GramCache;
use crate::linalg::solve_spd;
use crate::weights::{ols_coefficients, ridge_coefficients};
use crate::{Error, Result};

pub const LASSO_MAX_SWEEPS: usize = 100_000;
const LASSO_TOL: f64 = 1e-8;
const LASSO_KKT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineMethod {
    HardOrtho,
    SoftOrtho,
    LassoCd,
    Ols,
    Ridge(f64),
    BestSubset(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub beta: DVector<f64>,
    pub method: BaselineMethod,
    pub lambda: Option<f64>,
    /// Coordinate-descent sweeps (zero for closed forms).
    pub sweeps: usize,
}

impl BaselineFit {
    pub fn nonzeros(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

/// `βⱼ^o · 1(|βⱼ^o| ≥ λ)`; the boundary is kept.
pub fn hard_threshold_ortho(beta_o: &DVector<f64>, lambda: f64) -> DVector<f64> {
    beta_o.map(|b| if b.abs() >= lambda { b } else { 0.0 })
}

/// `sign(βⱼ^o)(|βⱼ^o| − λ)₊`.
pub fn soft_threshold_ortho(beta_o: &DVector<f64>, lambda: f64) -> DVector<f64> {
    beta_o.map(|b| soft(b, lambda))
}

fn soft(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// `½ βᵀC_nβ − dᵀβ + λ‖β‖₁`.
pub fn lasso_objective(g: &GramCache, beta: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * beta.dot(&(g.c_n() * beta)) - g.xty().dot(beta) + lambda * beta.lp_norm(1)
}

/// Largest violation of the Lasso stationarity conditions.
pub fn kkt_residual(g: &GramCache, beta: &DVector<f64>, lambda: f64) -> f64 {
    let grad = g.gradient(beta);
    grad.iter()
        .zip(beta.iter())
        .map(|(&gj, &bj)| {
            if bj != 0.0 {
                (gj - lambda * bj.signum()).abs()
            } else {
                (gj.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub fn lasso_cd(g: &GramCache, lambda: f64) -> Result<BaselineFit> {
    lasso_cd_warm(g, lambda, &DVector::zeros(g.p()))
}

/// Cyclic coordinate descent started from `start`.
pub fn lasso_cd_warm(g: &GramCache, lambda: f64, start: &DVector<f64>) -> Result<BaselineFit> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch("Lasso needs a square Gram matrix".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite and ≥ 0, got {lambda}")));
    }
    if start.len() != g.p() {
        return Err(Error::DimensionMismatch("start vector length".into()));
    }
    let c = g.c_n();
    let p = g.p();
    let mut beta = start.clone();
    let mut grad = g.gradient(&beta);
    for sweep in 1..=LASSO_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let cjj = c[(j, j)];
            let old = beta[j];
            let new = if cjj > 0.0 { soft(grad[j] + cjj * old, lambda) / cjj } else { 0.0 };
            let delta = new - old;
            if delta != 0.0 {
                beta[j] = new;
                grad.axpy(-delta, &c.column(j), 1.0);
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change <= LASSO_TOL {
            // Refresh the incrementally updated gradient before the final check.
            grad = g.gradient(&beta);
            if kkt_residual(g, &beta, lambda) <= LASSO_KKT_TOL {
                return Ok(BaselineFit {
                    beta,
                    method: BaselineMethod::LassoCd,
                    lambda: Some(lambda),
                    sweeps: sweep,
                });
            }
        }
    }
    Err(Error::MaxIterations(LASSO_MAX_SWEEPS))
}

/// Lasso fits along a grid, each warm-started from the previous one.
pub fn lasso_path(g: &GramCache, lambdas: &[f64]) -> Result<Vec<BaselineFit>> {
    let mut start = DVector::zeros(g.p());
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let f = lasso_cd_warm(g, lambda, &start)?;
        start = f.beta.clone();
        out.push(f);
    }
    Ok(out)
}

/// Smallest λ with an all-zero Lasso fit, `‖d‖∞`.
pub fn lasso_lambda_max(g: &GramCache) -> f64 {
    g.xty().amax()
}

pub fn ols_fit(g: &GramCache) -> Result<BaselineFit> {
    Ok(BaselineFit {
        beta: ols_coefficients(g)?,
        method: BaselineMethod::Ols,
        lambda: None,
        sweeps: 0,
    })
}

pub fn ridge_fit(g: &GramCache, phi: f64) -> Result<BaselineFit> {
    Ok(BaselineFit {
        beta: ridge_coefficients(g, phi)?,
        method: BaselineMethod::Ridge(phi),
        lambda: None,
        sweeps: 0,
    })
}

/// Largest `p` accepted by [`best_subset`].
pub const BEST_SUBSET_MAX_P: usize = 15;

/// OLS on the size-`k` subset with the smallest training residual sum of
/// squares, found by exhaustive search.
///
/// In Gram units the residual sum of squares of subset `S` is a constant
/// minus `d_Sᵀ C_SS⁻¹ d_S`, so the search maximizes that quadratic form.
pub fn best_subset(g: &GramCache, k: usize) -> Result<BaselineFit> {
    let p = g.p();
    if !g.is_square() {
        return Err(Error::DimensionMismatch("best subset needs a square Gram matrix".into()));
    }
    if p > BEST_SUBSET_MAX_P {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search limited to p ≤ {BEST_SUBSET_MAX_P}, got {p}"
        )));
    }
    if k > p {
        return Err(Error::InvalidArgument(format!("subset size {k} exceeds p = {p}")));
    }
    let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
    for mask in 0u32..(1u32 << p) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let subset: Vec<usize> = (0..p).filter(|&j| mask & (1 << j) != 0).collect();
        let css = DMatrix::from_fn(k, k, |a, b| g.c_n()[(subset[a], subset[b])]);
        let ds = DVector::from_fn(k, |a, _| g.xty()[subset[a]]);
        let Some(bs) = (if k == 0 { Some(DVector::zeros(0)) } else { solve_spd(&css, &ds) }) else {
            continue;
        };
        let explained = ds.dot(&bs);
        if best.as_ref().is_none_or(|(e, _, _)| explained > *e) {
            best = Some((explained, subset, bs));
        }
    }
    let (_, subset, bs) = best.ok_or(Error::SingularGram(f64::INFINITY))?;
    let mut beta = DVector::zeros(p);
    for (a, &j) in subset.iter().enumerate() {
        beta[j] = bs[a];
    }
    Ok(BaselineFit {
        beta,
        method: BaselineMethod::BestSubset(k),
        lambda: None,
        sweeps: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn random_gram(n: usize, p: usize, seed: u64) -> GramCache {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let beta = DVector::from_fn(p, |i, _| if i < 2 { 2.0 } else { 0.0 });
        let e = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let y = &x * beta + e;
        GramCache::from_parts(x.tr_mul(&x) / n as f64, x.tr_mul(&y) / n as f64).unwrap()
    }

    #[test]
    fn thresholding_examples() {
        assert_eq!(hard_threshold_ortho(&v(&[3.0, 1.0]), 2.0), v(&[3.0, 0.0]));
        assert_eq!(hard_threshold_ortho(&v(&[3.0, 1.0]), 0.0), v(&[3.0, 1.0]));
        assert_eq!(hard_threshold_ortho(&v(&[-2.5, 2.5]), 2.5), v(&[-2.5, 2.5]));
        assert_eq!(soft_threshold_ortho(&v(&[3.0, 1.0]), 2.0), v(&[1.0, 0.0]));
        assert_eq!(soft_threshold_ortho(&v(&[3.0, 1.0]), 0.0), v(&[3.0, 1.0]));
        assert_eq!(soft_threshold_ortho(&v(&[-3.0]), 1.0), v(&[-2.0]));
    }

    #[test]
    fn lasso_orthonormal_is_soft_threshold() {
        let d = v(&[3.0, -1.2, 0.4, 2.0]);
        let g = GramCache::from_parts(DMatrix::identity(4, 4), d.clone()).unwrap();
        for lambda in [0.0, 0.3, 1.0, 2.5] {
            let f = lasso_cd(&g, lambda).unwrap();
            let s = soft_threshold_ortho(&d, lambda);
            assert_abs_diff_eq!((&f.beta - s).amax(), 0.0, epsilon = 1e-8);
        }
        let f = lasso_cd(&g, lasso_lambda_max(&g)).unwrap();
        assert_eq!(f.nonzeros(), 0);
    }

    #[test]
    fn lasso_kkt_random() {
        let g = random_gram(30, 5, 3);
        for lambda in [0.01, 0.1, 0.5, 1.0] {
            let f = lasso_cd(&g, lambda).unwrap();
            assert!(kkt_residual(&g, &f.beta, lambda) <= 1e-6);
        }
    }

    #[test]
    fn lasso_sweeps_do_not_increase_objective() {
        let g = random_gram(40, 6, 9);
        let lambda = 0.2;
        let mut beta = DVector::zeros(6);
        let mut prev = lasso_objective(&g, &beta, lambda);
        for _ in 0..50 {
            // One sweep at a time through the one-sweep warm start budget.
            let c = g.c_n();
            for j in 0..6 {
                let r = g.gradient(&beta)[j] + c[(j, j)] * beta[j];
                beta[j] = soft(r, lambda) / c[(j, j)];
            }
            let obj = lasso_objective(&g, &beta, lambda);
            assert!(obj <= prev + 1e-12);
            prev = obj;
        }
        let f = lasso_cd(&g, lambda).unwrap();
        assert!(lasso_objective(&g, &f.beta, lambda) <= prev + 1e-10);
    }

    #[test]
    fn ols_and_ridge() {
        let g = GramCache::from_parts(DMatrix::identity(2, 2), v(&[3.0, 1.0])).unwrap();
        assert_eq!(ols_fit(&g).unwrap().beta, v(&[3.0, 1.0]));

        let dup = GramCache::from_parts(DMatrix::from_element(2, 2, 1.0), v(&[2.0, 2.0])).unwrap();
        let r = ridge_fit(&dup, 0.2).unwrap();
        assert_abs_diff_eq!(r.beta[0], 0.909_090_909_090_909, epsilon = 1e-12);
        assert_abs_diff_eq!(r.beta[0], r.beta[1], epsilon = 1e-12);
        assert!(ols_fit(&dup).is_err());

        let g = random_gram(50, 4, 1);
        let ols = ols_fit(&g).unwrap();
        assert!((g.c_n() * &ols.beta - g.xty()).amax() <= 1e-10);
        let ridge = ridge_fit(&g, 1e-10).unwrap();
        assert_abs_diff_eq!((&ridge.beta - &ols.beta).amax(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn best_subset_finds_signal() {
        let g = random_gram(200, 6, 4);
        let f = best_subset(&g, 2).unwrap();
        assert_eq!(f.nonzeros(), 2);
        assert!(f.beta[0] != 0.0 && f.beta[1] != 0.0);
        let full = best_subset(&g, 6).unwrap();
        assert_abs_diff_eq!((&full.beta - ols_fit(&g).unwrap().beta).amax(), 0.0, epsilon = 1e-10);
        assert_eq!(best_subset(&g, 0).unwrap().nonzeros(), 0);
    }
}
