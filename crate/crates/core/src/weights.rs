//! Penalty weights `wᵢ` for the weighted L1 penalty.
//!
//! An infinite weight excludes the coordinate from every fit that uses the
//! vector: the coefficient is fixed to exactly zero and never enters the LP.

use nalgebra::{DMatrix, DVector};

use crate::data::{correlations, gram, GramCache, StandardizedDesign};
use crate::linalg::{solve_spd, sym_condition_number};
use crate::{Error, Result};

/// Default ridge parameter for the inverse-ridge scheme.
pub const DEFAULT_PHI: f64 = 0.2;

/// Coefficients below this magnitude receive an infinite weight.
const ZERO_COEF: f64 = 1e-12;

/// Largest condition number of `C_n` accepted by the OLS scheme.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme {
    Correlation,
    InverseOls,
    InverseRidge(f64),
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
    scheme: WeightScheme,
}

impl WeightVector {
    /// Checks every entry is in `(0, +∞]`.
    pub fn new(w: Vec<f64>, scheme: WeightScheme) -> Result<Self> {
        if let Some(i) = w.iter().position(|v| v.is_nan() || *v <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight {i} is {}, weights must be positive",
                w[i]
            )));
        }
        Ok(WeightVector { w, scheme })
    }

    pub fn uniform(p: usize) -> Self {
        WeightVector {
            w: vec![1.0; p],
            scheme: WeightScheme::Uniform,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.w[i].is_infinite()
    }

    /// Indices with a finite weight, in increasing order.
    pub fn finite_indices(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&i| self.w[i].is_finite()).collect()
    }

    /// Weights reordered so that entry `i` is the old entry `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        WeightVector {
            w: perm.iter().map(|&i| self.w[i]).collect(),
            scheme: self.scheme,
        }
    }
}

fn inverse_abs(values: impl Iterator<Item = f64>, zero: f64) -> Vec<f64> {
    values
        .map(|v| if v.abs() <= zero { f64::INFINITY } else { 1.0 / v.abs() })
        .collect()
}

/// `wᵢ = 1/|cᵢ|`, infinite where the correlation is zero.
pub fn correlation_weights(c: &DVector<f64>) -> WeightVector {
    WeightVector {
        w: inverse_abs(c.iter().copied(), 0.0),
        scheme: WeightScheme::Correlation,
    }
}

/// Correlation weights computed from a standardized design.
pub fn correlation_weights_from(s: &StandardizedDesign) -> Result<WeightVector> {
    Ok(correlation_weights(&correlations(s)?))
}

/// `wᵢ = 1/|β_OLS,ᵢ|`.
pub fn ols_weights(s: &StandardizedDesign) -> Result<WeightVector> {
    if s.n() < s.p() {
        return Err(Error::SingularGram(f64::INFINITY));
    }
    ols_weights_from_gram(&gram(s))
}

/// OLS weights from the normal equations `C_n β = Xᵀy/n`.
pub fn ols_weights_from_gram(g: &GramCache) -> Result<WeightVector> {
    let beta = ols_coefficients(g)?;
    Ok(WeightVector {
        w: inverse_abs(beta.iter().copied(), ZERO_COEF),
        scheme: WeightScheme::InverseOls,
    })
}

pub(crate) fn ols_coefficients(g: &GramCache) -> Result<DVector<f64>> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch("OLS needs a square Gram matrix".into()));
    }
    let cond = sym_condition_number(g.c_n());
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularGram(cond));
    }
    solve_spd(g.c_n(), g.xty()).ok_or(Error::SingularGram(cond))
}

pub(crate) fn ridge_coefficients(g: &GramCache, phi: f64) -> Result<DVector<f64>> {
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(Error::InvalidArgument(format!("ridge parameter must be positive, got {phi}")));
    }
    if !g.is_square() {
        return Err(Error::DimensionMismatch("ridge needs a square Gram matrix".into()));
    }
    let a = g.c_n() + DMatrix::identity(g.p(), g.p()) * phi;
    solve_spd(&a, g.xty()).ok_or(Error::SingularGram(f64::INFINITY))
}

/// `wᵢ = 1/|β_ridge,ᵢ|` with `β_ridge = (C_n + φI)⁻¹ Xᵀy/n`.
pub fn ridge_weights(s: &StandardizedDesign, phi: f64) -> Result<WeightVector> {
    ridge_weights_from_gram(&gram(s), phi)
}

pub fn ridge_weights_from_gram(g: &GramCache, phi: f64) -> Result<WeightVector> {
    let beta = ridge_coefficients(g, phi)?;
    Ok(WeightVector {
        w: inverse_abs(beta.iter().copied(), ZERO_COEF),
        scheme: WeightScheme::InverseRidge(phi),
    })
}

/// Weights of the given scheme for a standardized design.
pub fn compute(scheme: WeightScheme, s: &StandardizedDesign) -> Result<WeightVector> {
    match scheme {
        WeightScheme::Correlation => correlation_weights_from(s),
        WeightScheme::InverseOls => ols_weights(s),
        WeightScheme::InverseRidge(phi) => ridge_weights(s, phi),
        WeightScheme::Uniform => Ok(WeightVector::uniform(s.p())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, Dataset};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let beta = DVector::from_fn(p, |i, _| (i as f64) - 1.5);
        let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let y = &x * beta + noise;
        Dataset::unnamed(y, x).unwrap()
    }

    #[test]
    fn correlation_examples() {
        let w = correlation_weights(&DVector::from_vec(vec![0.5, -0.25]));
        assert_eq!(w.as_slice(), &[2.0, 4.0]);
        let w = correlation_weights(&DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(w.as_slice()[0], 1.0);
        assert!(w.is_excluded(1));
        assert_eq!(w.finite_indices(), vec![0]);
    }

    #[test]
    fn orthonormal_fixture() {
        let g = GramCache::from_parts(DMatrix::identity(2, 2), DVector::from_vec(vec![3.0, 1.0])).unwrap();
        let w = ols_weights_from_gram(&g).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.as_slice()[1], 1.0, epsilon = 1e-15);

        let g = GramCache::from_parts(DMatrix::identity(2, 2), DVector::from_vec(vec![2.0, 0.0])).unwrap();
        let w = ols_weights_from_gram(&g).unwrap();
        assert_eq!(w.as_slice()[0], 0.5);
        assert!(w.is_excluded(1));
    }

    #[test]
    fn ols_on_orthonormal_design_is_proportional_to_correlation() {
        // Centered orthogonal columns with equal norms.
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![4.0, -2.0, 2.0, -4.0]);
        let s = standardize(&Dataset::unnamed(y, x).unwrap()).unwrap();
        let ols = ols_weights(&s).unwrap();
        let corr = correlation_weights_from(&s).unwrap();
        let ratios: Vec<f64> = ols.as_slice().iter().zip(corr.as_slice()).map(|(a, b)| a / b).collect();
        assert_abs_diff_eq!(ratios[0], ratios[1], epsilon = 1e-10);
        assert_abs_diff_eq!(ols.as_slice()[1] / ols.as_slice()[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ols_rejects_wide_design() {
        let s = standardize(&random_dataset(4, 6, 3)).unwrap();
        assert!(matches!(ols_weights(&s), Err(Error::SingularGram(_))));
        let g = GramCache::from_parts(DMatrix::from_element(2, 2, 1.0), DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!(matches!(ols_weights_from_gram(&g), Err(Error::SingularGram(_))));
    }

    #[test]
    fn ridge_duplicate_columns() {
        let g = GramCache::from_parts(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            DVector::from_vec(vec![2.0, 2.0]),
        )
        .unwrap();
        let b = ridge_coefficients(&g, DEFAULT_PHI).unwrap();
        assert_abs_diff_eq!(b[0], 2.0 / 2.2, epsilon = 1e-12);
        assert_abs_diff_eq!(b[0], 0.909_090_909_090_909, epsilon = 1e-12);
        let w = ridge_weights_from_gram(&g, DEFAULT_PHI).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], w.as_slice()[1], epsilon = 1e-10);
    }

    #[test]
    fn ridge_identical_columns_in_real_design() {
        let d = random_dataset(30, 3, 11);
        let mut x = d.x().clone().insert_column(3, 0.0);
        let c0 = x.column(0).clone_owned();
        x.set_column(3, &c0);
        let s = standardize(&Dataset::unnamed(d.y().clone(), x).unwrap()).unwrap();
        let w = ridge_weights(&s, 0.2).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], w.as_slice()[3], epsilon = 1e-10);
    }

    #[test]
    fn ridge_deflates_with_phi() {
        let s = standardize(&random_dataset(40, 4, 5)).unwrap();
        let g = gram(&s);
        let b: Vec<DVector<f64>> = [0.1, 1.0, 10.0].iter().map(|&phi| ridge_coefficients(&g, phi).unwrap()).collect();
        assert!(b[0].norm() > b[1].norm() && b[1].norm() > b[2].norm());
    }

    #[test]
    fn ridge_zero_response() {
        let g = GramCache::from_parts(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        let w = ridge_weights_from_gram(&g, 0.2).unwrap();
        assert!((0..3).all(|i| w.is_excluded(i)));
        assert!(ridge_weights_from_gram(&g, 0.0).is_err());
    }

    #[test]
    fn column_permutation_equivariance() {
        let d = random_dataset(50, 5, 8);
        let perm = [3, 0, 4, 1, 2];
        let xp = DMatrix::from_fn(50, 5, |i, j| d.x()[(i, perm[j])]);
        let s = standardize(&d).unwrap();
        let sp = standardize(&Dataset::unnamed(d.y().clone(), xp).unwrap()).unwrap();
        for scheme in [WeightScheme::Correlation, WeightScheme::InverseOls, WeightScheme::InverseRidge(0.2)] {
            let w = compute(scheme, &s).unwrap().permuted(&perm);
            let wp = compute(scheme, &sp).unwrap();
            for (a, b) in w.as_slice().iter().zip(wp.as_slice()) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-9 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(WeightVector::new(vec![1.0, 0.0], WeightScheme::Uniform).is_err());
        assert!(WeightVector::new(vec![1.0, f64::INFINITY], WeightScheme::Uniform).is_ok());
    }
}
