#![allow(dead_code)]

use lags::data::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal_matrix<R: Rng>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Centered columns that are orthogonal to each other and to the intercept.
fn centered_orthonormal<R: Rng>(rng: &mut R, n: usize, k: usize) -> DMatrix<f64> {
    let mut m = normal_matrix(rng, n, k);
    for mut col in m.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    m.qr().q()
}

/// Design whose standardized form satisfies `XsᵀXs = nI` and
/// `Xsᵀy_c / n = beta_o`, plus extra response noise orthogonal to the columns.
pub fn orthonormal_dataset<R: Rng>(rng: &mut R, n: usize, beta_o: &[f64], noise: f64) -> Dataset {
    let p = beta_o.len();
    let q = centered_orthonormal(rng, n, p + 1);
    let x = q.columns(0, p) * (n as f64).sqrt();
    let extra = q.column(p) * ((n as f64).sqrt() * noise);
    let y = &x * DVector::from_column_slice(beta_o) + extra;
    Dataset::unnamed(y.add_scalar(1.5), x.add_scalar(0.25)).unwrap()
}

/// Gaussian design with a sparse signal and unit noise.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, p: usize, p0: usize, signal: f64) -> Dataset {
    let x = normal_matrix(rng, n, p);
    let beta = DVector::from_fn(p, |i, _| if i < p0 { signal * (1.0 + i as f64 / p0.max(1) as f64) } else { 0.0 });
    let e = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    Dataset::unnamed(&x * beta + e, x).unwrap()
}
