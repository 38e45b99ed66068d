//! Data ingestion, standardization and the Gram cache.
//!
//! Every estimator in this crate works on a [`GramCache`]: the scaled Gram
//! matrix `C_n = XᵀX / n` and the scaled cross-product `Xᵀy / n` of a
//! standardized design. Standardization uses the population convention
//! (divisor `n`), so the diagonal of `C_n` is exactly one.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::linalg::inf_norm;
use crate::{Error, Result};

/// Raw regression data: response `y` and predictor matrix `X` (n × p).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::EmptyData);
        }
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "response has {} entries, design has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if column_names.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {} predictors",
                column_names.len(),
                x.ncols()
            )));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Dataset { y, x, column_names })
    }

    /// Builds a dataset with generated column names `x1..xp`.
    pub fn unnamed(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new(y, x, names)
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Sub-dataset made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let x = self.x.select_rows(rows.iter());
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        Dataset::new(y, x, self.column_names.clone())
    }
}

/// Reads a CSV file with a header row. The response column is removed and
/// the remaining columns, in file order, become the predictors.
///
/// Row and column numbers in [`Error::ParseError`] are 1-based and count data
/// rows only (the header is not row 1).
pub fn load_csv(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(e, 0))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(e, 0))?
        .iter()
        .map(str::to_owned)
        .collect();
    let response_idx = headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| Error::MissingColumn(response_column.to_owned()))?;

    let mut y = Vec::new();
    let mut cells = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(e, row))?;
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::ParseError {
                row,
                col: j + 1,
                msg: if cell.is_empty() {
                    "empty cell".to_owned()
                } else {
                    format!("`{cell}` is not a number")
                },
            })?;
            if !value.is_finite() {
                return Err(Error::ParseError {
                    row,
                    col: j + 1,
                    msg: format!("`{cell}` is not finite"),
                });
            }
            if j == response_idx {
                y.push(value);
            } else {
                cells.push(value);
            }
        }
    }
    let p = headers.len() - 1;
    if y.is_empty() || p == 0 {
        return Err(Error::EmptyData);
    }
    let names = headers
        .into_iter()
        .enumerate()
        .filter_map(|(j, h)| (j != response_idx).then_some(h))
        .collect();
    let n = y.len();
    Dataset::new(
        DVector::from_vec(y),
        DMatrix::from_row_slice(n, p, &cells),
        names,
    )
}

fn csv_error(e: csv::Error, row: usize) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { len, .. } => Error::ParseError {
            row,
            col: *len as usize + 1,
            msg: "row has a different number of cells than the header".to_owned(),
        },
        _ if e.is_io_error() => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        },
        _ => Error::ParseError {
            row,
            col: 0,
            msg: e.to_string(),
        },
    }
}

/// Design with mean-0, variance-1 columns and a centered response, plus the
/// metadata needed to map coefficients back to the raw scale.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    pub xs: DMatrix<f64>,
    pub yc: DVector<f64>,
    pub col_means: DVector<f64>,
    pub col_scales: DVector<f64>,
    pub y_mean: f64,
}

impl StandardizedDesign {
    pub fn n(&self) -> usize {
        self.xs.nrows()
    }

    pub fn p(&self) -> usize {
        self.xs.ncols()
    }

    /// Applies this design's column transform to raw predictor rows.
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.apply(|v| *v = (*v - self.col_means[j]) / self.col_scales[j]);
        }
        out
    }
}

pub fn standardize(d: &Dataset) -> Result<StandardizedDesign> {
    let n = d.n() as f64;
    let mut xs = d.x().clone();
    let mut col_means = DVector::zeros(d.p());
    let mut col_scales = DVector::zeros(d.p());
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let scale = var.sqrt();
        if !(scale > 1e-12 * (1.0 + mean.abs())) {
            return Err(Error::ConstantColumn(j));
        }
        col.apply(|v| *v = (*v - mean) / scale);
        col_means[j] = mean;
        col_scales[j] = scale;
    }
    let y_mean = d.y().sum() / n;
    let yc = d.y().map(|v| v - y_mean);
    Ok(StandardizedDesign {
        xs,
        yc,
        col_means,
        col_scales,
        y_mean,
    })
}

/// Maps standardized coefficients back to the raw scale, returning the
/// intercept and raw coefficients.
pub fn destandardize(beta_s: &DVector<f64>, s: &StandardizedDesign) -> (f64, DVector<f64>) {
    let beta = beta_s.component_div(&s.col_scales);
    let intercept = s.y_mean - beta.dot(&s.col_means);
    (intercept, beta)
}

/// Pearson correlation of each standardized column with the centered response.
pub fn correlations(s: &StandardizedDesign) -> Result<DVector<f64>> {
    let ynorm = s.yc.norm();
    if ynorm == 0.0 {
        return Err(Error::ZeroResponse);
    }
    Ok(DVector::from_iterator(
        s.p(),
        s.xs.column_iter().map(|col| {
            let c = col.dot(&s.yc) / (col.norm() * ynorm);
            c.clamp(-1.0, 1.0)
        }),
    ))
}

/// Linear system behind every gradient-type criterion: a `q × p` matrix `G`
/// and right-hand side `d`, so that the (scaled) least-squares gradient at
/// `β` is `d − Gβ`.
///
/// Built from data, `G = C_n = XᵀX / n` and `d = Xᵀy / n` (so `q = p`).
/// [`GramCache::from_parts`] accepts any system, which is how the
/// one-dimensional LAD-style illustrations are expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCache {
    c_n: DMatrix<f64>,
    xty: DVector<f64>,
    inf_norm: f64,
}

impl GramCache {
    pub fn from_parts(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, right-hand side has {}",
                matrix.nrows(),
                rhs.len()
            )));
        }
        if matrix.ncols() == 0 || matrix.nrows() == 0 {
            return Err(Error::EmptyData);
        }
        if matrix.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        let inf_norm = inf_norm(&matrix);
        Ok(GramCache {
            c_n: matrix,
            xty: rhs,
            inf_norm,
        })
    }

    pub fn c_n(&self) -> &DMatrix<f64> {
        &self.c_n
    }

    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    /// `‖C_n‖_∞`, the maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.inf_norm
    }

    /// Number of gradient rows.
    pub fn n_rows(&self) -> usize {
        self.c_n.nrows()
    }

    /// Number of coefficients.
    pub fn p(&self) -> usize {
        self.c_n.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.c_n.nrows() == self.c_n.ncols()
    }

    /// Scaled gradient `Xᵀ(y − Xβ) / n`.
    pub fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.xty - &self.c_n * beta
    }
}

pub fn gram(s: &StandardizedDesign) -> GramCache {
    let n = s.n() as f64;
    let mut c_n = s.xs.tr_mul(&s.xs) / n;
    // Exact symmetry regardless of summation order.
    for i in 0..c_n.nrows() {
        for j in 0..i {
            let v = 0.5 * (c_n[(i, j)] + c_n[(j, i)]);
            c_n[(i, j)] = v;
            c_n[(j, i)] = v;
        }
    }
    let xty = s.xs.tr_mul(&s.yc) / n;
    let inf_norm = inf_norm(&c_n);
    GramCache { c_n, xty, inf_norm }
}
