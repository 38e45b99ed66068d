//! CSV renderings of paths and segment tables.

use std::io::{self, Write};

use lags::estimator::{PathResult, Segment};
use nalgebra::DVector;

/// Coefficients along a λ grid, from any of the estimators.
#[derive(Debug, Clone)]
pub struct CoefPath {
    pub lambdas: Vec<f64>,
    /// `None` where the fit failed.
    pub betas: Vec<Option<DVector<f64>>>,
    pub segments: Vec<Segment>,
    pub failures: Vec<(usize, String)>,
}

impl CoefPath {
    pub fn segment_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.lambdas.len()];
        for (s, seg) in self.segments.iter().enumerate() {
            for id in &mut ids[seg.start..=seg.end] {
                *id = s;
            }
        }
        ids
    }
}

impl From<PathResult> for CoefPath {
    fn from(r: PathResult) -> Self {
        CoefPath {
            lambdas: r.lambdas,
            betas: r.fits.into_iter().map(|f| f.map(|f| f.beta)).collect(),
            segments: r.segments,
            failures: r.failures,
        }
    }
}

/// 17 significant digits in scientific notation, independent of locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn to_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

/// Header `lambda,variable,coefficient,segment_id`, one row per grid point
/// and variable, grid order first. Failed fits have coefficient `NaN`.
pub fn emit_path_csv(w: &mut dyn Write, path: &CoefPath, names: &[String]) -> io::Result<()> {
    if let Some(b) = path.betas.iter().flatten().find(|b| b.len() != names.len()) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{} names for {} coefficients", names.len(), b.len()),
        ));
    }
    let ids = path.segment_ids();
    let mut out = csv_writer(w);
    out.write_record(["lambda", "variable", "coefficient", "segment_id"]).map_err(to_io)?;
    for (i, (&lambda, beta)) in path.lambdas.iter().zip(&path.betas).enumerate() {
        for (j, name) in names.iter().enumerate() {
            let c = beta.as_ref().map_or(f64::NAN, |b| b[j]);
            let (l, c, s) = (num(lambda), num(c), ids[i].to_string());
            out.write_record([l.as_str(), name, &c, &s]).map_err(to_io)?;
        }
    }
    out.flush()
}

/// Header `segment_id,start,end,lambda_high,lambda_low,nonzeros`; grid
/// indices are 0-based and inclusive, `nonzeros` is empty for failed fits.
pub fn emit_segments_csv(w: &mut dyn Write, path: &CoefPath) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["segment_id", "start", "end", "lambda_high", "lambda_low", "nonzeros"])
        .map_err(to_io)?;
    for (s, seg) in path.segments.iter().enumerate() {
        let nz = seg
            .beta
            .as_ref()
            .map(|b| b.iter().filter(|v| **v != 0.0).count().to_string())
            .unwrap_or_default();
        out.write_record([
            s.to_string(),
            seg.start.to_string(),
            seg.end.to_string(),
            num(seg.lambda_high),
            num(seg.lambda_low),
            nz,
        ])
        .map_err(to_io)?;
    }
    out.flush()
}

/// Writes rows of already formatted cells under `header`.
pub fn emit_table(w: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header).map_err(to_io)?;
    for r in rows {
        out.write_record(r).map_err(to_io)?;
    }
    out.flush()
}
