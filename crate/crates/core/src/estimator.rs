//! LAGS fits, regularization paths and the weighted Dantzig selector.
//!
//! For a gradient system `(G, d)` (from data, `G = C_n` and `d = Xᵀy/n`)
//! the LAGS criterion is
//!
//! ```text
//! l(β; λ) = ‖d − Gβ‖₁ + λ Σᵢ wᵢ |βᵢ|
//! ```
//!
//! and is solved as the linear program
//!
//! ```text
//! min Σ uᵢ + λ Σ wⱼ vⱼ   s.t.  −u ≤ d − Gβ ≤ u,  −v ≤ β ≤ v
//! ```
//!
//! with `β` free. Coordinates with infinite weight are removed before the LP
//! is built. A gradient row that no remaining coordinate touches is constant,
//! so it is dropped and its `|dᵢ|` added back as an offset.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::GramCache;
use crate::linalg::{inf_norm, solve_general};
use crate::simplex::{self, Basis, Certificate, LpProblem, LpSolution, LpStatus};
use crate::weights::{ols_coefficients, WeightVector};
use crate::{Error, Result};

/// Two coefficient vectors closer than this in sup norm are the same segment.
pub const SEGMENT_TOL: f64 = 1e-9;

/// Default number of grid points and ratio `λ_min / λ_max`.
pub const DEFAULT_GRID_LEN: usize = 100;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct LagsFit {
    pub beta: DVector<f64>,
    /// Signed gradient `d − Gβ̂`.
    pub gradient: DVector<f64>,
    pub objective: f64,
    pub lambda: f64,
    pub weights: WeightVector,
    pub active_set: Vec<usize>,
    /// Optimal basis of the LP, for warm starts. `None` for closed-form fits.
    pub basis: Option<Basis>,
    /// Several optimal vertices may exist; the returned one is the vertex the
    /// simplex stopped at.
    pub degenerate: bool,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
    /// The LP certificate passed the solver tolerances.
    pub certified: bool,
}

/// LP form of a LAGS problem together with the index maps back to `β`.
#[derive(Debug, Clone)]
pub struct LagsLp {
    pub problem: LpProblem,
    /// Coordinates of `β` present in the LP, in order.
    pub columns: Vec<usize>,
    /// Gradient rows present in the LP, in order.
    pub rows: Vec<usize>,
    /// Constant `Σ |dᵢ|` over the dropped rows.
    pub offset: f64,
}

/// Maximal run of consecutive grid points with the same coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// First and last grid index, inclusive.
    pub start: usize,
    pub end: usize,
    pub lambda_high: f64,
    pub lambda_low: f64,
    /// `None` when the fit at these grid points failed.
    pub beta: Option<DVector<f64>>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    /// `None` where the fit failed; the message is in `failures`.
    pub fits: Vec<Option<LagsFit>>,
    pub failures: Vec<(usize, String)>,
    pub segments: Vec<Segment>,
}

impl PathResult {
    /// Segment index of every grid point.
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

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub a_n: f64,
    pub b_n: f64,
    /// Smallest sampled value of `‖[C₁₁, C₁₂] s‖∞` over `s ∈ Ω`: an upper
    /// estimate of the true minimum.
    pub gamma_estimate: f64,
    pub c_inf_norm: f64,
    /// `1 − ‖C₁₁⁻¹ C₁₂‖∞`.
    pub eta_estimate: f64,
}

fn check_dims(g: &GramCache, w: &WeightVector) -> Result<()> {
    if w.len() != g.p() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} coefficients",
            w.len(),
            g.p()
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite and ≥ 0, got {lambda}")));
    }
    Ok(())
}

fn penalty(beta: &DVector<f64>, lambda: f64, w: &WeightVector) -> Result<f64> {
    let mut pen = 0.0;
    for (i, (&b, &wi)) in beta.iter().zip(w.as_slice()).enumerate() {
        if b == 0.0 {
            continue;
        }
        if wi.is_infinite() {
            return Err(Error::InfinitePenalty(i));
        }
        pen += wi * b.abs();
    }
    Ok(lambda * pen)
}

/// `‖d − Gβ‖₁ + λ Σ wᵢ|βᵢ|`.
pub fn lags_objective(beta: &DVector<f64>, g: &GramCache, lambda: f64, w: &WeightVector) -> Result<f64> {
    check_dims(g, w)?;
    if beta.len() != g.p() {
        return Err(Error::DimensionMismatch(format!("beta has length {}, expected {}", beta.len(), g.p())));
    }
    Ok(g.gradient(beta).lp_norm(1) + penalty(beta, lambda, w)?)
}

/// `‖d − Gβ‖∞ + λ Σ wᵢ|βᵢ|`.
pub fn dantzig_objective(beta: &DVector<f64>, g: &GramCache, lambda: f64, w: &WeightVector) -> Result<f64> {
    check_dims(g, w)?;
    Ok(g.gradient(beta).amax() + penalty(beta, lambda, w)?)
}

pub fn assemble_lp(g: &GramCache, lambda: f64, w: &WeightVector) -> Result<LagsLp> {
    check_dims(g, w)?;
    check_lambda(lambda)?;
    let columns = w.finite_indices();
    if columns.is_empty() {
        return Err(Error::AllExcluded);
    }
    let mat = g.c_n();
    let d = g.xty();
    let mut rows = Vec::new();
    let mut offset = 0.0;
    for i in 0..g.n_rows() {
        if columns.iter().any(|&j| mat[(i, j)] != 0.0) {
            rows.push(i);
        } else {
            offset += d[i].abs();
        }
    }
    let (p, q) = (columns.len(), rows.len());
    let m = 2 * p + q;
    let k = 2 * q + 2 * p;
    let mut a = DMatrix::zeros(k, m);
    let mut b = vec![0.0; k];
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in columns.iter().enumerate() {
            let gij = mat[(i, j)];
            a[(2 * r, c)] = -gij;
            a[(2 * r + 1, c)] = gij;
        }
        a[(2 * r, p + r)] = -1.0;
        a[(2 * r + 1, p + r)] = -1.0;
        b[2 * r] = -d[i];
        b[2 * r + 1] = d[i];
    }
    for c in 0..p {
        let row = 2 * q + 2 * c;
        a[(row, c)] = 1.0;
        a[(row, p + q + c)] = -1.0;
        a[(row + 1, c)] = -1.0;
        a[(row + 1, p + q + c)] = -1.0;
    }
    let mut cost = vec![0.0; m];
    cost[p..p + q].iter_mut().for_each(|v| *v = 1.0);
    for (c, &j) in columns.iter().enumerate() {
        cost[p + q + c] = lambda * w.as_slice()[j];
    }
    let mut lower = vec![f64::NEG_INFINITY; p];
    lower.extend(std::iter::repeat_n(0.0, q + p));
    let upper = vec![f64::INFINITY; m];
    Ok(LagsLp {
        problem: LpProblem::new(cost, a, b, lower, upper)?,
        columns,
        rows,
        offset,
    })
}

fn solve_lp(problem: &LpProblem, warm: Option<&Basis>) -> Result<LpSolution> {
    let sol = match warm {
        Some(b) => simplex::solve_warm(problem, b)?,
        None => simplex::solve(problem)?,
    };
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        // Both programs are feasible and bounded below by construction.
        LpStatus::Infeasible => Err(Error::NumericalBreakdown("LP reported infeasible".into())),
        LpStatus::Unbounded => Err(Error::NumericalBreakdown("LP reported unbounded".into())),
    }
}

/// Scatters the LP's `β` block into a full vector, snapping roundoff-level
/// entries to exact zeros.
fn extract_beta(x: &[f64], columns: &[usize], p: usize) -> DVector<f64> {
    let mut beta = DVector::zeros(p);
    let scale = 1.0 + x[..columns.len()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (c, &j) in columns.iter().enumerate() {
        let v = x[c];
        beta[j] = if v.abs() <= 1e-12 * scale { 0.0 } else { v };
    }
    beta
}

fn active_set(beta: &DVector<f64>) -> Vec<usize> {
    (0..beta.len()).filter(|&i| beta[i] != 0.0).collect()
}

/// Global minimizer of the LAGS criterion.
///
/// `λ = 0` with a full-rank square system and no excluded coordinate
/// returns the OLS solution directly.
pub fn fit(g: &GramCache, lambda: f64, w: &WeightVector, warm: Option<&Basis>) -> Result<LagsFit> {
    check_dims(g, w)?;
    check_lambda(lambda)?;
    if lambda == 0.0 && g.is_square() && w.finite_indices().len() == g.p() {
        if let Ok(beta) = ols_coefficients(g) {
            let gradient = g.gradient(&beta);
            return Ok(LagsFit {
                objective: gradient.lp_norm(1),
                active_set: active_set(&beta),
                beta,
                gradient,
                lambda,
                weights: w.clone(),
                basis: None,
                degenerate: false,
                iterations: 0,
                certificate: None,
                certified: true,
            });
        }
    }
    if w.finite_indices().is_empty() {
        let beta = DVector::zeros(g.p());
        let gradient = g.gradient(&beta);
        return Ok(LagsFit {
            objective: gradient.lp_norm(1),
            active_set: Vec::new(),
            beta,
            gradient,
            lambda,
            weights: w.clone(),
            basis: None,
            degenerate: false,
            iterations: 0,
            certificate: None,
            certified: true,
        });
    }
    let lp = assemble_lp(g, lambda, w)?;
    let sol = solve_lp(&lp.problem, warm)?;
    let beta = extract_beta(&sol.x, &lp.columns, g.p());
    let gradient = g.gradient(&beta);
    let objective = lags_objective(&beta, g, lambda, w)?;
    let certified = sol
        .certificate
        .map(|c| c.is_certified(&lp.problem, sol.objective))
        .unwrap_or(false);
    Ok(LagsFit {
        active_set: active_set(&beta),
        beta,
        gradient,
        objective,
        lambda,
        weights: w.clone(),
        basis: Some(sol.basis),
        degenerate: sol.degenerate,
        iterations: sol.iterations,
        certificate: sol.certificate,
        certified,
    })
}

/// Fits along a strictly descending grid, warm-starting each point from the
/// previous optimal basis. Failed points are recorded, not fatal.
pub fn fit_path(g: &GramCache, lambdas: &[f64], w: &WeightVector) -> Result<PathResult> {
    check_dims(g, w)?;
    validate_grid(lambdas)?;
    let mut fits: Vec<Option<LagsFit>> = Vec::with_capacity(lambdas.len());
    let mut failures = Vec::new();
    let mut warm: Option<Basis> = None;
    for (i, &lambda) in lambdas.iter().enumerate() {
        match fit(g, lambda, w, warm.as_ref()) {
            Ok(f) => {
                if f.basis.is_some() {
                    warm = f.basis.clone();
                }
                fits.push(Some(f));
            }
            Err(e) => {
                failures.push((i, e.to_string()));
                fits.push(None);
            }
        }
    }
    let segments = segments(lambdas, &fits);
    Ok(PathResult {
        lambdas: lambdas.to_vec(),
        fits,
        failures,
        segments,
    })
}

fn validate_grid(lambdas: &[f64]) -> Result<()> {
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid values must be positive, got {l}")));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly descending".into()));
    }
    Ok(())
}

/// Groups adjacent grid points whose coefficient vectors differ by at most
/// [`SEGMENT_TOL`] in sup norm.
pub fn segments(lambdas: &[f64], fits: &[Option<LagsFit>]) -> Vec<Segment> {
    let betas: Vec<Option<&DVector<f64>>> = fits.iter().map(|f| f.as_ref().map(|f| &f.beta)).collect();
    segments_of(lambdas, &betas)
}

/// [`segments`] over bare coefficient vectors, for estimators other than LAGS.
pub fn segments_of(lambdas: &[f64], betas: &[Option<&DVector<f64>>]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (i, beta) in betas.iter().enumerate() {
        let prev = i.checked_sub(1).and_then(|j| betas[j]);
        let extend = match (out.last(), beta, prev) {
            (Some(_), Some(b), Some(prev)) => (*b - prev).amax() <= SEGMENT_TOL,
            _ => false,
        };
        if extend {
            let last = out.last_mut().expect("segment exists");
            last.end = i;
            last.lambda_low = lambdas[i];
        } else {
            out.push(Segment {
                start: i,
                end: i,
                lambda_high: lambdas[i],
                lambda_low: lambdas[i],
                beta: beta.cloned(),
            });
        }
    }
    out
}

/// Smallest `λ` at which the fit is identically zero, located by bisection.
///
/// The bracket starts at `max_j ‖G_{:,j}‖₁ / wⱼ`, where zero is optimal
/// because the penalty grows at least as fast as the gradient term can fall.
pub fn lambda_max(g: &GramCache, w: &WeightVector) -> Result<f64> {
    check_dims(g, w)?;
    let mut hi: f64 = 0.0;
    for j in w.finite_indices() {
        let col = g.c_n().column(j).lp_norm(1);
        hi = hi.max(col / w.as_slice()[j]);
    }
    if hi == 0.0 {
        return Ok(0.0);
    }
    let mut warm: Option<Basis> = None;
    let mut is_zero = |lambda: f64| -> Result<bool> {
        let f = fit(g, lambda, w, warm.as_ref())?;
        if f.basis.is_some() {
            warm = f.basis;
        }
        Ok(f.active_set.is_empty())
    };
    if !is_zero(hi)? {
        // Only possible through roundoff; widen until zero.
        let mut k = 0;
        while !is_zero(hi)? {
            hi *= 2.0;
            k += 1;
            if k > 60 {
                return Err(Error::NumericalBreakdown("no zero fit found for λ_max".into()));
            }
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        if hi - lo <= 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if is_zero(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Warm fits stop within the reduced-cost tolerance, which can end on zero
    // just below the threshold. Re-bracket with cold fits.
    let cold_zero = |lambda: f64| -> Result<bool> { Ok(fit(g, lambda, w, None)?.active_set.is_empty()) };
    let mut step = (hi - lo).max(1e-9 * hi);
    let mut k = 0;
    while !cold_zero(hi)? {
        lo = hi;
        hi += step;
        step *= 2.0;
        k += 1;
        if k > 60 {
            return Err(Error::NumericalBreakdown("no zero fit found for λ_max".into()));
        }
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if cold_zero(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `k` logarithmically spaced points from `hi` down to `hi·ratio`.
pub fn log_grid(hi: f64, ratio: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (hi.ln(), (hi * ratio).ln());
            (0..k)
                .map(|i| {
                    if i == 0 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (k - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `k` points from `λ_max` down to `λ_max·ratio`.
pub fn default_grid(g: &GramCache, w: &WeightVector, k: usize, ratio: f64) -> Result<Vec<f64>> {
    let hi = lambda_max(g, w)?;
    if hi == 0.0 {
        return Err(Error::InvalidArgument("λ_max is zero: the zero fit is optimal for every λ".into()));
    }
    Ok(log_grid(hi, ratio, k))
}

/// `max_j ‖G_{:,j}‖∞ / wⱼ`. Zero is an optimum of the weighted Dantzig
/// problem at this value and the only one above it.
pub fn dantzig_lambda_bound(g: &GramCache, w: &WeightVector) -> Result<f64> {
    check_dims(g, w)?;
    Ok(w.finite_indices()
        .into_iter()
        .map(|j| g.c_n().column(j).amax() / w.as_slice()[j])
        .fold(0.0, f64::max))
}

/// Weighted Dantzig selector in penalized form, `‖d − Gβ‖∞ + λ Σ wᵢ|βᵢ|`.
///
/// LP variables are `[β, t, v]` with one bound `t` on every gradient entry.
pub fn weighted_dantzig(g: &GramCache, lambda: f64, w: &WeightVector) -> Result<LagsFit> {
    check_dims(g, w)?;
    check_lambda(lambda)?;
    let columns = w.finite_indices();
    if columns.is_empty() {
        return Err(Error::AllExcluded);
    }
    let mat = g.c_n();
    let d = g.xty();
    let (p, q) = (columns.len(), g.n_rows());
    let m = 2 * p + 1;
    let k = 2 * q + 2 * p;
    let mut a = DMatrix::zeros(k, m);
    let mut b = vec![0.0; k];
    for i in 0..q {
        for (c, &j) in columns.iter().enumerate() {
            a[(2 * i, c)] = -mat[(i, j)];
            a[(2 * i + 1, c)] = mat[(i, j)];
        }
        a[(2 * i, p)] = -1.0;
        a[(2 * i + 1, p)] = -1.0;
        b[2 * i] = -d[i];
        b[2 * i + 1] = d[i];
    }
    for c in 0..p {
        let row = 2 * q + 2 * c;
        a[(row, c)] = 1.0;
        a[(row, p + 1 + c)] = -1.0;
        a[(row + 1, c)] = -1.0;
        a[(row + 1, p + 1 + c)] = -1.0;
    }
    let mut cost = vec![0.0; m];
    cost[p] = 1.0;
    for (c, &j) in columns.iter().enumerate() {
        cost[p + 1 + c] = lambda * w.as_slice()[j];
    }
    let mut lower = vec![f64::NEG_INFINITY; p];
    lower.extend(std::iter::repeat_n(0.0, p + 1));
    let problem = LpProblem::new(cost, a, b, lower, vec![f64::INFINITY; m])?;
    let sol = solve_lp(&problem, None)?;
    let beta = extract_beta(&sol.x, &columns, g.p());
    let gradient = g.gradient(&beta);
    let objective = dantzig_objective(&beta, g, lambda, w)?;
    let certified = sol
        .certificate
        .map(|c| c.is_certified(&problem, sol.objective))
        .unwrap_or(false);
    Ok(LagsFit {
        active_set: active_set(&beta),
        beta,
        gradient,
        objective,
        lambda,
        weights: w.clone(),
        basis: Some(sol.basis),
        degenerate: sol.degenerate,
        iterations: sol.iterations,
        certificate: sol.certificate,
        certified,
    })
}

/// Weight summaries and sampled design constants for a candidate support.
pub fn diagnostics(
    g: &GramCache,
    w: &WeightVector,
    support: &[usize],
    samples: usize,
    seed: u64,
) -> Result<DiagnosticsReport> {
    check_dims(g, w)?;
    if !g.is_square() {
        return Err(Error::DimensionMismatch("diagnostics need a square Gram matrix".into()));
    }
    let p = g.p();
    let mut in_support = vec![false; p];
    for &i in support {
        if i >= p || in_support[i] {
            return Err(Error::InvalidArgument(format!("bad support index {i}")));
        }
        in_support[i] = true;
    }
    let complement: Vec<usize> = (0..p).filter(|&i| !in_support[i]).collect();
    if support.is_empty() || complement.is_empty() {
        return Err(Error::InvalidArgument("support must be a nonempty proper subset".into()));
    }
    let ws = w.as_slice();
    let a_n = support.iter().map(|&i| ws[i]).fold(f64::NEG_INFINITY, f64::max);
    let b_n = complement.iter().map(|&i| ws[i]).fold(f64::INFINITY, f64::min);

    let c = g.c_n();
    let s0 = support.len();
    // [C₁₁, C₁₂] with columns ordered support first.
    let order: Vec<usize> = support.iter().copied().chain(complement.iter().copied()).collect();
    let block = DMatrix::from_fn(s0, p, |r, col| c[(support[r], order[col])]);
    let c11 = block.columns(0, s0).into_owned();
    let c12 = block.columns(s0, p - s0).into_owned();
    let eta_estimate = match solve_general(&c11, &c12) {
        Some(m) => 1.0 - inf_norm(&m),
        None => return Err(Error::SingularC11),
    };

    let sup_norm = |s: &DVector<f64>| (&block * s).amax();
    let mut gamma = f64::INFINITY;
    // Signed coordinate vectors on the support are members of Ω.
    for r in 0..s0 {
        let mut s = DVector::zeros(p);
        s[r] = 1.0;
        gamma = gamma.min(sup_norm(&s));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut s = DVector::from_fn(p, |_, _| rng.random_range(-1.0..=1.0));
        let r = rng.random_range(0..s0);
        s[r] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        gamma = gamma.min(sup_norm(&s));
    }
    Ok(DiagnosticsReport {
        a_n,
        b_n,
        gamma_estimate: gamma,
        c_inf_norm: g.inf_norm(),
        eta_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toy() -> GramCache {
        GramCache::from_parts(
            DMatrix::from_column_slice(4, 1, &[2.0, 3.0, 5.0, 7.0]),
            DVector::from_vec(vec![7.0, 2.0, 4.0, 2.0]),
        )
        .unwrap()
    }

    fn toy_l(beta: f64, lambda: f64) -> f64 {
        (7.0 - 2.0 * beta).abs()
            + (2.0 - 3.0 * beta).abs()
            + (4.0 - 5.0 * beta).abs()
            + (2.0 - 7.0 * beta).abs()
            + lambda * beta.abs()
    }

    #[test]
    fn toy_objective_values() {
        let g = toy();
        let w = WeightVector::uniform(1);
        let v = lags_objective(&DVector::from_element(1, 2.0 / 3.0), &g, 1.0, &w).unwrap();
        assert_abs_diff_eq!(v, 9.0 + 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, toy_l(2.0 / 3.0, 1.0), epsilon = 1e-12);
        let v0 = lags_objective(&DVector::zeros(1), &g, 3.0, &w).unwrap();
        assert_abs_diff_eq!(v0, 15.0, epsilon = 1e-12);
    }

    #[test]
    fn toy_fits() {
        let g = toy();
        let w = WeightVector::uniform(1);
        for (lambda, expected) in [(1.0, 2.0 / 3.0), (2.0, 2.0 / 3.0), (5.0, 2.0 / 7.0)] {
            let f = fit(&g, lambda, &w, None).unwrap();
            assert_abs_diff_eq!(f.beta[0], expected, epsilon = 1e-9);
            assert_abs_diff_eq!(f.objective, toy_l(expected, lambda), epsilon = 1e-9);
            assert!(f.certified);
        }
        let f = fit(&g, 1e6, &w, None).unwrap();
        assert_eq!(f.beta[0], 0.0);
        assert!(f.active_set.is_empty());
    }

    #[test]
    fn toy_lp_and_warm_start() {
        let g = toy();
        let w = WeightVector::uniform(1);
        let lp = assemble_lp(&g, 1.0, &w).unwrap();
        assert_eq!(lp.problem.n_vars(), 6);
        assert_eq!(lp.problem.n_rows(), 10);
        let cold = simplex::solve(&lp.problem).unwrap();
        assert_abs_diff_eq!(cold.x[0], 2.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cold.objective, 9.0 + 2.0 / 3.0, epsilon = 1e-9);

        let lp2 = assemble_lp(&g, 2.0, &w).unwrap();
        let cold2 = simplex::solve(&lp2.problem).unwrap();
        let warm2 = simplex::solve_warm(&lp2.problem, &cold.basis).unwrap();
        assert_abs_diff_eq!(warm2.x[0], 2.0 / 3.0, epsilon = 1e-9);
        assert!(warm2.iterations <= cold2.iterations);
    }

    #[test]
    fn single_predictor_lp_size() {
        let g = GramCache::from_parts(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 0.4)).unwrap();
        let lp = assemble_lp(&g, 0.1, &WeightVector::uniform(1)).unwrap();
        assert_eq!((lp.problem.n_vars(), lp.problem.n_rows()), (3, 4));
    }

    #[test]
    fn excluded_coordinate_shrinks_lp() {
        let g = GramCache::from_parts(DMatrix::identity(2, 2), DVector::from_vec(vec![3.0, 1.0])).unwrap();
        let w = WeightVector::new(vec![1.0, f64::INFINITY], crate::weights::WeightScheme::Uniform).unwrap();
        let lp = assemble_lp(&g, 0.5, &w).unwrap();
        assert_eq!((lp.problem.n_vars(), lp.problem.n_rows()), (3, 4));
        assert_abs_diff_eq!(lp.offset, 1.0);
        let f = fit(&g, 0.5, &w, None).unwrap();
        assert_eq!(f.beta[1], 0.0);
        assert_abs_diff_eq!(f.beta[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.objective, 1.0 + 1.5, epsilon = 1e-12);

        let all = WeightVector::new(vec![f64::INFINITY; 2], crate::weights::WeightScheme::Uniform).unwrap();
        assert!(matches!(assemble_lp(&g, 0.5, &all), Err(Error::AllExcluded)));
        assert!(fit(&g, 0.5, &all, None).unwrap().active_set.is_empty());
    }

    #[test]
    fn infinite_penalty_error() {
        let g = GramCache::from_parts(DMatrix::identity(2, 2), DVector::from_vec(vec![3.0, 1.0])).unwrap();
        let w = WeightVector::new(vec![1.0, f64::INFINITY], crate::weights::WeightScheme::Uniform).unwrap();
        let beta = DVector::from_vec(vec![0.0, 1.0]);
        assert!(matches!(lags_objective(&beta, &g, 1.0, &w), Err(Error::InfinitePenalty(1))));
    }

    #[test]
    fn ols_point_has_penalty_only_value() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let beta = DVector::from_vec(vec![1.5, -0.5]);
        let g = GramCache::from_parts(c.clone(), &c * &beta).unwrap();
        let w = crate::weights::ols_weights_from_gram(&g).unwrap();
        let v = lags_objective(&beta, &g, 0.7, &w).unwrap();
        assert_abs_diff_eq!(v, 0.7 * 2.0, epsilon = 1e-12);
        let f0 = fit(&g, 0.0, &w, None).unwrap();
        assert_abs_diff_eq!((&f0.beta - &beta).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn toy_path_segments() {
        let g = toy();
        let w = WeightVector::uniform(1);
        let path = fit_path(&g, &[5.0, 2.0, 1.0], &w).unwrap();
        assert_eq!(path.segments.len(), 2);
        assert_eq!((path.segments[0].start, path.segments[0].end), (0, 0));
        assert_eq!((path.segments[1].start, path.segments[1].end), (1, 2));
        assert_abs_diff_eq!(path.segments[0].beta.as_ref().unwrap()[0], 2.0 / 7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(path.segments[1].beta.as_ref().unwrap()[0], 2.0 / 3.0, epsilon = 1e-9);
        assert_eq!(path.segment_ids(), vec![0, 1, 1]);

        let single = fit_path(&g, &[2.0], &w).unwrap();
        assert_eq!(single.segments.len(), 1);
        assert!(fit_path(&g, &[1.0, 2.0], &w).is_err());
        assert!(fit_path(&g, &[], &w).unwrap().segments.is_empty());
    }

    #[test]
    fn toy_lambda_max() {
        let g = toy();
        let w = WeightVector::uniform(1);
        assert_abs_diff_eq!(lambda_max(&g, &w).unwrap(), 17.0, epsilon = 1e-6);
        let grid = default_grid(&g, &w, 100, DEFAULT_GRID_RATIO).unwrap();
        assert_eq!(grid.len(), 100);
        assert_abs_diff_eq!(grid[99] / grid[0], 1e-4, epsilon = 1e-12);
    }

    #[test]
    fn dantzig_candidate_values() {
        let g = GramCache::from_parts(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let w = WeightVector::uniform(2);
        for lambda in [0.1, 0.3, 0.5, 0.7, 1.0, 1.5, 3.0] {
            let f = weighted_dantzig(&g, lambda, &w).unwrap();
            // The four listed points, plus (0,1) where both gradient entries tie.
            let candidates = [2.0, 1.0 + 2.0 * lambda, 2.0 + lambda, 3.0 * lambda, 1.0 + lambda];
            let best = candidates.iter().copied().fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(f.objective, best, epsilon = 1e-9);
        }
        let wx = WeightVector::new(vec![1.0, f64::INFINITY], crate::weights::WeightScheme::Uniform).unwrap();
        let f = weighted_dantzig(&g, 0.1, &wx).unwrap();
        assert_eq!(f.beta[1], 0.0);
    }

    #[test]
    fn diagnostics_examples() {
        let g = GramCache::from_parts(DMatrix::identity(3, 3), DVector::from_vec(vec![1.0, 1.0, 1.0])).unwrap();
        let w = WeightVector::new(vec![1.0 / 3.0, 1.0, 4.0], crate::weights::WeightScheme::Uniform).unwrap();
        let r = diagnostics(&g, &w, &[0, 1], 100, 1).unwrap();
        assert_eq!((r.a_n, r.b_n), (1.0, 4.0));
        let r = diagnostics(&g, &w, &[0], 500, 1).unwrap();
        assert_eq!(r.gamma_estimate, 1.0);
        assert_eq!(r.eta_estimate, 1.0);
        assert_eq!(r.c_inf_norm, 1.0);

        let dup = GramCache::from_parts(DMatrix::from_element(2, 2, 1.0), DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let r = diagnostics(&dup, &WeightVector::uniform(2), &[0], 10, 1).unwrap();
        assert!(r.eta_estimate <= 0.0);

        assert!(diagnostics(&g, &w, &[], 1, 1).is_err());
        assert!(diagnostics(&g, &w, &[0, 1, 2], 1, 1).is_err());
    }
}
