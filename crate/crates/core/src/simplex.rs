//! Dense bounded-variable simplex for inequality-form linear programs
//!
//! ```text
//! minimize cᵀx  subject to  A x ≤ b,  l ≤ x ≤ u
//! ```
//!
//! Bounds may be infinite, so free variables are handled natively instead of
//! being split into positive and negative parts. Every row receives a slack
//! variable; the slack-augmented variable list is `[x_0 .. x_{m-1}, s_0 ..
//! s_{k-1}]` and a [`Basis`] is `k` distinct indices into that list.
//!
//! The basis inverse is kept as a dense LU factorization with a product-form
//! eta file on top, refactorized every [`SimplexOptions::refactor_every`]
//! pivots. Pricing is Dantzig's rule until [`SimplexOptions::bland_after`]
//! degenerate pivots have happened, after which Bland's smallest-index rule
//! is used for the rest of the solve.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Inequality-form linear program.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    c: Vec<f64>,
    a: DMatrix<f64>,
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(
        c: Vec<f64>,
        a: DMatrix<f64>,
        b: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let m = c.len();
        if a.ncols() != m || lower.len() != m || upper.len() != m {
            return Err(Error::MalformedLp(format!(
                "{} objective coefficients, {} matrix columns, {} lower and {} upper bounds",
                m,
                a.ncols(),
                lower.len(),
                upper.len()
            )));
        }
        if a.nrows() != b.len() {
            return Err(Error::MalformedLp(format!(
                "{} matrix rows but {} right-hand sides",
                a.nrows(),
                b.len()
            )));
        }
        if c.iter().chain(a.iter()).chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::MalformedLp("non-finite coefficient".into()));
        }
        for j in 0..m {
            if lower[j].is_nan() || upper[j].is_nan() || lower[j] > upper[j] {
                return Err(Error::MalformedLp(format!("bad bounds on variable {j}")));
            }
            if lower[j] == f64::INFINITY || upper[j] == f64::NEG_INFINITY {
                return Err(Error::MalformedLp(format!("empty bounds on variable {j}")));
            }
        }
        Ok(LpProblem {
            c,
            a,
            b,
            lower,
            upper,
        })
    }

    /// Problem with all variables restricted to `x ≥ 0`.
    pub fn nonnegative(c: Vec<f64>, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let m = c.len();
        LpProblem::new(c, a, b, vec![0.0; m], vec![f64::INFINITY; m])
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Number of structural variables.
    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    /// Number of inequality rows.
    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

/// Basic variables, as indices into the slack-augmented variable list,
/// plus the nonbasic variables that sit at their upper bound.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Basis {
    basic_indices: Vec<usize>,
    at_upper: Vec<usize>,
}

impl Basis {
    pub fn new(basic_indices: Vec<usize>) -> Self {
        Basis {
            basic_indices,
            at_upper: Vec::new(),
        }
    }

    pub fn with_upper(basic_indices: Vec<usize>, at_upper: Vec<usize>) -> Self {
        Basis {
            basic_indices,
            at_upper,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.basic_indices
    }

    pub fn at_upper(&self) -> &[usize] {
        &self.at_upper
    }

    pub fn len(&self) -> usize {
        self.basic_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basic_indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Optimality residuals of a primal-dual pair, all expressed as
/// nonnegative violations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Largest violation of `Ax ≤ b` or of a variable bound.
    pub primal_residual: f64,
    /// Largest reduced cost with the wrong sign.
    pub dual_infeasibility: f64,
    /// Largest product of a nonzero multiplier and its constraint slack.
    pub complementarity: f64,
    /// `|cᵀx − dual objective|`.
    pub duality_gap: f64,
}

impl Certificate {
    /// Checks the residuals against the solver tolerances: primal ≤
    /// 1e-8·(1+‖b‖∞), reduced costs ≥ −1e-9·max(1,‖c‖∞), complementary
    /// slackness and duality gap ≤ 1e-8 (relative to the problem scale).
    pub fn is_certified(&self, problem: &LpProblem, objective: f64) -> bool {
        let b_scale = 1.0 + inf_norm(problem.b());
        let c_scale = inf_norm(problem.c()).max(1.0);
        self.primal_residual <= 1e-8 * b_scale
            && self.dual_infeasibility <= 1e-9 * c_scale
            && self.complementarity <= 1e-8 * b_scale * c_scale
            && self.duality_gap <= 1e-8 * (1.0 + objective.abs()).max(b_scale * c_scale)
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Structural variable values (empty unless optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    pub basis: Basis,
    pub status: LpStatus,
    /// Pivots performed, bound flips included.
    pub iterations: usize,
    /// Row multipliers `y` (all ≤ 0 at an optimum of a ≤-form minimization).
    pub duals: Vec<f64>,
    /// A nonbasic column has zero reduced cost at the optimum, so other
    /// optimal vertices may exist.
    pub degenerate: bool,
    pub certificate: Option<Certificate>,
}

impl LpSolution {
    fn without_point(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            x: Vec::new(),
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            basis: Basis::default(),
            status,
            iterations,
            duals: Vec::new(),
            degenerate: false,
            certificate: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Relative primal feasibility tolerance.
    pub feas_tol: f64,
    /// Reduced-cost optimality tolerance (scaled by max(1, ‖c‖∞)).
    pub opt_tol: f64,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
    /// Hard cap on pivots; `None` picks a size-dependent default.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            pivot_tol: 1e-9,
            feas_tol: 1e-8,
            opt_tol: 1e-9,
            bland_after: 50,
            refactor_every: 64,
            max_iterations: None,
        }
    }
}

pub fn solve(p: &LpProblem) -> Result<LpSolution> {
    solve_with(p, &SimplexOptions::default(), None)
}

/// Solves starting from `start`. Falls back to a cold start when the basis
/// is malformed, singular or primal infeasible for `p`.
pub fn solve_warm(p: &LpProblem, start: &Basis) -> Result<LpSolution> {
    solve_with(p, &SimplexOptions::default(), Some(start))
}

pub fn solve_with(p: &LpProblem, opts: &SimplexOptions, start: Option<&Basis>) -> Result<LpSolution> {
    if let Some(basis) = start {
        let mut s = Solver::new(p, opts);
        if s.install_basis(basis)? {
            return s.finish_phase_two();
        }
    }
    let mut s = Solver::new(p, opts);
    s.install_cold()?;
    if s.has_artificials() {
        s.phase_one()?;
        if s.status != LpStatus::Optimal {
            return Ok(LpSolution::without_point(s.status, s.iterations));
        }
    }
    s.finish_phase_two()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable, held at 0.
    Free,
}

/// Elementary column transform `E = I + (d − e_r) e_rᵀ`.
struct Eta {
    row: usize,
    col: Vec<f64>,
}

/// Dense LU factorization with partial pivoting, `P B = L U`.
struct DenseLu {
    k: usize,
    /// Row-major; strict lower part holds L (unit diagonal), upper holds U.
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(mut lu: Vec<f64>, k: usize, tol: f64) -> Option<Self> {
        let mut perm: Vec<usize> = (0..k).collect();
        let scale = lu.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for col in 0..k {
            let (piv, max) = (col..k)
                .map(|r| (r, lu[r * k + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if max <= tol * scale {
                return None;
            }
            if piv != col {
                for j in 0..k {
                    lu.swap(piv * k + j, col * k + j);
                }
                perm.swap(piv, col);
            }
            let d = lu[col * k + col];
            for r in col + 1..k {
                let f = lu[r * k + col] / d;
                if f != 0.0 {
                    lu[r * k + col] = f;
                    for j in col + 1..k {
                        lu[r * k + j] -= f * lu[col * k + j];
                    }
                } else {
                    lu[r * k + col] = 0.0;
                }
            }
        }
        Some(DenseLu { k, lu, perm })
    }

    /// Overwrites `v` with `B⁻¹ v`.
    fn solve(&self, v: &mut [f64]) {
        let k = self.k;
        let mut w: Vec<f64> = self.perm.iter().map(|&i| v[i]).collect();
        for i in 0..k {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[i * k + j] * w[j];
            }
            w[i] = s;
        }
        for i in (0..k).rev() {
            let mut s = w[i];
            for j in i + 1..k {
                s -= self.lu[i * k + j] * w[j];
            }
            w[i] = s / self.lu[i * k + i];
        }
        v.copy_from_slice(&w);
    }

    /// Overwrites `v` with `B⁻ᵀ v`.
    fn solve_transpose(&self, v: &mut [f64]) {
        let k = self.k;
        let mut w = v.to_vec();
        // Uᵀ z = v
        for i in 0..k {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[j * k + i] * w[j];
            }
            w[i] = s / self.lu[i * k + i];
        }
        // Lᵀ t = z
        for i in (0..k).rev() {
            let mut s = w[i];
            for j in i + 1..k {
                s -= self.lu[j * k + i] * w[j];
            }
            w[i] = s;
        }
        for (i, &pi) in self.perm.iter().enumerate() {
            v[pi] = w[i];
        }
    }
}

struct Solver<'a> {
    p: &'a LpProblem,
    /// Nonzeros of each structural column.
    cols: Vec<Vec<(usize, f64)>>,
    opts: SimplexOptions,
    m: usize,
    k: usize,
    /// Row of each artificial column (coefficient −1 in that row).
    art_rows: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    lu: Option<DenseLu>,
    etas: Vec<Eta>,
    bland: bool,
    degenerate_pivots: usize,
    iterations: usize,
    max_iterations: usize,
    status: LpStatus,
    opt_tol: f64,
    feas_tol: f64,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<'a> Solver<'a> {
    fn new(p: &'a LpProblem, opts: &SimplexOptions) -> Self {
        let m = p.n_vars();
        let k = p.n_rows();
        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        lower.extend(std::iter::repeat_n(0.0, k));
        upper.extend(std::iter::repeat_n(f64::INFINITY, k));
        let max_iterations = opts
            .max_iterations
            .unwrap_or_else(|| 50_000usize.max(50 * (m + k)));
        let cols = (0..m)
            .map(|j| {
                p.a.column(j)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v))
                    .collect()
            })
            .collect();
        Solver {
            p,
            cols,
            opts: *opts,
            m,
            k,
            art_rows: Vec::new(),
            lower,
            upper,
            x: vec![0.0; m + k],
            state: vec![VarState::AtLower; m + k],
            basis: Vec::with_capacity(k),
            lu: None,
            etas: Vec::new(),
            bland: false,
            degenerate_pivots: 0,
            iterations: 0,
            max_iterations,
            status: LpStatus::Optimal,
            opt_tol: opts.opt_tol * inf_norm(&p.c).max(1.0),
            feas_tol: opts.feas_tol * (1.0 + inf_norm(&p.b)),
        }
    }

    fn n_total(&self) -> usize {
        self.m + self.k + self.art_rows.len()
    }

    fn has_artificials(&self) -> bool {
        !self.art_rows.is_empty()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.m + self.k
    }

    fn place_nonbasic(&mut self, j: usize) {
        let (l, u) = (self.lower[j], self.upper[j]);
        if l.is_finite() {
            self.x[j] = l;
            self.state[j] = VarState::AtLower;
        } else if u.is_finite() {
            self.x[j] = u;
            self.state[j] = VarState::AtUpper;
        } else {
            self.x[j] = 0.0;
            self.state[j] = VarState::Free;
        }
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.m {
            for &(i, v) in &self.cols[j] {
                out[i] = v;
            }
        } else if j < self.m + self.k {
            out[j - self.m] = 1.0;
        } else {
            out[self.art_rows[j - self.m - self.k]] = -1.0;
        }
    }

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.m {
            self.cols[j].iter().map(|&(i, v)| v * y[i]).sum()
        } else if j < self.m + self.k {
            y[j - self.m]
        } else {
            -y[self.art_rows[j - self.m - self.k]]
        }
    }

    fn install_cold(&mut self) -> Result<()> {
        for j in 0..self.m {
            self.place_nonbasic(j);
        }
        let mut residual = self.p.b.clone();
        for j in 0..self.m {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, v) in &self.cols[j] {
                    residual[i] -= v * xj;
                }
            }
        }
        for (i, &r) in residual.iter().enumerate() {
            let slack = self.m + i;
            if r >= 0.0 {
                self.basis.push(slack);
                self.state[slack] = VarState::Basic;
                self.x[slack] = r;
            } else {
                self.place_nonbasic(slack);
                let art = self.m + self.k + self.art_rows.len();
                self.art_rows.push(i);
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.x.push(-r);
                self.state.push(VarState::Basic);
                self.basis.push(art);
            }
        }
        self.refactor()
    }

    /// Returns false when the basis cannot be used and a cold start is needed.
    fn install_basis(&mut self, basis: &Basis) -> Result<bool> {
        let n = self.m + self.k;
        let idx = basis.indices();
        if idx.len() != self.k {
            return Ok(false);
        }
        let mut seen = vec![false; n];
        for &j in idx {
            if j >= n || seen[j] {
                return Ok(false);
            }
            seen[j] = true;
        }
        for j in 0..n {
            if seen[j] {
                self.state[j] = VarState::Basic;
            } else {
                self.place_nonbasic(j);
            }
        }
        for &j in basis.at_upper() {
            if j < n && !seen[j] && self.upper[j].is_finite() {
                self.x[j] = self.upper[j];
                self.state[j] = VarState::AtUpper;
            }
        }
        self.basis = idx.to_vec();
        if self.refactor().is_err() {
            return Ok(false);
        }
        let feasible = self.basis.iter().all(|&j| {
            self.x[j] >= self.lower[j] - self.feas_tol && self.x[j] <= self.upper[j] + self.feas_tol
        });
        Ok(feasible)
    }

    fn refactor(&mut self) -> Result<()> {
        let k = self.k;
        let mut dense = vec![0.0; k * k];
        let mut col = vec![0.0; k];
        for (pos, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for r in 0..k {
                dense[r * k + pos] = col[r];
            }
        }
        self.lu = Some(
            DenseLu::factor(dense, k, self.opts.pivot_tol)
                .ok_or_else(|| Error::NumericalBreakdown("singular basis matrix".into()))?,
        );
        self.etas.clear();
        self.recompute_basic_values();
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let mut rhs = self.p.b.clone();
        for j in 0..self.n_total() {
            let xj = self.x[j];
            if self.state[j] == VarState::Basic || xj == 0.0 {
                continue;
            }
            if j < self.m {
                for &(i, v) in &self.cols[j] {
                    rhs[i] -= v * xj;
                }
            } else if j < self.m + self.k {
                rhs[j - self.m] -= xj;
            } else {
                rhs[self.art_rows[j - self.m - self.k]] += xj;
            }
        }
        self.ftran(&mut rhs);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[pos];
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        if let Some(lu) = &self.lu {
            lu.solve(v);
        }
        for eta in &self.etas {
            let xr = v[eta.row] / eta.col[eta.row];
            for (i, d) in eta.col.iter().enumerate() {
                if i != eta.row {
                    v[i] -= d * xr;
                }
            }
            v[eta.row] = xr;
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = v[eta.row];
            for (i, d) in eta.col.iter().enumerate() {
                if i != eta.row {
                    s -= d * v[i];
                }
            }
            v[eta.row] = s / eta.col[eta.row];
        }
        if let Some(lu) = &self.lu {
            lu.solve_transpose(v);
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        self.btran(&mut y);
        y
    }

    fn phase_one(&mut self) -> Result<()> {
        let n = self.n_total();
        let mut cost = vec![0.0; n];
        for c in cost.iter_mut().skip(self.m + self.k) {
            *c = 1.0;
        }
        let saved_tol = self.opt_tol;
        self.opt_tol = self.opts.opt_tol;
        let outcome = self.run(&cost)?;
        self.opt_tol = saved_tol;
        debug_assert!(matches!(outcome, Outcome::Optimal));
        let infeasibility: f64 = (self.m + self.k..n).map(|j| self.x[j]).sum();
        if infeasibility > self.feas_tol {
            self.status = LpStatus::Infeasible;
            return Ok(());
        }
        self.drive_out_artificials()?;
        for j in self.m + self.k..n {
            self.upper[j] = 0.0;
            if self.state[j] != VarState::Basic {
                self.x[j] = 0.0;
                self.state[j] = VarState::AtLower;
            }
        }
        Ok(())
    }

    /// Pivots basic artificials (all at zero) out of the basis where a
    /// non-artificial column can replace them.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let mut col = vec![0.0; self.k];
        for pos in 0..self.k {
            let leaving = self.basis[pos];
            if !self.is_artificial(leaving) {
                continue;
            }
            let mut row = vec![0.0; self.k];
            row[pos] = 1.0;
            self.btran(&mut row);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.m + self.k {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                let v = self.column_dot(j, &row).abs();
                if v > self.opts.pivot_tol && best.is_none_or(|(_, b)| v > b * (1.0 + 1e-12)) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                self.column(q, &mut col);
                self.ftran(&mut col);
                self.x[leaving] = 0.0;
                self.state[leaving] = VarState::AtLower;
                self.state[q] = VarState::Basic;
                self.basis[pos] = q;
                self.etas.push(Eta {
                    row: pos,
                    col: col.clone(),
                });
                if self.etas.len() >= self.opts.refactor_every {
                    self.refactor()?;
                }
            }
        }
        self.refactor()
    }

    fn finish_phase_two(mut self) -> Result<LpSolution> {
        let n = self.n_total();
        let mut cost = self.p.c.clone();
        cost.resize(n, 0.0);
        match self.run(&cost)? {
            Outcome::Unbounded => Ok(LpSolution::without_point(LpStatus::Unbounded, self.iterations)),
            Outcome::Optimal => {
                self.refactor()?;
                let y = self.duals(&cost);
                let mut degenerate = false;
                for j in 0..self.m + self.k {
                    if self.state[j] == VarState::Basic || self.lower[j] == self.upper[j] {
                        continue;
                    }
                    let d = cost[j] - self.column_dot(j, &y);
                    if d.abs() <= self.opt_tol {
                        degenerate = true;
                        break;
                    }
                }
                let x = self.x[..self.m].to_vec();
                let objective = self.p.objective(&x);
                let certificate = certify(self.p, &x, &y);
                let basic: Vec<usize> = self.basis.iter().copied().filter(|&j| j < self.m + self.k).collect();
                let at_upper: Vec<usize> = (0..self.m + self.k)
                    .filter(|&j| self.state[j] == VarState::AtUpper)
                    .collect();
                Ok(LpSolution {
                    x,
                    objective,
                    basis: Basis::with_upper(basic, at_upper),
                    status: LpStatus::Optimal,
                    iterations: self.iterations,
                    duals: y,
                    degenerate,
                    certificate: Some(certificate),
                })
            }
        }
    }

    fn current_objective(&self, cost: &[f64]) -> f64 {
        cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    fn run(&mut self, cost: &[f64]) -> Result<Outcome> {
        let n = self.n_total();
        let mut alpha = vec![0.0; self.k];
        let mut last_objective = self.current_objective(cost);
        loop {
            if self.etas.len() >= self.opts.refactor_every {
                self.refactor()?;
            }
            let y = self.duals(cost);

            // Pricing.
            let mut entering: Option<(usize, f64, f64)> = None; // (index, direction, score)
            for j in 0..n {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = cost[j] - self.column_dot(j, &y);
                let dir = match st {
                    VarState::AtLower if d < -self.opt_tol => 1.0,
                    VarState::AtUpper if d > self.opt_tol => -1.0,
                    VarState::Free if d.abs() > self.opt_tol => -d.signum(),
                    _ => continue,
                };
                if self.bland {
                    entering = Some((j, dir, d.abs()));
                    break;
                }
                if entering.is_none_or(|(_, _, s)| d.abs() > s) {
                    entering = Some((j, dir, d.abs()));
                }
            }
            let Some((q, dir, _)) = entering else {
                return Ok(Outcome::Optimal);
            };

            if self.iterations >= self.max_iterations {
                return Err(Error::IterationLimit(self.max_iterations));
            }
            self.iterations += 1;

            self.column(q, &mut alpha);
            self.ftran(&mut alpha);

            // Ratio test over basic variables; x_B(t) = x_B − dir·t·α.
            let mut step = f64::INFINITY;
            let mut leave: Option<(usize, bool)> = None; // (basis position, hits upper)
            let mut leave_alpha = 0.0f64;
            for (pos, &j) in self.basis.iter().enumerate() {
                let a = alpha[pos];
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let rate = -dir * a;
                let (t, hits_upper) = if rate < 0.0 {
                    if !self.lower[j].is_finite() {
                        continue;
                    }
                    (((self.x[j] - self.lower[j]) / -rate).max(0.0), false)
                } else {
                    if !self.upper[j].is_finite() {
                        continue;
                    }
                    (((self.upper[j] - self.x[j]) / rate).max(0.0), true)
                };
                let tie = 1e-12 * (1.0 + step.min(t));
                let better = match leave {
                    None => true,
                    Some((best_pos, _)) => {
                        if t < step - tie {
                            true
                        } else if t <= step + tie {
                            if self.bland {
                                j < self.basis[best_pos]
                            } else {
                                a.abs() > leave_alpha.abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = if leave.is_none() { t } else { step.min(t) };
                    leave = Some((pos, hits_upper));
                    leave_alpha = a;
                }
            }

            let range = self.upper[q] - self.lower[q];
            if range.is_finite() && range <= step {
                // Bound flip of the entering variable.
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                for (pos, &j) in self.basis.iter().enumerate() {
                    self.x[j] -= dir * range * alpha[pos];
                }
            } else {
                let Some((r, hits_upper)) = leave else {
                    return Ok(Outcome::Unbounded);
                };
                let leaving = self.basis[r];
                self.x[q] += dir * step;
                for (pos, &j) in self.basis.iter().enumerate() {
                    if pos != r {
                        self.x[j] -= dir * step * alpha[pos];
                    }
                }
                if hits_upper {
                    self.x[leaving] = self.upper[leaving];
                    self.state[leaving] = VarState::AtUpper;
                } else {
                    self.x[leaving] = self.lower[leaving];
                    self.state[leaving] = VarState::AtLower;
                }
                self.state[q] = VarState::Basic;
                self.basis[r] = q;
                self.etas.push(Eta {
                    row: r,
                    col: alpha.clone(),
                });
                if step <= 1e-12 {
                    self.degenerate_pivots += 1;
                    if self.degenerate_pivots >= self.opts.bland_after {
                        self.bland = true;
                    }
                }
            }

            let objective = self.current_objective(cost);
            debug_assert!(
                objective <= last_objective + 1e-7 * (1.0 + last_objective.abs()),
                "objective increased from {last_objective} to {objective}"
            );
            last_objective = objective;
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residuals of the primal point `x` and row multipliers `duals` for `p`.
pub fn certify(p: &LpProblem, x: &[f64], duals: &[f64]) -> Certificate {
    let m = p.n_vars();
    let ax = &p.a * nalgebra::DVector::from_column_slice(x);
    let mut primal: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let mut dual_obj = 0.0;
    for i in 0..p.n_rows() {
        let slack = p.b[i] - ax[i];
        primal = primal.max(-slack);
        dual = dual.max(duals[i]);
        comp = comp.max(duals[i].abs() * slack.abs());
        dual_obj += p.b[i] * duals[i];
    }
    let aty = p.a.tr_mul(&nalgebra::DVector::from_column_slice(duals));
    for j in 0..m {
        let (l, u, xj) = (p.lower[j], p.upper[j], x[j]);
        primal = primal.max(l - xj).max(xj - u);
        let d = p.c[j] - aty[j];
        let at_lower = l.is_finite() && (xj - l).abs() <= 1e-9 * (1.0 + l.abs());
        let at_upper = u.is_finite() && (u - xj).abs() <= 1e-9 * (1.0 + u.abs());
        let violation = match (at_lower, at_upper) {
            (true, true) => 0.0,
            (true, false) => (-d).max(0.0),
            (false, true) => d.max(0.0),
            (false, false) => d.abs(),
        };
        dual = dual.max(violation);
        if d > 0.0 && l.is_finite() {
            comp = comp.max(d * (xj - l).abs());
            dual_obj += d * l;
        } else if d < 0.0 && u.is_finite() {
            comp = comp.max(-d * (u - xj).abs());
            dual_obj += d * u;
        } else {
            dual_obj += d * xj;
        }
    }
    Certificate {
        primal_residual: primal.max(0.0),
        dual_infeasibility: dual,
        complementarity: comp,
        duality_gap: (p.objective(x) - dual_obj).abs(),
    }
}

/// Default cap on the number of constraint subsets examined by
/// [`enumerate_vertices_bruteforce`].
pub const VERTEX_ENUMERATION_CAP: u128 = 2_000_000;

/// Every vertex of the feasible region with its objective value, found by
/// solving each `m`-subset of active constraints (rows and finite bounds).
///
/// Exponential; meant as a test oracle for problems with a handful of
/// variables.
pub fn enumerate_vertices_bruteforce(p: &LpProblem) -> Result<Vec<(Vec<f64>, f64)>> {
    let m = p.n_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = (0..p.n_rows())
        .map(|i| (p.a.row(i).iter().copied().collect(), p.b[i]))
        .collect();
    for j in 0..m {
        if p.lower[j].is_finite() {
            let mut r = vec![0.0; m];
            r[j] = -1.0;
            rows.push((r, -p.lower[j]));
        }
        if p.upper[j].is_finite() {
            let mut r = vec![0.0; m];
            r[j] = 1.0;
            rows.push((r, p.upper[j]));
        }
    }
    let total = rows.len();
    let combos = binomial(total as u128, m as u128);
    if combos > VERTEX_ENUMERATION_CAP {
        return Err(Error::TooLarge(combos));
    }
    let mut vertices: Vec<(Vec<f64>, f64)> = Vec::new();
    if m == 0 || total < m {
        return Ok(vertices);
    }
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let a = DMatrix::from_fn(m, m, |i, j| rows[subset[i]].0[j]);
        let rhs = DMatrix::from_fn(m, 1, |i, _| rows[subset[i]].1);
        let lu = a.lu();
        let scale = lu.u().diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let min_piv = lu.u().diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if scale > 0.0 && min_piv > 1e-10 * scale {
            if let Some(sol) = lu.solve(&rhs) {
                let x: Vec<f64> = sol.iter().copied().collect();
                let feasible = rows.iter().all(|(r, b)| {
                    let lhs: f64 = r.iter().zip(&x).map(|(a, x)| a * x).sum();
                    lhs <= b + 1e-9 * (1.0 + b.abs())
                });
                let duplicate = vertices
                    .iter()
                    .any(|(v, _)| v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs())));
                if feasible && !duplicate {
                    let obj = p.objective(&x);
                    vertices.push((x, obj));
                }
            }
        }
        if !next_combination(&mut subset, total) {
            break;
        }
    }
    Ok(vertices)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(c: &[f64], a: &[&[f64]], b: &[f64], lower: &[f64], upper: &[f64]) -> LpProblem {
        let rows = a.len();
        let cols = c.len();
        let flat: Vec<f64> = a.iter().flat_map(|r| r.iter().copied()).collect();
        LpProblem::new(
            c.to_vec(),
            DMatrix::from_row_slice(rows, cols, &flat),
            b.to_vec(),
            lower.to_vec(),
            upper.to_vec(),
        )
        .unwrap()
    }

    fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem {
        let m = rng.random_range(1..=6);
        let k = rng.random_range(1..=8);
        let c: Vec<f64> = (0..m).map(|_| rng.random_range(-5..=5) as f64).collect();
        let a = DMatrix::from_fn(k, m, |_, _| rng.random_range(-4..=4) as f64);
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(-3..=8) as f64).collect();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for _ in 0..m {
            match rng.random_range(0..3) {
                0 => {
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                }
                1 => {
                    let l = rng.random_range(-3..=0) as f64;
                    lower.push(l);
                    upper.push(l + rng.random_range(1..=4) as f64);
                }
                _ => {
                    lower.push(rng.random_range(-4..=0) as f64);
                    upper.push(f64::INFINITY);
                }
            }
        }
        LpProblem::new(c, a, b, lower, upper).unwrap()
    }

    #[test]
    fn single_variable_bound() {
        let p = lp(&[-1.0], &[&[1.0]], &[5.0], &[0.0], &[f64::INFINITY]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.x[0], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.objective, -5.0, epsilon = 1e-12);
        assert!(s.certificate.unwrap().is_certified(&p, s.objective));

        let verts = enumerate_vertices_bruteforce(&p).unwrap();
        let best = verts.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_abs_diff_eq!(best.0[0], 5.0, epsilon = 1e-12);
        assert_eq!(verts.iter().filter(|v| (v.1 + 5.0).abs() < 1e-9).count(), 1);
    }

    #[test]
    fn detects_infeasible() {
        let p = LpProblem::nonnegative(
            vec![1.0, 1.0],
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            vec![-1.0],
        )
        .unwrap();
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);
        assert!(enumerate_vertices_bruteforce(&p).unwrap().is_empty());
    }

    #[test]
    fn detects_unbounded() {
        let p = lp(&[-1.0, 0.0], &[&[1.0, -1.0]], &[1.0], &[0.0, 0.0], &[f64::INFINITY; 2]);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_bound_flips() {
        // min |x - 3| written with a free x and an epigraph variable t.
        let p = lp(
            &[0.0, 1.0],
            &[&[1.0, -1.0], &[-1.0, -1.0]],
            &[3.0, -3.0],
            &[f64::NEG_INFINITY, f64::NEG_INFINITY],
            &[f64::INFINITY, f64::INFINITY],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.x[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.objective, 0.0, epsilon = 1e-12);

        // max x + y on the box [0,1]² with a slack row: pure bound flips.
        let p = lp(&[-1.0, -1.0], &[&[1.0, 1.0]], &[10.0], &[0.0, 0.0], &[1.0, 1.0]);
        let s = solve(&p).unwrap();
        assert_abs_diff_eq!(s.objective, -2.0, epsilon = 1e-12);
        assert!(s.certificate.unwrap().is_certified(&p, s.objective));
    }

    #[test]
    fn warm_start_from_own_basis_takes_no_pivots() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 20 {
            let p = random_lp(&mut rng);
            let cold = solve(&p).unwrap();
            if cold.status != LpStatus::Optimal || cold.basis.len() != p.n_rows() {
                continue;
            }
            let warm = solve_warm(&p, &cold.basis).unwrap();
            assert_eq!(warm.iterations, 0);
            assert_abs_diff_eq!(warm.objective, cold.objective, epsilon = 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn singular_or_malformed_warm_start_falls_back() {
        let p = lp(
            &[-1.0, -2.0],
            &[&[1.0, 1.0], &[1.0, 3.0], &[2.0, 2.0]],
            &[4.0, 6.0, 8.0],
            &[0.0, 0.0],
            &[f64::INFINITY; 2],
        );
        let cold = solve(&p).unwrap();
        // Columns 0 and 1 with slack 2: rows 0 and 2 of that basis are
        // proportional, so the basis matrix is singular.
        let singular = Basis::new(vec![0, 1, 4]);
        let warm = solve_warm(&p, &singular).unwrap();
        assert_abs_diff_eq!(warm.objective, cold.objective, epsilon = 1e-9);
        for bad in [vec![0, 0, 1], vec![0, 1], vec![0, 1, 99]] {
            let warm = solve_warm(&p, &Basis::new(bad)).unwrap();
            assert_abs_diff_eq!(warm.objective, cold.objective, epsilon = 1e-9);
        }
    }

    #[test]
    fn cycling_example_terminates() {
        // Chvátal's degenerate cycling example (as a minimization).
        let p = lp(
            &[-10.0, 57.0, 9.0, 24.0],
            &[
                &[0.5, -5.5, -2.5, 9.0],
                &[0.5, -1.5, -0.5, 1.0],
                &[1.0, 0.0, 0.0, 0.0],
            ],
            &[0.0, 0.0, 1.0],
            &[0.0; 4],
            &[f64::INFINITY; 4],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, -1.0, epsilon = 1e-9);
        let verts = enumerate_vertices_bruteforce(&p).unwrap();
        let best = verts.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(best, -1.0, epsilon = 1e-9);

        // Forcing Bland's rule from the first pivot must reach the same optimum.
        let opts = SimplexOptions {
            bland_after: 0,
            ..Default::default()
        };
        let s = solve_with(&p, &opts, None).unwrap();
        assert_abs_diff_eq!(s.objective, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn frequent_refactorization_gives_same_answer() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let opts = SimplexOptions {
            refactor_every: 1,
            ..Default::default()
        };
        for _ in 0..50 {
            let p = random_lp(&mut rng);
            let a = solve(&p).unwrap();
            let b = solve_with(&p, &opts, None).unwrap();
            assert_eq!(a.status, b.status);
            if a.status == LpStatus::Optimal {
                assert_abs_diff_eq!(a.objective, b.objective, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn random_lps_agree_with_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let p = random_lp(&mut rng);
            let s = solve(&p).unwrap();
            let verts = enumerate_vertices_bruteforce(&p).unwrap();
            match s.status {
                LpStatus::Optimal => {
                    let best = verts.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
                    assert_abs_diff_eq!(s.objective, best, epsilon = 1e-9);
                    assert!(s.certificate.unwrap().is_certified(&p, s.objective), "{p:?}");
                }
                LpStatus::Infeasible => assert!(verts.is_empty(), "{p:?}"),
                LpStatus::Unbounded => {}
            }
        }
    }

    #[test]
    fn enumeration_cap() {
        let m = 30;
        let p = LpProblem::nonnegative(vec![1.0; m], DMatrix::from_element(30, m, 1.0), vec![1.0; 30]).unwrap();
        assert!(matches!(enumerate_vertices_bruteforce(&p), Err(Error::TooLarge(_))));
    }

    #[test]
    fn rejects_malformed_problems() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(LpProblem::new(vec![1.0], a.clone(), vec![1.0], vec![1.0], vec![0.0]).is_err());
        assert!(LpProblem::new(vec![1.0, 2.0], a.clone(), vec![1.0], vec![0.0], vec![1.0]).is_err());
        assert!(LpProblem::new(vec![f64::NAN], a, vec![1.0], vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn lu_solves_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = 7;
        let dense: Vec<f64> = (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lu = DenseLu::factor(dense.clone(), k, 1e-12).unwrap();
        let b: Vec<f64> = (0..k).map(|i| i as f64 - 2.0).collect();
        let mut x = b.clone();
        lu.solve(&mut x);
        for i in 0..k {
            let r: f64 = (0..k).map(|j| dense[i * k + j] * x[j]).sum();
            assert_abs_diff_eq!(r, b[i], epsilon = 1e-10);
        }
        let mut y = b.clone();
        lu.solve_transpose(&mut y);
        for j in 0..k {
            let r: f64 = (0..k).map(|i| dense[i * k + j] * y[i]).sum();
            assert_abs_diff_eq!(r, b[j], epsilon = 1e-10);
        }
    }
}
