//! Command-line front end for the `lags` estimator.
//!
//! Every command writes a single CSV or JSON document to `--out` (or
//! standard output). Numbers are rendered without locale and output depends
//! only on the flags and the seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use lags::baselines::{lasso_cd, lasso_cd_warm, lasso_lambda_max, lasso_objective};
use lags::data::{destandardize, gram, load_csv, standardize, GramCache, StandardizedDesign};
use lags::estimator::{
    dantzig_lambda_bound, fit, fit_path, lambda_max, log_grid, segments_of, weighted_dantzig, DEFAULT_GRID_RATIO,
};
use lags::selection::{fit_grid, prepare, Method, Rule, DEFAULT_SE_FRACTION};
use lags::synth::{paper_beta, BenchMethod, Noise, SimDesign};
use lags::weights::{
    compute, correlation_weights, ols_weights_from_gram, ridge_weights_from_gram, WeightScheme, WeightVector,
    DEFAULT_PHI,
};

mod commands;
pub mod emit;

pub use emit::{emit_path_csv, CoefPath};

#[derive(Parser, Debug)]
#[command(name = "lags", version, about = "Least absolute gradient selector")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit at a single λ.
    Fit(FitArgs),
    /// Fit along a λ grid and report the constant-coefficient segments.
    Path(PathArgs),
    /// Choose λ by K-fold cross-validation.
    Cv(CvArgs),
    /// Write a simulated Gaussian dataset.
    Simulate(SimulateArgs),
    /// Run the simulated benchmark or the support-recovery Monte Carlo.
    Bench(BenchArgs),
    /// Weighted Dantzig selector at a single λ.
    Dantzig(DantzigArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    pub response: String,
    /// Read the file as a gradient system: the response column is `d` and
    /// the remaining columns are the columns of `G`. Nothing is standardized.
    #[arg(long)]
    pub system: bool,
}

#[derive(Args, Debug)]
pub struct WeightArgs {
    /// Defaults to ols when there are more rows than predictors, ridge
    /// otherwise, and uniform with --system.
    #[arg(long, value_enum)]
    pub weights: Option<WeightArg>,
    /// Ridge parameter for --weights ridge.
    #[arg(long, default_value_t = DEFAULT_PHI)]
    pub phi: f64,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Corr,
    Ols,
    Ridge,
    Uniform,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lags,
    Lasso,
    Wds,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Lags => "lags",
            MethodArg::Lasso => "lasso",
            MethodArg::Wds => "wds",
        }
    }

    fn method(self) -> Method {
        match self {
            MethodArg::Lags => Method::Lags,
            MethodArg::Lasso => Method::Lasso,
            MethodArg::Wds => Method::WeightedDantzig,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchMethodArg {
    Lags,
    Lasso,
    Oracle,
}

impl BenchMethodArg {
    fn method(self) -> BenchMethod {
        match self {
            BenchMethodArg::Lags => BenchMethod::Lags,
            BenchMethodArg::Lasso => BenchMethod::LassoCd,
            BenchMethodArg::Oracle => BenchMethod::HardOracle,
        }
    }
}

/// `auto:K` or an explicit list such as `5,2,1`.
#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    Auto(usize),
    Values(Vec<f64>),
}

pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let s = s.trim();
    if s == "auto" {
        return Ok(GridSpec::Auto(100));
    }
    if let Some(k) = s.strip_prefix("auto:") {
        let k: usize = k.parse().map_err(|_| format!("`{k}` is not a grid size"))?;
        if k == 0 {
            return Err("grid size must be at least 1".into());
        }
        return Ok(GridSpec::Auto(k));
    }
    if s.is_empty() {
        return Ok(GridSpec::Values(Vec::new()));
    }
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err("grid values must be positive and finite".into());
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err("grid values must be strictly descending".into());
    }
    Ok(GridSpec::Values(values))
}

/// `min`, `1se`, `fse` or `fse:F`.
pub fn parse_rule(s: &str) -> Result<Rule, String> {
    match s {
        "min" => Ok(Rule::MinError),
        "1se" => Ok(Rule::OneSe),
        "fse" => Ok(Rule::FractionSe(DEFAULT_SE_FRACTION)),
        _ => {
            let f = s
                .strip_prefix("fse:")
                .ok_or_else(|| format!("unknown rule `{s}`, expected min, 1se or fse:F"))?;
            let f: f64 = f.parse().map_err(|_| format!("`{f}` is not a number"))?;
            if !(f >= 0.0) || !f.is_finite() {
                return Err("SE fraction must be finite and ≥ 0".into());
            }
            Ok(Rule::FractionSe(f))
        }
    }
}

pub(crate) fn rule_label(r: Rule) -> String {
    match r {
        Rule::MinError => "min".into(),
        Rule::OneSe => "1se".into(),
        Rule::FractionSe(f) => format!("fse:{f}"),
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Lags)]
    pub method: MethodArg,
}

#[derive(Args, Debug)]
pub struct DantzigArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Args, Debug)]
pub struct PathArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_parser = parse_grid, default_value = "auto:100")]
    pub lambda_grid: GridSpec,
    /// `λ_min / λ_max` for automatic grids.
    #[arg(long, default_value_t = DEFAULT_GRID_RATIO)]
    pub ratio: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Lags)]
    pub method: MethodArg,
    /// CSV output only: where to write the segments table. Defaults to
    /// `<out>.segments.csv`, or after a blank line on standard output.
    #[arg(long)]
    pub segments: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_parser = parse_grid, default_value = "auto:50")]
    pub lambda_grid: GridSpec,
    #[arg(long, default_value_t = DEFAULT_GRID_RATIO)]
    pub ratio: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Lags)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 5)]
    pub cv_k: usize,
    #[arg(long, value_parser = parse_rule, default_value = "min")]
    pub rule: Rule,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 600)]
    pub n: usize,
    #[arg(long, default_value_t = 60)]
    pub p: usize,
    /// Coefficients are `(p0, p0 − 1, …, 1, 0, …)`.
    #[arg(long, default_value_t = 10)]
    pub p0: usize,
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    #[arg(long, conflicts_with = "sigma")]
    pub snr: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 600)]
    pub n: usize,
    #[arg(long, default_value_t = 60)]
    pub p: usize,
    #[arg(long, default_value_t = 10)]
    pub p0: usize,
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    #[arg(long, default_value_t = 2.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.25)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 5)]
    pub cv_k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "lags,lasso")]
    pub methods: Vec<BenchMethodArg>,
    #[arg(long, default_value_t = 50)]
    pub grid_len: usize,
    #[arg(long, value_parser = parse_rule, default_value = "min")]
    pub rule: Rule,
    /// Large setting: n = 2000 of which 500 train, p = 1000. Slow.
    #[arg(long)]
    pub paper_scale: bool,
    /// Support-recovery Monte Carlo instead of the benchmark. Uses ρ, n, p,
    /// p0, --sigma, --xi and --c; support values are
    /// `(c + 1 + i)·σ·√(2 log p)`.
    #[arg(long)]
    pub theorem3: bool,
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    #[arg(long, default_value_t = 4.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lags(lags::Error),
    Io(io::Error),
}

impl CliError {
    /// 1 for usage errors, 2 for data errors, 3 for solver errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lags(e) if e.is_solver_error() => 3,
            CliError::Lags(lags::Error::InvalidArgument(_) | lags::Error::BadK { .. } | lags::Error::Precondition(_)) => 1,
            CliError::Lags(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lags(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl From<lags::Error> for CliError {
    fn from(e: lags::Error) -> Self {
        CliError::Lags(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match commands::execute(&cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Gradient system, its provenance and the penalty weights of one run.
pub(crate) struct Problem {
    pub gram: GramCache,
    pub design: Option<StandardizedDesign>,
    pub names: Vec<String>,
    pub weights: WeightVector,
    pub weight_name: &'static str,
}

fn weight_name(w: WeightArg) -> &'static str {
    match w {
        WeightArg::Corr => "corr",
        WeightArg::Ols => "ols",
        WeightArg::Ridge => "ridge",
        WeightArg::Uniform => "uniform",
    }
}

pub(crate) fn scheme_of(w: WeightArg, phi: f64) -> WeightScheme {
    match w {
        WeightArg::Corr => WeightScheme::Correlation,
        WeightArg::Ols => WeightScheme::InverseOls,
        WeightArg::Ridge => WeightScheme::InverseRidge(phi),
        WeightArg::Uniform => WeightScheme::Uniform,
    }
}

/// Weight choice for a dataset with `n` rows and `p` predictors.
pub(crate) fn data_weights(w: &WeightArgs, n: usize, p: usize) -> WeightArg {
    w.weights.unwrap_or(if n > p { WeightArg::Ols } else { WeightArg::Ridge })
}

pub(crate) fn load_problem(input: &InputArgs, w: &WeightArgs, method: MethodArg) -> CliResult<Problem> {
    let data = load_csv(&input.input, &input.response)?;
    let names = data.column_names().to_vec();
    if input.system {
        let gram = GramCache::from_parts(data.x().clone(), data.y().clone())?;
        let choice = if method == MethodArg::Lasso {
            WeightArg::Uniform
        } else {
            w.weights.unwrap_or(WeightArg::Uniform)
        };
        let weights = match choice {
            WeightArg::Uniform => WeightVector::uniform(gram.p()),
            WeightArg::Ols => ols_weights_from_gram(&gram)?,
            WeightArg::Ridge => ridge_weights_from_gram(&gram, w.phi)?,
            WeightArg::Corr => {
                if !gram.is_square() {
                    return Err(CliError::Usage("--weights corr with --system needs a square G".into()));
                }
                correlation_weights(gram.xty())
            }
        };
        return Ok(Problem {
            gram,
            design: None,
            names,
            weights,
            weight_name: weight_name(choice),
        });
    }
    let design = standardize(&data)?;
    let gram = gram(&design);
    let choice = if method == MethodArg::Lasso {
        WeightArg::Uniform
    } else {
        data_weights(w, data.n(), data.p())
    };
    let weights = compute(scheme_of(choice, w.phi), &design)?;
    Ok(Problem {
        gram,
        design: Some(design),
        names,
        weights,
        weight_name: weight_name(choice),
    })
}

/// Largest useful λ for `method`; automatic grids run from here down.
pub(crate) fn grid_top(g: &GramCache, w: &WeightVector, method: MethodArg) -> CliResult<f64> {
    let hi = match method {
        MethodArg::Lags => lambda_max(g, w)?,
        MethodArg::Lasso => lasso_lambda_max(g),
        MethodArg::Wds => dantzig_lambda_bound(g, w)?,
    };
    if !(hi > 0.0) {
        return Err(CliError::Lags(lags::Error::InvalidArgument(
            "the zero fit is optimal for every λ".into(),
        )));
    }
    Ok(hi)
}

pub(crate) fn resolve_grid(spec: &GridSpec, ratio: f64, top: impl FnOnce() -> CliResult<f64>) -> CliResult<Vec<f64>> {
    match spec {
        GridSpec::Values(v) => Ok(v.clone()),
        GridSpec::Auto(k) => {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(CliError::Usage(format!("--ratio must be in (0,1), got {ratio}")));
            }
            Ok(log_grid(top()?, ratio, *k))
        }
    }
}

/// Coefficients of `method` along a descending grid. LAGS paths are
/// warm-started; failed points are recorded with their message.
pub(crate) fn coefficient_path(prob: &Problem, grid: &[f64], method: MethodArg) -> CliResult<CoefPath> {
    let (betas, failures) = match method {
        MethodArg::Lags => {
            let r = fit_path(&prob.gram, grid, &prob.weights)?;
            (r.fits.into_iter().map(|f| f.map(|f| f.beta)).collect(), r.failures)
        }
        MethodArg::Lasso => {
            let mut start = DVector::zeros(prob.gram.p());
            let mut betas = Vec::with_capacity(grid.len());
            let mut failures = Vec::new();
            for (i, &lambda) in grid.iter().enumerate() {
                match lasso_cd_warm(&prob.gram, lambda, &start) {
                    Ok(f) => {
                        start = f.beta.clone();
                        betas.push(Some(f.beta));
                    }
                    Err(e) => {
                        failures.push((i, e.to_string()));
                        betas.push(None);
                    }
                }
            }
            (betas, failures)
        }
        MethodArg::Wds => {
            let mut betas = Vec::with_capacity(grid.len());
            let mut failures = Vec::new();
            for (i, &lambda) in grid.iter().enumerate() {
                match weighted_dantzig(&prob.gram, lambda, &prob.weights) {
                    Ok(f) => betas.push(Some(f.beta)),
                    Err(e) => {
                        failures.push((i, e.to_string()));
                        betas.push(None);
                    }
                }
            }
            (betas, failures)
        }
    };
    let refs: Vec<Option<&DVector<f64>>> = betas.iter().map(Option::as_ref).collect();
    let segments = segments_of(grid, &refs);
    Ok(CoefPath {
        lambdas: grid.to_vec(),
        betas,
        segments,
        failures,
    })
}

/// Single-λ fit of `method`: `(β, objective, degenerate, iterations)`.
pub(crate) fn single_fit(prob: &Problem, lambda: f64, method: MethodArg) -> CliResult<SingleFit> {
    match method {
        MethodArg::Lags => {
            let f = fit(&prob.gram, lambda, &prob.weights, None)?;
            Ok(SingleFit {
                beta: f.beta,
                objective: f.objective,
                degenerate: Some(f.degenerate),
                iterations: f.iterations,
            })
        }
        MethodArg::Wds => {
            let f = weighted_dantzig(&prob.gram, lambda, &prob.weights)?;
            Ok(SingleFit {
                beta: f.beta,
                objective: f.objective,
                degenerate: Some(f.degenerate),
                iterations: f.iterations,
            })
        }
        MethodArg::Lasso => {
            let f = lasso_cd(&prob.gram, lambda)?;
            Ok(SingleFit {
                objective: lasso_objective(&prob.gram, &f.beta, lambda),
                beta: f.beta,
                degenerate: None,
                iterations: f.sweeps,
            })
        }
    }
}

pub(crate) struct SingleFit {
    pub beta: DVector<f64>,
    pub objective: f64,
    pub degenerate: Option<bool>,
    pub iterations: usize,
}

/// Full-data refit at the chosen λ, on the standardized scale.
pub(crate) fn refit(
    data: &lags::data::Dataset,
    scheme: WeightScheme,
    method: MethodArg,
    lambda: f64,
) -> CliResult<(DVector<f64>, f64, DVector<f64>)> {
    let prep = prepare(data, scheme, method.method())?;
    let beta = fit_grid(&prep, &[lambda], method.method())
        .pop()
        .expect("one grid point")?;
    let (intercept, raw) = destandardize(&beta, &prep.design);
    Ok((beta, intercept, raw))
}

pub(crate) fn bench_design(a: &BenchArgs) -> CliResult<(SimDesign, f64)> {
    let (n, p, frac) = if a.paper_scale {
        (2000, 1000, 0.25)
    } else {
        (a.n, a.p, a.train_fraction)
    };
    if a.p0 > p {
        return Err(CliError::Usage(format!("--p0 {} exceeds --p {p}", a.p0)));
    }
    if a.theorem3 {
        let scale = a.sigma * (2.0 * (p as f64).ln()).sqrt();
        let beta = DVector::from_fn(p, |i, _| if i < a.p0 { (a.c + 1.0 + i as f64) * scale } else { 0.0 });
        return Ok((SimDesign::new(n, a.rho, beta, Noise::Sigma(a.sigma), a.seed)?, frac));
    }
    Ok((SimDesign::new(n, a.rho, paper_beta(p, a.p0), Noise::Snr(a.snr), a.seed)?, frac))
}

pub(crate) fn simulate_design(a: &SimulateArgs) -> CliResult<SimDesign> {
    if a.p0 > a.p {
        return Err(CliError::Usage(format!("--p0 {} exceeds --p {}", a.p0, a.p)));
    }
    let noise = match (a.snr, a.sigma) {
        (_, Some(s)) => Noise::Sigma(s),
        (Some(s), None) => Noise::Snr(s),
        (None, None) => Noise::Snr(2.0),
    };
    Ok(SimDesign::new(a.n, a.rho, paper_beta(a.p, a.p0), noise, a.seed)?)
}

/// Writes `bytes` to `out`, or to `stdout` when no path is given.
pub(crate) fn deliver(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

pub(crate) fn bench_methods(a: &BenchArgs) -> Vec<BenchMethod> {
    let mut v: Vec<BenchMethod> = Vec::new();
    for m in &a.methods {
        let m = m.method();
        if !v.contains(&m) {
            v.push(m);
        }
    }
    v
}
