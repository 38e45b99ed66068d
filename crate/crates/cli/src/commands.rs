use std::io::Write;
use std::path::Path;

use serde::Serialize;

use lags::data::{destandardize, load_csv};
use lags::selection::{cross_validate, prepare};
use lags::synth::{generate, monte_carlo_theorem3, run_benchmark_with, BenchConfig, BENCH_CSV_HEADER};
use lags::weights::WeightScheme;

use crate::emit::{emit_path_csv, emit_segments_csv, emit_table, num};
use crate::{
    bench_design, bench_methods, coefficient_path, data_weights, deliver, grid_top, load_problem, refit,
    resolve_grid, rule_label, scheme_of, simulate_design, single_fit, BenchArgs, CliError, CliResult, Command,
    CvArgs, Format, InputArgs, MethodArg, OutputArgs, PathArgs, SimulateArgs, WeightArg, WeightArgs,
};

pub(crate) fn execute(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Fit(a) => fit_cmd(&a.input, &a.weights, &a.output, a.lambda, a.method, stdout),
        Command::Dantzig(a) => fit_cmd(&a.input, &a.weights, &a.output, a.lambda, MethodArg::Wds, stdout),
        Command::Path(a) => path_cmd(a, stdout),
        Command::Cv(a) => cv_cmd(a, stdout),
        Command::Simulate(a) => simulate_cmd(a, stdout),
        Command::Bench(a) if a.theorem3 => theorem3_cmd(a, stdout, stderr),
        Command::Bench(a) => bench_cmd(a, stdout, stderr),
    }
}

fn json<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

fn out_path(o: &OutputArgs) -> Option<&Path> {
    o.out.as_deref()
}

#[derive(Serialize)]
struct FitReport<'a> {
    method: &'a str,
    lambda: f64,
    weights: &'a str,
    variables: &'a [String],
    /// Coefficients of the fitted system: standardized scale for data.
    beta: Vec<f64>,
    objective: f64,
    active_set: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    raw_coefficients: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degenerate: Option<bool>,
    iterations: usize,
}

fn fit_cmd(
    input: &InputArgs,
    w: &WeightArgs,
    o: &OutputArgs,
    lambda: f64,
    method: MethodArg,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let prob = load_problem(input, w, method)?;
    let f = single_fit(&prob, lambda, method)?;
    let raw = prob.design.as_ref().map(|d| destandardize(&f.beta, d));
    let bytes = match o.format.unwrap_or(Format::Json) {
        Format::Json => json(&FitReport {
            method: method.name(),
            lambda,
            weights: prob.weight_name,
            variables: &prob.names,
            beta: f.beta.iter().copied().collect(),
            objective: f.objective,
            active_set: (0..f.beta.len()).filter(|&j| f.beta[j] != 0.0).collect(),
            intercept: raw.as_ref().map(|r| r.0),
            raw_coefficients: raw.as_ref().map(|r| r.1.iter().copied().collect()),
            degenerate: f.degenerate,
            iterations: f.iterations,
        })?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = prob
                .names
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    vec![
                        num(lambda),
                        name.clone(),
                        num(f.beta[j]),
                        raw.as_ref().map(|r| num(r.1[j])).unwrap_or_default(),
                    ]
                })
                .collect();
            let mut buf = Vec::new();
            emit_table(&mut buf, &["lambda", "variable", "coefficient", "raw_coefficient"], &rows)?;
            buf
        }
    };
    deliver(out_path(o), &bytes, stdout)
}

#[derive(Serialize)]
struct SegmentReport {
    id: usize,
    start: usize,
    end: usize,
    lambda_high: f64,
    lambda_low: f64,
}

#[derive(Serialize)]
struct Failure<'a> {
    index: usize,
    message: &'a str,
}

#[derive(Serialize)]
struct PathReport<'a> {
    method: &'a str,
    weights: &'a str,
    variables: &'a [String],
    lambdas: &'a [f64],
    coefficients: Vec<Option<Vec<f64>>>,
    segment_ids: Vec<usize>,
    segments: Vec<SegmentReport>,
    failures: Vec<Failure<'a>>,
}

fn path_cmd(a: &PathArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let prob = load_problem(&a.input, &a.weights, a.method)?;
    let grid = resolve_grid(&a.lambda_grid, a.ratio, || grid_top(&prob.gram, &prob.weights, a.method))?;
    let path = coefficient_path(&prob, &grid, a.method)?;
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Json => {
            let report = PathReport {
                method: a.method.name(),
                weights: prob.weight_name,
                variables: &prob.names,
                lambdas: &path.lambdas,
                coefficients: path
                    .betas
                    .iter()
                    .map(|b| b.as_ref().map(|b| b.iter().copied().collect()))
                    .collect(),
                segment_ids: path.segment_ids(),
                segments: path
                    .segments
                    .iter()
                    .enumerate()
                    .map(|(id, s)| SegmentReport {
                        id,
                        start: s.start,
                        end: s.end,
                        lambda_high: s.lambda_high,
                        lambda_low: s.lambda_low,
                    })
                    .collect(),
                failures: path
                    .failures
                    .iter()
                    .map(|(i, m)| Failure { index: *i, message: m })
                    .collect(),
            };
            deliver(out_path(&a.output), &json(&report)?, stdout)
        }
        Format::Csv => {
            let mut main = Vec::new();
            emit_path_csv(&mut main, &path, &prob.names)?;
            let mut segs = Vec::new();
            emit_segments_csv(&mut segs, &path)?;
            match (&a.segments, &a.output.out) {
                (Some(s), _) => {
                    deliver(out_path(&a.output), &main, stdout)?;
                    std::fs::write(s, &segs)?;
                }
                (None, Some(out)) => {
                    deliver(Some(out), &main, stdout)?;
                    std::fs::write(out.with_extension("segments.csv"), &segs)?;
                }
                (None, None) => {
                    main.push(b'\n');
                    main.extend_from_slice(&segs);
                    stdout.write_all(&main)?;
                }
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CvOutput<'a> {
    method: &'a str,
    weights: &'a str,
    rule: String,
    k: usize,
    seed: u64,
    variables: &'a [String],
    lambdas: &'a [f64],
    mean_err: &'a [f64],
    se_err: &'a [f64],
    nonzeros: &'a [usize],
    chosen_lambda: f64,
    failed_fits: usize,
    beta: Vec<f64>,
    intercept: f64,
    raw_coefficients: Vec<f64>,
}

fn weight_label(scheme: WeightScheme) -> &'static str {
    match scheme {
        WeightScheme::Correlation => "corr",
        WeightScheme::InverseOls => "ols",
        WeightScheme::InverseRidge(_) => "ridge",
        WeightScheme::Uniform => "uniform",
    }
}

fn cv_cmd(a: &CvArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if a.cv_k < 2 {
        return Err(CliError::Usage(format!("--cv-k must be at least 2, got {}", a.cv_k)));
    }
    let data = load_csv(&a.input, &a.response)?;
    let choice = if a.method == MethodArg::Lasso {
        WeightArg::Uniform
    } else {
        data_weights(&a.weights, data.n(), data.p())
    };
    let scheme = scheme_of(choice, a.weights.phi);
    let method = a.method.method();
    let grid = resolve_grid(&a.lambda_grid, a.ratio, || {
        let prep = prepare(&data, scheme, method)?;
        grid_top(&prep.gram, &prep.weights, a.method)
    })?;
    if grid.is_empty() {
        return Err(CliError::Usage("cross-validation needs a nonempty λ grid".into()));
    }
    let r = cross_validate(&data, a.cv_k, &grid, scheme, method, a.rule, a.seed)?;
    let (beta, intercept, raw) = refit(&data, scheme, a.method, r.chosen_lambda)?;
    let bytes = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&CvOutput {
            method: a.method.name(),
            weights: weight_label(scheme),
            rule: rule_label(a.rule),
            k: a.cv_k,
            seed: a.seed,
            variables: data.column_names(),
            lambdas: &r.lambdas,
            mean_err: &r.mean_err,
            se_err: &r.se_err,
            nonzeros: &r.nonzeros,
            chosen_lambda: r.chosen_lambda,
            failed_fits: r.failed_fits,
            beta: beta.iter().copied().collect(),
            intercept,
            raw_coefficients: raw.iter().copied().collect(),
        })?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..r.lambdas.len())
                .map(|i| {
                    vec![
                        num(r.lambdas[i]),
                        num(r.mean_err[i]),
                        num(r.se_err[i]),
                        r.nonzeros[i].to_string(),
                        (r.lambdas[i] == r.chosen_lambda).to_string(),
                    ]
                })
                .collect();
            let mut buf = Vec::new();
            emit_table(&mut buf, &["lambda", "mean_err", "se_err", "nonzeros", "chosen"], &rows)?;
            buf
        }
    };
    deliver(out_path(&a.output), &bytes, stdout)
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    n: usize,
    p: usize,
    p0: usize,
    rho: f64,
    snr: f64,
    sigma: f64,
    seed: u64,
    beta: Vec<f64>,
    columns: Vec<&'a str>,
    rows: Vec<Vec<f64>>,
}

fn simulate_cmd(a: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let d = simulate_design(a)?;
    let sim = generate(&d)?;
    let data = &sim.data;
    let mut columns = vec!["y"];
    columns.extend(data.column_names().iter().map(String::as_str));
    let row = |i: usize| -> Vec<f64> {
        std::iter::once(data.y()[i])
            .chain(data.x().row(i).iter().copied())
            .collect()
    };
    let bytes = match a.output.format.unwrap_or(Format::Csv) {
        Format::Json => json(&SimulateOutput {
            n: d.n,
            p: d.p,
            p0: d.p0,
            rho: d.rho,
            snr: d.snr,
            sigma: sim.sigma,
            seed: d.seed,
            beta: sim.beta.iter().copied().collect(),
            columns,
            rows: (0..data.n()).map(row).collect(),
        })?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..data.n())
                .map(|i| row(i).into_iter().map(num).collect())
                .collect();
            let mut buf = Vec::new();
            emit_table(&mut buf, &columns, &rows)?;
            buf
        }
    };
    deliver(out_path(&a.output), &bytes, stdout)
}

#[derive(Serialize)]
struct BenchRow {
    replicate: usize,
    seed: u64,
    method: &'static str,
    nonzeros: usize,
    train_err: f64,
    test_err: f64,
    support_recovered: bool,
    l2_err_sq: f64,
    tuning: f64,
}

fn median(v: &mut [usize]) -> f64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) as f64 / 2.0
    } else {
        v[m] as f64
    }
}

fn bench_cmd(a: &BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    if a.replicates == 0 {
        return Err(CliError::Usage("--replicates must be positive".into()));
    }
    let (design, frac) = bench_design(a)?;
    let methods = bench_methods(a);
    let config = BenchConfig {
        grid_len: a.grid_len,
        rule: a.rule,
        scheme: None,
    };
    let mut csv_lines = String::from(BENCH_CSV_HEADER);
    csv_lines.push('\n');
    let mut rows = Vec::new();
    for r in 0..a.replicates {
        let seed = a.seed.wrapping_add(r as u64);
        let d = design.with_seed(seed);
        for res in run_benchmark_with(&d, &methods, frac, a.cv_k, seed, &config)? {
            csv_lines.push_str(&res.csv_row(&d));
            csv_lines.push('\n');
            rows.push(BenchRow {
                replicate: r,
                seed,
                method: res.method.name(),
                nonzeros: res.nonzeros,
                train_err: res.train_err,
                test_err: res.test_err,
                support_recovered: res.support_recovered,
                l2_err_sq: res.l2_err_sq,
                tuning: res.tuning,
            });
        }
    }
    for m in &methods {
        let mut nz: Vec<usize> = rows.iter().filter(|r| r.method == m.name()).map(|r| r.nonzeros).collect();
        let test: f64 = rows.iter().filter(|r| r.method == m.name()).map(|r| r.test_err).sum::<f64>() / nz.len() as f64;
        writeln!(stderr, "{}: median nonzeros {}, mean test error {test:.4}", m.name(), median(&mut nz))?;
    }
    let bytes = match a.output.format.unwrap_or(Format::Csv) {
        Format::Json => json(&rows)?,
        Format::Csv => csv_lines.into_bytes(),
    };
    deliver(out_path(&a.output), &bytes, stdout)
}

#[derive(Serialize)]
struct ReplicateRow {
    seed: u64,
    lambda: Option<f64>,
    band_low: f64,
    band_high: f64,
    support_recovered: bool,
    ols_deviation: f64,
    l2_err_sq: f64,
    kappa: f64,
}

#[derive(Serialize)]
struct Theorem3Output {
    n: usize,
    p: usize,
    p0: usize,
    sigma: f64,
    xi: f64,
    c: f64,
    successes: usize,
    frequency: f64,
    mean_l2_err_sq: f64,
    empty_bands: usize,
    l2_bound: f64,
    bound_violations: usize,
    probability_bound: f64,
    replicates: Vec<ReplicateRow>,
}

fn theorem3_cmd(a: &BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    if a.replicates == 0 {
        return Err(CliError::Usage("--replicates must be positive".into()));
    }
    let (design, _) = bench_design(a)?;
    let rep = monte_carlo_theorem3(&design, a.replicates, a.xi, a.c)?;
    writeln!(
        stderr,
        "recovered {}/{} (frequency {:.3}), empty bands {}, bound violations {}",
        rep.successes,
        rep.replicates.len(),
        rep.frequency,
        rep.empty_bands,
        rep.bound_violations
    )?;
    let rows: Vec<ReplicateRow> = rep
        .replicates
        .iter()
        .map(|r| ReplicateRow {
            seed: r.seed,
            lambda: r.lambda,
            band_low: r.band.0,
            band_high: r.band.1,
            support_recovered: r.support_recovered,
            ols_deviation: r.ols_deviation,
            l2_err_sq: r.l2_err_sq,
            kappa: r.kappa,
        })
        .collect();
    let bytes = match a.output.format.unwrap_or(Format::Csv) {
        Format::Json => json(&Theorem3Output {
            n: design.n,
            p: design.p,
            p0: design.p0,
            sigma: design.sigma,
            xi: a.xi,
            c: a.c,
            successes: rep.successes,
            frequency: rep.frequency,
            mean_l2_err_sq: rep.mean_l2_err_sq,
            empty_bands: rep.empty_bands,
            l2_bound: rep.l2_bound,
            bound_violations: rep.bound_violations,
            probability_bound: rep.probability_bound,
            replicates: rows,
        })?,
        Format::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.seed.to_string(),
                        r.lambda.map(num).unwrap_or_default(),
                        num(r.band_low),
                        num(r.band_high),
                        r.support_recovered.to_string(),
                        num(r.ols_deviation),
                        num(r.l2_err_sq),
                        num(r.kappa),
                    ]
                })
                .collect();
            let mut buf = Vec::new();
            emit_table(
                &mut buf,
                &["seed", "lambda", "band_low", "band_high", "support_recovered", "ols_deviation", "l2_err_sq", "kappa"],
                &cells,
            )?;
            buf
        }
    };
    deliver(out_path(&a.output), &bytes, stdout)
}
