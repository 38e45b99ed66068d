use lags::baselines::{kkt_residual, lasso_cd, lasso_path};
use lags::data::{gram, standardize};
use lags::estimator::log_grid;
use lags::synth::{
    generate, monte_carlo_theorem3, paper_beta, run_benchmark, BenchMethod, Noise, SimDesign,
};
use nalgebra::DVector;

#[test]
fn sample_covariance_matches_design() {
    let d = SimDesign::new(100_000, 0.2, paper_beta(60, 10), Noise::Snr(2.0), 17).unwrap();
    let sim = generate(&d).unwrap();
    let x = sim.data.x();
    let n = x.nrows() as f64;
    let means = x.row_mean();
    let centered = x - DVector::from_element(x.nrows(), 1.0) * means;
    let cov = centered.tr_mul(&centered) / n;
    for i in 0..60 {
        for j in 0..60 {
            let target = if i == j { 1.0 } else { 0.2 };
            assert!((cov[(i, j)] - target).abs() <= 0.02, "({i},{j}) {}", cov[(i, j)]);
        }
    }
}

#[test]
fn empirical_snr() {
    let d = SimDesign::new(10_000, 0.3, paper_beta(8, 4), Noise::Snr(3.0), 2).unwrap();
    let sim = generate(&d).unwrap();
    let signal = sim.data.x() * &sim.beta;
    let noise = sim.data.y() - &signal;
    let sd = |v: &DVector<f64>| {
        let m = v.mean();
        (v.map(|x| (x - m).powi(2)).sum() / v.len() as f64).sqrt()
    };
    let snr = sd(&signal) / sd(&noise);
    assert!((snr / 3.0 - 1.0).abs() <= 0.05, "{snr}");
}

#[test]
fn noiseless_benchmark_recovers_support() {
    let d = SimDesign::new(200, 0.0, paper_beta(8, 3), Noise::Sigma(0.0), 4).unwrap();
    let r = run_benchmark(&d, &[BenchMethod::Lags, BenchMethod::HardOracle], 0.5, 5, 1).unwrap();
    let lags = &r[0];
    assert!(lags.support_recovered);
    assert!(lags.l2_err_sq <= 1e-6);
    assert_eq!(r[1].method, BenchMethod::HardOracle);
}

#[test]
fn benchmark_is_deterministic() {
    let d = SimDesign::new(120, 0.2, paper_beta(10, 3), Noise::Snr(2.0), 5).unwrap();
    let methods = [BenchMethod::Lags, BenchMethod::LassoCd, BenchMethod::HardOracle];
    let a = run_benchmark(&d, &methods, 0.5, 5, 3).unwrap();
    let b = run_benchmark(&d, &methods, 0.5, 5, 3).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.train_err >= 0.0 && r.test_err >= 0.0));
}

#[test]
fn theorem3_small_instance() {
    let scale = (2.0 * (10f64).ln()).sqrt();
    let mut beta = DVector::zeros(10);
    beta[0] = 9.0 * scale;
    beta[1] = -10.0 * scale;
    let d = SimDesign::new(100, 0.0, beta, Noise::Sigma(1.0), 8).unwrap();
    let r = monte_carlo_theorem3(&d, 20, 1.0, 8.0).unwrap();
    assert!(r.frequency >= 0.9, "{}", r.frequency);
    assert_eq!(r.bound_violations, 0);
    assert!((0.0..=1.0).contains(&r.probability_bound));
}

#[test]
fn lasso_kkt_on_simulated_data() {
    let d = SimDesign::new(80, 0.2, paper_beta(12, 4), Noise::Snr(2.0), 6).unwrap();
    let s = standardize(&generate(&d).unwrap().data).unwrap();
    let g = gram(&s);
    let grid = log_grid(g.xty().amax(), 1e-3, 30);
    for f in lasso_path(&g, &grid).unwrap() {
        assert!(kkt_residual(&g, &f.beta, f.lambda.unwrap()) <= 1e-6);
    }
    assert_eq!(lasso_cd(&g, g.xty().amax()).unwrap().nonzeros(), 0);
}
