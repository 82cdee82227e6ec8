use std::sync::Arc;

use sam_core::data::{simulate_dataset, EulerConfig, ObservationSeries};
use sam_core::mle::{maximize, EpsSchedule, SimplexConfig};
use sam_core::model::{DriftedBrownianModel, LogisticGrowthModel, ParameterBox, TransformedModel};
use sam_core::rng::{Purpose, StreamKey};
use sam_core::sam::{LikelihoodSurface, Objective};

fn logistic() -> Arc<dyn TransformedModel> {
    Arc::new(LogisticGrowthModel)
}

fn logistic_box() -> ParameterBox {
    ParameterBox::new(vec![0.03, 850.0, 0.09], vec![0.18, 1200.0, 0.12]).unwrap()
}

fn small_series() -> ObservationSeries {
    let euler = EulerConfig { substeps_log2: 6, ..EulerConfig::default() };
    simulate_dataset(&LogisticGrowthModel, &[0.1, 1000.0, 0.1], 1000.0, 40, 1.0, &euler, StreamKey::new(3, 0, 0, Purpose::Euler))
        .unwrap()
}

#[test]
fn single_interval_brownian_mle_is_the_increment() {
    let model: Arc<dyn TransformedModel> = Arc::new(DriftedBrownianModel);
    let b = ParameterBox::new(vec![-2.0], vec![2.0]).unwrap();
    let series = ObservationSeries::new(vec![0.0, 1.0], vec![0.0, 0.3]).unwrap();
    let s = LikelihoodSurface::build(model, b, &series.transitions(), 1, 4).unwrap();
    let mut cfg = SimplexConfig::new(vec![-1.0]);
    cfg.eps_schedule = EpsSchedule::fixed(1e-10);
    let r = maximize(&s, &cfg).unwrap();
    assert!((r.theta_hat[0] - 0.3).abs() < 1e-8, "{:?}", r.theta_hat);
    // unit-variance Gaussian: observed information is t = 1
    assert!((r.bn[(0, 0)] - 1.0).abs() < 1e-4, "{}", r.bn);
}

#[test]
fn maximizer_is_identical_across_thread_counts() {
    let series = small_series();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let s = LikelihoodSurface::build(logistic(), logistic_box(), &series.transitions(), 17, 40).unwrap();
            let mut cfg = SimplexConfig::new(vec![0.05, 1150.0, 0.115]);
            cfg.estimate_an = false;
            maximize(&s, &cfg).unwrap()
        })
    };
    let a = run(1);
    let b = run(4);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.theta_hat), bits(&b.theta_hat));
    assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
    assert_eq!(a.evals, b.evals);
}

#[test]
fn result_is_an_epsilon_maximizer_of_its_trace() {
    let series = small_series();
    let s = LikelihoodSurface::build(logistic(), logistic_box(), &series.transitions(), 18, 30).unwrap();
    let mut cfg = SimplexConfig::new(vec![0.05, 1150.0, 0.115]);
    cfg.estimate_an = false;
    let r = maximize(&s, &cfg).unwrap();
    let best = r.trace.iter().map(|row| row.loglik).fold(f64::NEG_INFINITY, f64::max);
    assert!(r.loglik >= best - 1e-9);
    assert!(logistic_box().contains(&r.theta_hat));
    assert!((s.log_likelihood(&r.theta_hat).unwrap() - r.loglik).abs() < 1e-9);
    let se = r.se_obs.expect("observed information should be positive definite");
    assert!(se.iter().all(|&x| x > 0.0 && x.is_finite()));
}

#[test]
fn simulated_series_roundtrips_through_a_file() {
    let series = small_series();
    let path = std::env::temp_dir().join(format!("sam-core-roundtrip-{}.csv", std::process::id()));
    series.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let back = ObservationSeries::read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(back, series);
    assert_eq!(back.intervals(), 40);
}

#[test]
fn simulation_is_repeatable_and_seed_sensitive() {
    let a = small_series();
    let b = small_series();
    assert_eq!(a, b);
    let euler = EulerConfig { substeps_log2: 6, ..EulerConfig::default() };
    let c = simulate_dataset(&LogisticGrowthModel, &[0.1, 1000.0, 0.1], 1000.0, 40, 1.0, &euler, StreamKey::new(4, 0, 0, Purpose::Euler))
        .unwrap();
    assert_ne!(a.values(), c.values());
}

#[test]
fn long_logistic_run_hovers_around_capacity() {
    // stationary law of the logistic diffusion has mean c(1 − σ²/(2δ))
    let euler = EulerConfig { substeps_log2: 4, ..EulerConfig::default() };
    let s = simulate_dataset(&LogisticGrowthModel, &[0.1, 1000.0, 0.1], 1000.0, 20_000, 1.0, &euler, StreamKey::new(5, 0, 0, Purpose::Euler))
        .unwrap();
    let mean = s.values().iter().sum::<f64>() / s.values().len() as f64;
    assert!((mean - 950.0).abs() < 15.0, "mean {mean}");
}
