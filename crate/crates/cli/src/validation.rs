//! The validation suite behind `sam validate` and the acceptance tests.
//! Every check reports a measured statistic against a threshold.

use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use rayon::prelude::*;
use sam_core::bridge::{
    am_pointwise, chi_values, ea_bridge_sampler, sample_minimum, split_at_minimum, Branch, BridgeFrame, EaConfig,
    PoissonMark,
};
use sam_core::data::{brute_density, conditioned_bridge_oracle, simulate_dataset, EulerConfig};
use sam_core::mle::{warm_start_ladder, EpsSchedule, SimplexConfig};
use sam_core::model::{DriftedBrownianModel, LogisticGrowthModel, ParameterBox, TransformedModel};
use sam_core::rng::{derive_seed, Purpose, StreamKey};
use sam_core::sam::{eval_l, generate_xi, LikelihoodSurface, Transition};
use sam_core::stats::{gaussian_kernel, ks_two_sample, ks_two_sample_critical, mean_se, sample_variance};

use crate::commands::{run_nscaling, run_table2, SizeRule};

pub const CHECKS: [&str; 10] = [
    "zero-variance",
    "unbiasedness",
    "ea-am",
    "coupling-law",
    "min-identity",
    "ladder-pattern",
    "sqrt-n-rate",
    "poisson-load",
    "n-scaling",
    "euler-refinement",
];

/// `Full` runs the acceptance sample sizes; `Quick` shrinks them for smoke runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Full,
    Quick,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "quick" => Ok(Self::Quick),
            _ => bail!("scale must be `full` or `quick`, got `{s}`"),
        }
    }

    fn pick<T>(self, full: T, quick: T) -> T {
        match self {
            Self::Full => full,
            Self::Quick => quick,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckReport {
    pub fn line(&self) -> String {
        format!(
            "{} {}: statistic {:.6e}, threshold {:.6e}, {:.1}s; {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.threshold,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

pub const THETA0: [f64; 3] = [0.1, 1000.0, 0.1];

pub fn reference_box() -> ParameterBox {
    ParameterBox::new(vec![0.03, 850.0, 0.09], vec![0.18, 1200.0, 0.12]).expect("valid box")
}

/// Logistic configurations `(θ, v, w, t)` for the interval-level checks.
pub const DENSITY_CONFIGS: [([f64; 3], f64, f64, f64); 5] = [
    ([0.1, 1000.0, 0.1], 1000.0, 1010.0, 1.0),
    ([0.1, 1000.0, 0.1], 700.0, 760.0, 1.0),
    ([0.15, 900.0, 0.11], 950.0, 920.0, 1.0),
    ([0.05, 1100.0, 0.095], 1000.0, 1000.0, 0.5),
    ([0.12, 1000.0, 0.1], 800.0, 900.0, 2.0),
];

fn z_score(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs() / (a.1 * a.1 + b.1 * b.1).sqrt()
}

pub fn run_check(name: &str, scale: Scale, seed: u64) -> Result<CheckReport> {
    let started = Instant::now();
    let (name, statistic, threshold, passed, detail) = match name {
        "zero-variance" => zero_variance(scale, seed, started)?,
        "unbiasedness" => unbiasedness(scale, seed)?,
        "ea-am" => ea_am(scale, seed)?,
        "coupling-law" => coupling_law(scale, seed)?,
        "min-identity" => min_identity(scale, seed)?,
        "ladder-pattern" => ladder_pattern(scale, seed)?,
        "sqrt-n-rate" => sqrt_n_rate(scale, seed)?,
        "poisson-load" => poisson_load(scale, seed)?,
        "n-scaling" => n_scaling(scale, seed)?,
        "euler-refinement" => euler_refinement(scale, seed)?,
        other => bail!("unknown check `{other}`; available: {}", CHECKS.join(", ")),
    };
    let elapsed = started.elapsed();
    Ok(CheckReport { name, statistic, threshold, passed, detail, elapsed })
}

type Outcome = (&'static str, f64, f64, bool, String);

fn zero_variance(scale: Scale, seed: u64, started: Instant) -> Result<Outcome> {
    let model = DriftedBrownianModel;
    let bounds = ParameterBox::new(vec![-2.0], vec![2.0])?;
    let tr = Transition { from: 0.0, to: 0.3, dt: 1.0 };
    let draws = scale.pick(10_000u64, 1_000);
    let values = (1..=draws)
        .map(|j| {
            let xi = generate_xi(&model, &bounds, &tr, StreamKey::new(seed, 1, j, Purpose::Exponential))?;
            Ok(eval_l(&model, &xi, &[0.5], &tr)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let exact = gaussian_kernel(-0.2, 1.0);
    let var = sample_variance(&values);
    let max_err = values.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
    let secs = started.elapsed().as_secs_f64();
    let passed = var < 1e-24 && max_err < 1e-12 && (exact - 0.391043).abs() < 5e-7 && secs < 1.0;
    Ok(("zero-variance", var, 1e-24, passed, format!("exact {exact:.6}; max |L - exact| {max_err:.2e}; {secs:.3}s")))
}

fn unbiasedness(scale: Scale, seed: u64) -> Result<Outcome> {
    let model = LogisticGrowthModel;
    let bounds = reference_box();
    let draws = scale.pick(1_000_000u64, 20_000);
    let paths = scale.pick(1_000_000, 20_000);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (i, (theta, v, w, t)) in DENSITY_CONFIGS.iter().enumerate() {
        let tr = Transition { from: *v, to: *w, dt: *t };
        let interval = i as u64 + 1;
        let values = (1..=draws)
            .into_par_iter()
            .map(|j| {
                let xi = generate_xi(&model, &bounds, &tr, StreamKey::new(seed, interval, j, Purpose::Exponential))?;
                Ok(eval_l(&model, &xi, theta, &tr)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        let sam = mean_se(&values);
        let euler = EulerConfig { substeps_log2: 8, paths, bin_width: 0.04 * t.sqrt() };
        let key = StreamKey::new(derive_seed(seed, 0xB2, interval), interval, 0, Purpose::Euler);
        let brute = brute_density(&model, theta, *v, *w, *t, &euler, key)?;
        let z = z_score(sam, (brute.density, brute.se));
        worst = worst.max(z);
        parts.push(format!("#{interval} {:.5e} vs {:.5e} z {z:.2}", sam.0, brute.density));
    }
    Ok(("unbiasedness", worst, 3.0, worst < 3.0, parts.join("; ")))
}

fn ea_am(scale: Scale, seed: u64) -> Result<Outcome> {
    let model = LogisticGrowthModel;
    let runs = scale.pick(100_000u64, 5_000);
    let frame = BridgeFrame::new(model.eta(700.0, &THETA0), model.eta(720.0, &THETA0), 1.0)?;
    let proposals: u64 = (0..runs)
        .into_par_iter()
        .map(|j| {
            let key = StreamKey::new(seed, 1, j, Purpose::Exponential);
            Ok(ea_bridge_sampler(&model, &THETA0, frame, key, EaConfig::default())?.proposals)
        })
        .collect::<Result<Vec<u64>>>()?
        .iter()
        .sum();
    let p = runs as f64 / proposals as f64;
    let p_se = p * ((1.0 - p) / runs as f64).sqrt();
    let am = (0..runs)
        .into_par_iter()
        .map(|j| Ok(am_pointwise(&model, &THETA0, frame, StreamKey::new(seed, 2, j, Purpose::Exponential), 1.0)?))
        .collect::<Result<Vec<f64>>>()?;
    let am = mean_se(&am);
    let z = z_score((p, p_se), am);
    Ok(("ea-am", z, 3.0, z < 3.0, format!("EA rate {p:.5} ± {p_se:.1e}; AM mean {:.5} ± {:.1e}", am.0, am.1)))
}

fn coupling_law(scale: Scale, seed: u64) -> Result<Outcome> {
    let frame = BridgeFrame::new(0.0, 0.5, 1.0)?;
    let e = 1.0;
    let times = [0.25, 0.5, 0.75];
    let n = scale.pick(100_000usize, 5_000);
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = StreamKey::new(seed, 1, j, Purpose::Gaussian).rng();
            let split = split_at_minimum(&frame, e, rng.gaussian())?;
            let branch = if rng.uniform() <= split.p1 { Branch::First } else { Branch::Second };
            let marks: Vec<PoissonMark> = times
                .iter()
                .map(|&time| PoissonMark { time, normals: [rng.gaussian(), rng.gaussian(), rng.gaussian()] })
                .collect();
            Ok(chi_values(&frame, &split, &marks, branch)?)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let m = sample_minimum(&frame, e);
    let half = 0.01 * frame.t.sqrt();
    let euler = EulerConfig { substeps_log2: 6, paths: n, bin_width: 2.0 * half };
    let oracle = conditioned_bridge_oracle(&frame, (m - half, m + half), &times, &euler, StreamKey::new(seed, 2, 0, Purpose::Oracle))?;
    let crit = ks_two_sample_critical(n, oracle.values.len(), 0.01);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (k, s) in times.iter().enumerate() {
        let a: Vec<f64> = samples.iter().map(|r| r[k]).collect();
        let b: Vec<f64> = oracle.values.iter().map(|r| r[k]).collect();
        let d = ks_two_sample(&a, &b);
        worst = worst.max(d);
        parts.push(format!("t={s} D={d:.5}"));
    }
    parts.push(format!("oracle accepted {} of {}", oracle.accepted, oracle.proposals));
    Ok(("coupling-law", worst, crit, worst < crit, parts.join("; ")))
}

fn min_identity(scale: Scale, seed: u64) -> Result<Outcome> {
    let draws = scale.pick(1_000_000u64, 100_000);
    let worst = (0..draws)
        .into_par_iter()
        .map(|j| {
            let mut rng = StreamKey::new(seed, 1, j, Purpose::Uniform).rng();
            let x = 200.0 * rng.uniform() - 100.0;
            let y = 200.0 * rng.uniform() - 100.0;
            let t = 10f64.powf(4.0 * rng.uniform() - 2.0);
            let e = rng.exponential();
            let z = rng.gaussian();
            let s = split_at_minimum(&BridgeFrame::new(x, y, t)?, e, z)?;
            let target = t * e / 2.0;
            Ok((s.x_gap * s.y_gap - target).abs() / target)
        })
        .try_reduce(|| 0.0, |a: f64, b: f64| Ok::<f64, anyhow::Error>(a.max(b)))?;
    Ok(("min-identity", worst, 1e-12, worst < 1e-12, format!("{draws} random frames")))
}

fn logistic() -> Arc<dyn TransformedModel> {
    Arc::new(LogisticGrowthModel)
}

fn logistic_series(n: usize, key: StreamKey) -> Result<sam_core::data::ObservationSeries> {
    let euler = EulerConfig { substeps_log2: 8, ..EulerConfig::default() };
    Ok(simulate_dataset(&LogisticGrowthModel, &THETA0, 700.0, n, 1.0, &euler, key)?)
}

fn ladder_pattern(scale: Scale, seed: u64) -> Result<Outcome> {
    let n = scale.pick(500, 100);
    let sizes: Vec<usize> = scale.pick(vec![1, 2, 5, 10, 50, 200, 800, 6400], vec![1, 5, 50, 200, 400]);
    let series = logistic_series(n, StreamKey::new(seed, 0, 0, Purpose::Euler))?;
    let largest = *sizes.last().unwrap();
    let full = LikelihoodSurface::build(logistic(), reference_box(), &series.transitions(), derive_seed(seed, 0xBA4C, 0), largest)?;
    let mut sc = SimplexConfig::new(vec![0.05, 1150.0, 0.115]);
    sc.estimate_an = false;
    let results = warm_start_ladder(|k| full.truncated(k), &sizes, &sc)?;
    let last = results.last().unwrap();
    let se = last.se_obs.clone().ok_or_else(|| anyhow::anyhow!("observed information at N = {largest} is not positive definite"))?;
    // distance in units of the reference standard errors, worst coordinate
    let dist: Vec<f64> = results
        .iter()
        .map(|r| r.theta_hat.iter().zip(&last.theta_hat).zip(&se).map(|((a, b), s)| (a - b).abs() / s).fold(0.0, f64::max))
        .collect();
    let from = sizes.iter().position(|&k| k >= 50).unwrap();
    let tail = sizes.iter().position(|&k| k >= 200).unwrap();
    let worst_tail = dist[tail..].iter().cloned().fold(0.0, f64::max);
    let monotone = dist[from..].windows(2).all(|w| w[1] <= w[0]);
    let detail = sizes.iter().zip(&dist).map(|(k, d)| format!("N={k}: {d:.4}")).collect::<Vec<_>>().join("; ");
    Ok(("ladder-pattern", worst_tail, 1.0, worst_tail <= 1.0 && monotone, format!("{detail}; nonincreasing from N=50: {monotone}")))
}

fn sqrt_n_rate(scale: Scale, seed: u64) -> Result<Outcome> {
    let n = scale.pick(250, 50);
    let replicates = scale.pick(200, 10);
    let ref_size = scale.pick(10_000, 500);
    let series = logistic_series(n, StreamKey::new(seed, 0, 0, Purpose::Euler))?;
    let mut sc = SimplexConfig::new(THETA0.to_vec());
    sc.eps_schedule = EpsSchedule::fixed(1e-6);
    sc.estimate_an = false;
    let sizes = [25, 50, 100];
    let t2 = run_table2(logistic(), reference_box(), &series, seed, &sizes, replicates, ref_size, &sc)?;
    let summary = t2.summary();
    let d = t2.reference.len();
    let decreasing = (0..d)
        .filter(|&k| summary.windows(2).all(|w| w[1].0[k].abs() < w[0].0[k].abs()))
        .count();
    let detail = sizes
        .iter()
        .zip(&summary)
        .map(|(k, (m, s))| {
            let cells: Vec<String> = m.iter().zip(s).map(|(a, b)| format!("{a:.3e}±{b:.1e}")).collect();
            format!("N={k}: {}", cells.join(" "))
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(("sqrt-n-rate", decreasing as f64, 2.0, decreasing >= 2, detail))
}

fn poisson_load(scale: Scale, seed: u64) -> Result<Outcome> {
    let n = scale.pick(1000, 100);
    let series = logistic_series(n, StreamKey::new(seed, 0, 0, Purpose::Euler))?;
    let s = LikelihoodSurface::build(logistic(), reference_box(), &series.transitions(), seed, 100)?;
    let counts: Vec<usize> = s.banks().iter().flat_map(|b| b.elements.iter().map(|x| x.count())).collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let passed = (mean - 2.0).abs() <= 0.3 && max <= 15;
    Ok(("poisson-load", mean, 2.0, passed, format!("mean {mean:.4} (band 2.0 ± 0.3); max {max} (limit 15)")))
}

fn n_scaling(scale: Scale, seed: u64) -> Result<Outcome> {
    let replicates = scale.pick(100, 8);
    let (small, mid, large) = scale.pick((100, 400, 1600), (50, 100, 200));
    let euler = EulerConfig { substeps_log2: 8, ..EulerConfig::default() };
    let mut sc = SimplexConfig::new(THETA0.to_vec());
    sc.eps_schedule = EpsSchedule::fixed(1e-6);
    sc.estimate_an = false;
    let run = |n: usize, rule: SizeRule| {
        run_nscaling(logistic(), &reference_box(), &THETA0, 700.0, 1.0, &euler, seed, n, rule, replicates, &sc)
    };
    let column = |devs: &[Vec<f64>], k: usize| devs.iter().map(|v| v[k]).collect::<Vec<f64>>();
    let a = run(small, SizeRule::Sqrt)?;
    let b = run(mid, SizeRule::Sqrt)?;
    let mut worst_ratio = 0.0f64;
    let mut parts = Vec::new();
    for k in 0..THETA0.len() {
        let (va, vb) = (sample_variance(&column(&a, k)), sample_variance(&column(&b, k)));
        let ratio = va.max(vb) / va.min(vb);
        worst_ratio = worst_ratio.max(ratio);
        parts.push(format!("var{k} {va:.3e}/{vb:.3e}"));
    }
    // fixed N: standardized length of the mean deviation vector
    let c_small = run(small, SizeRule::Const(5))?;
    let c_large = run(large, SizeRule::Const(5))?;
    let scales: Vec<f64> = (0..THETA0.len()).map(|k| sample_variance(&column(&c_small, k)).sqrt()).collect();
    let norm = |devs: &[Vec<f64>]| {
        (0..THETA0.len()).map(|k| (mean_se(&column(devs, k)).0 / scales[k]).powi(2)).sum::<f64>().sqrt()
    };
    let (bias_small, bias_large) = (norm(&c_small), norm(&c_large));
    parts.push(format!("fixed N=5 standardized |mean|: n={small} {bias_small:.4}, n={large} {bias_large:.4}"));
    let passed = worst_ratio <= 2.0 && bias_large > bias_small;
    Ok(("n-scaling", worst_ratio, 2.0, passed, parts.join("; ")))
}

fn euler_refinement(scale: Scale, seed: u64) -> Result<Outcome> {
    let model = LogisticGrowthModel;
    let paths = scale.pick(1_000_000, 20_000);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (i, (theta, v, w, t)) in DENSITY_CONFIGS.iter().enumerate() {
        let interval = i as u64 + 1;
        let est = |k: u32| {
            let euler = EulerConfig { substeps_log2: k, paths, bin_width: 0.04 * t.sqrt() };
            brute_density(&model, theta, *v, *w, *t, &euler, StreamKey::new(derive_seed(seed, k as u64, interval), interval, 0, Purpose::Euler))
        };
        let (a, b) = (est(8)?, est(9)?);
        let z = z_score((a.density, a.se), (b.density, b.se));
        worst = worst.max(z);
        parts.push(format!("#{interval} z {z:.2}"));
    }
    Ok(("euler-refinement", worst, 3.0, worst < 3.0, parts.join("; ")))
}
