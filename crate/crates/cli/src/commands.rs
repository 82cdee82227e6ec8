//! Subcommand implementations. Each returns the files it wrote.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use sam_core::bridge::{ea_bridge_sampler, BridgeFrame, EaConfig};
use sam_core::data::{simulate_dataset, EulerConfig, ObservationSeries};
use sam_core::mle::{maximize, profile, warm_start_ladder, EpsSchedule, MleResult, SimplexConfig};
use sam_core::model::{model_by_name, TransformedModel};
use sam_core::rng::{derive_seed, Purpose, StreamKey};
use sam_core::sam::{cache, LikelihoodSurface, Objective};
use sam_core::stats::{mean_se, sample_variance};

use crate::config::RunConfig;
use crate::output::{fmt_vec, header, write_file, Table};
use crate::validation;

/// Labels mixed into the run seed for independent seed families.
const BANK_LABEL: u64 = 0xBA4C;
const REPLICATE_LABEL: u64 = 0x4E9;
const DATASET_LABEL: u64 = 0xDA7A;

pub struct Run {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
}

pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub success: bool,
}

impl Run {
    fn model(&self) -> Result<Arc<dyn TransformedModel>> {
        Ok(model_by_name(self.cfg.model_name())?)
    }

    fn euler(&self) -> Result<EulerConfig> {
        Ok(EulerConfig { substeps_log2: self.cfg.usize_or("euler_k", 8)? as u32, ..EulerConfig::default() })
    }

    fn default_v0(&self) -> f64 {
        if self.cfg.model_name() == "logistic" {
            700.0
        } else {
            0.0
        }
    }

    fn bank_seed(&self) -> Result<u64> {
        self.cfg.u64_or("bank_seed", derive_seed(self.seed, BANK_LABEL, 0))
    }

    /// Writes `body` under the standard header, timed from `started`.
    fn emit(&self, command: &str, name: &str, started: Instant, body: &str) -> Result<PathBuf> {
        write_file(&self.out, name, &header(command, &self.cfg, self.seed, started.elapsed()), body)
    }

    fn simulate_series(&self, n_default: usize, key: StreamKey) -> Result<ObservationSeries> {
        let model = self.model()?;
        let theta = self.cfg.theta0()?;
        let v0 = self.cfg.f64_or("v0", self.default_v0())?;
        let n = self.cfg.usize_or("n", n_default)?;
        let dt = self.cfg.f64_or("dt", 1.0)?;
        Ok(simulate_dataset(model.as_ref(), &theta, v0, n, dt, &self.euler()?, key)?)
    }

    /// The dataset named by `data`, or one simulated from the run seed.
    fn dataset(&self, n_default: usize) -> Result<ObservationSeries> {
        let series = match self.cfg.raw("data") {
            Some(path) => {
                let file = std::fs::File::open(path).with_context(|| format!("opening {path}"))?;
                ObservationSeries::read_csv(file)?
            }
            None => self.simulate_series(n_default, StreamKey::new(self.seed, 0, 0, Purpose::Euler))?,
        };
        series.check_state_space(self.model()?.as_ref())?;
        Ok(series)
    }

    fn simplex(&self) -> Result<SimplexConfig> {
        let mut sc = SimplexConfig::new(self.cfg.start()?);
        sc.eps_schedule = self.cfg.eps_schedule()?;
        sc.max_evals = self.cfg.usize_or("max_evals", sc.max_evals)?;
        sc.initial_scale = self.cfg.f64_or("initial_scale", sc.initial_scale)?;
        Ok(sc)
    }

    fn surface(&self, series: &ObservationSeries, size: usize) -> Result<LikelihoodSurface> {
        let model = self.model()?;
        let bounds = self.cfg.bounds()?;
        let trs = series.transitions();
        let seed = self.bank_seed()?;
        Ok(match self.cfg.raw("cache") {
            Some(path) => cache::load_or_build(Path::new(path), model, bounds, &trs, seed, size)?,
            None => LikelihoodSurface::build(model, bounds, &trs, seed, size)?,
        })
    }
}

pub fn simulate(run: &Run) -> Result<Outcome> {
    let started = Instant::now();
    let series = run.simulate_series(1000, StreamKey::new(run.seed, 0, 0, Purpose::Euler))?;
    let mut body = Vec::new();
    series.write_csv(&mut body)?;
    let path = run.emit("simulate", "dataset.csv", started, std::str::from_utf8(&body)?)?;
    Ok(Outcome { files: vec![path], success: true })
}

pub fn simulate_bridge(run: &Run) -> Result<Outcome> {
    let started = Instant::now();
    let model = run.model()?;
    let theta = run.cfg.theta0()?;
    let v = run.cfg.f64_or("v", run.cfg.f64_or("v0", run.default_v0())?)?;
    let w = run.cfg.f64_or("w", v)?;
    let t = run.cfg.f64_or("t", 1.0)?;
    model.check_state("v", v)?;
    model.check_state("w", w)?;
    let frame = BridgeFrame::new(model.eta(v, &theta), model.eta(w, &theta), t)?;
    let key = StreamKey::new(run.seed, 0, 0, Purpose::Exponential);
    let out = ea_bridge_sampler(model.as_ref(), &theta, frame, key, EaConfig::default())?;
    let sk = &out.skeleton;
    let mut table = Table::new(["time", "value"]);
    table.note(format!("m = {}", model.eta_inv(sk.min_value, &theta)));
    table.note(format!("tau = {}", sk.tau));
    table.note(format!("proposals = {}", out.proposals));
    for (s, x) in sk.full_path() {
        table.push([s, model.eta_inv(x, &theta)]);
    }
    let path = run.emit("simulate-bridge", "bridge.csv", started, &table.body())?;
    Ok(Outcome { files: vec![path], success: true })
}

fn result_columns(d: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["N", "eps", "evals", "converged", "loglik"].iter().map(|s| s.to_string()).collect();
    cols.extend((0..d).map(|k| format!("theta{k}")));
    cols.extend((0..d).map(|k| format!("se{k}")));
    cols.extend((0..d).map(|k| format!("sandwich_se{k}")));
    cols
}

fn result_row(r: &MleResult) -> Vec<String> {
    let d = r.theta_hat.len();
    let mut row = vec![
        r.bank_size.to_string(),
        r.eps_used.to_string(),
        r.evals.to_string(),
        r.converged.to_string(),
        r.loglik.to_string(),
    ];
    row.extend(r.theta_hat.iter().map(f64::to_string));
    let nan = vec![f64::NAN; d];
    row.extend(r.se_obs.as_ref().unwrap_or(&nan).iter().map(f64::to_string));
    let sw: Vec<f64> = match &r.sandwich {
        Some(m) => (0..d).map(|k| m[(k, k)].max(0.0).sqrt()).collect(),
        None => nan,
    };
    row.extend(sw.iter().map(f64::to_string));
    row
}

fn result_block(r: &MleResult) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        s.push_str(&format!("{k} = {v}\n"));
    };
    kv("N", r.bank_size.to_string());
    kv("theta_hat", fmt_vec(&r.theta_hat));
    kv("loglik", r.loglik.to_string());
    kv("eps_used", r.eps_used.to_string());
    kv("evals", r.evals.to_string());
    kv("converged", r.converged.to_string());
    kv("theta_inference", fmt_vec(&r.theta_inference));
    kv("se_obs", r.se_obs.as_deref().map_or("none".into(), fmt_vec));
    kv("Bn", fmt_vec(r.bn.as_slice()));
    kv("An", r.an.as_ref().map_or("none".into(), |a| fmt_vec(a.matrix.as_slice())));
    kv("sandwich", r.sandwich.as_ref().map_or("none".into(), |m| fmt_vec(m.as_slice())));
    for w in &r.warnings {
        kv("warning", w.clone());
    }
    s.push('\n');
    s
}

pub fn estimate(run: &Run) -> Result<Outcome> {
    let started = Instant::now();
    let series = run.dataset(1000)?;
    let sizes = match run.cfg.vec_usize("ladder")? {
        Some(l) => l,
        None => vec![run.cfg.usize_or("N", 100)?],
    };
    let largest = *sizes.iter().max().context("empty ladder")?;
    let full = run.surface(&series, largest)?;
    let sc = run.simplex()?;
    let results = warm_start_ladder(|n| full.truncated(n), &sizes, &sc)?;
    let d = full.dim();
    let mut table = Table::new(result_columns(d));
    table.note(format!("eps schedule: max({}, {}/sqrt(N))", sc.eps_schedule.floor, sc.eps_schedule.scale));
    let mut trace_cols = vec!["N".to_string(), "eval_index".to_string()];
    trace_cols.extend((0..d).map(|k| format!("theta{k}")));
    trace_cols.push("loglik".into());
    let mut trace = Table::new(trace_cols);
    let mut blocks = String::new();
    for r in &results {
        table.push(result_row(r));
        blocks.push_str(&result_block(r));
        for row in &r.trace {
            let mut cells = vec![r.bank_size.to_string(), row.eval_index.to_string()];
            cells.extend(row.theta.iter().map(f64::to_string));
            cells.push(row.loglik.to_string());
            trace.push(cells);
        }
    }
    let files = vec![
        run.emit("estimate", "estimate.csv", started, &table.body())?,
        run.emit("estimate", "trace.csv", started, &trace.body())?,
        run.emit("estimate", "result.txt", started, &blocks)?,
    ];
    Ok(Outcome { files, success: true })
}

pub fn surface(run: &Run) -> Result<Outcome> {
    let started = Instant::now();
    let series = run.dataset(1000)?;
    let s = run.surface(&series, run.cfg.usize_or("N", 100)?)?;
    let points = s.bounds().grid(run.cfg.usize_or("surface_points", 5)?);
    let values: Vec<f64> = points.par_iter().map(|p| s.log_likelihood(p)).collect::<sam_core::Result<_>>()?;
    let mut cols: Vec<String> = (0..s.dim()).map(|k| format!("theta{k}")).collect();
    cols.push("loglik".into());
    let mut table = Table::new(cols);
    for (p, v) in points.iter().zip(values) {
        let mut row: Vec<String> = p.iter().map(f64::to_string).collect();
        row.push(v.to_string());
        table.push(row);
    }
    let path = run.emit("surface", "surface.csv", started, &table.body())?;
    Ok(Outcome { files: vec![path], success: true })
}

pub fn profile_cmd(run: &Run) -> Result<Outcome> {
    let started = Instant::now();
    let series = run.dataset(1000)?;
    let s = run.surface(&series, run.cfg.usize_or("N", 100)?)?;
    let coord = run.cfg.usize_or("coord", 0)?;
    let points = run.cfg.usize_or("grid_points", 20)?;
    if coord >= s.dim() || points < 2 {
        bail!("profile needs a valid coordinate and at least two grid points");
    }
    let (lo, hi) = (s.bounds().lower()[coord], s.bounds().upper()[coord]);
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let rows = profile(&s, coord, &grid, &run.simplex()?)?;
    let mut cols = vec!["value".to_string()];
    cols.extend((0..s.dim()).map(|k| format!("theta{k}")));
    cols.push("loglik".into());
    let mut table = Table::new(cols);
    for p in rows {
        let mut row = vec![p.value.to_string()];
        row.extend(p.theta.iter().map(f64::to_string));
        row.push(p.loglik.to_string());
        table.push(row);
    }
    let path = run.emit("profile", "profile.csv", started, &table.body())?;
    Ok(Outcome { files: vec![path], success: true })
}

/// Per-replicate Monte Carlo deviations `√N(θ̂ᴺ − θ̂_ref)` for every `N`.
pub struct Table2 {
    pub reference: Vec<f64>,
    pub sizes: Vec<usize>,
    /// `deviations[i][r]` is the vector for size `sizes[i]`, replicate `r`.
    pub deviations: Vec<Vec<Vec<f64>>>,
}

impl Table2 {
    /// Per-N sample means and standard errors of each coordinate.
    pub fn summary(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.deviations
            .iter()
            .map(|reps| {
                let d = reps.first().map_or(0, Vec::len);
                (0..d)
                    .map(|k| mean_se(&reps.iter().map(|v| v[k]).collect::<Vec<_>>()))
                    .unzip()
            })
            .collect()
    }
}

/// Replicated bank seeds on a fixed dataset, maximizing at each `N` from the
/// reference maximizer with a fixed tight tolerance.
#[allow(clippy::too_many_arguments)]
pub fn run_table2(
    model: Arc<dyn TransformedModel>,
    bounds: sam_core::model::ParameterBox,
    series: &ObservationSeries,
    seed: u64,
    sizes: &[usize],
    replicates: usize,
    ref_size: usize,
    sc: &SimplexConfig,
) -> Result<Table2> {
    let trs = series.transitions();
    let reference = LikelihoodSurface::build(model.clone(), bounds.clone(), &trs, derive_seed(seed, BANK_LABEL, 0), ref_size)?;
    let mut ref_cfg = sc.clone();
    ref_cfg.estimate_an = false;
    let reference = maximize(&reference, &ref_cfg)?.theta_hat;
    let mut rep_cfg = ref_cfg.clone();
    rep_cfg.initial_point = reference.clone();
    let largest = *sizes.iter().max().context("no bank sizes")?;
    let per_rep: Vec<Vec<Vec<f64>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let bank_seed = derive_seed(seed, REPLICATE_LABEL, r + 1);
            let full = LikelihoodSurface::build(model.clone(), bounds.clone(), &trs, bank_seed, largest)?;
            sizes
                .iter()
                .map(|&n| {
                    let th = maximize(&full.truncated(n)?, &rep_cfg)?.theta_hat;
                    Ok(th.iter().zip(&reference).map(|(a, b)| (n as f64).sqrt() * (a - b)).collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let deviations = (0..sizes.len()).map(|i| per_rep.iter().map(|r| r[i].clone()).collect()).collect();
    Ok(Table2 { reference, sizes: sizes.to_vec(), deviations })
}

fn tight_simplex(run: &Run, start: Vec<f64>) -> Result<SimplexConfig> {
    let mut sc = SimplexConfig::new(start);
    sc.eps_schedule = EpsSchedule {
        scale: run.cfg.f64_or("eps_scale", 0.0)?,
        floor: run.cfg.f64_or("eps_floor", 1e-6)?,
    };
    sc.max_evals = run.cfg.usize_or("max_evals", sc.max_evals)?;
    sc.estimate_an = false;
    Ok(sc)
}

pub fn table2(run: &Run) -> Result<Outcome> {
    let started = Instant::now();
    let series = run.dataset(250)?;
    let sizes = run.cfg.vec_usize("ladder")?.unwrap_or_else(|| vec![25, 50, 100]);
    let replicates = run.cfg.usize_or("replicates", 200)?;
    let ref_size = run.cfg.usize_or("ref_N", 10_000)?;
    let sc = tight_simplex(run, run.cfg.vec_f64("start")?.map_or_else(|| run.cfg.theta0(), Ok)?)?;
    let bounds = run.cfg.bounds()?;
    let t2 = run_table2(run.model()?, bounds, &series, run.bank_seed()?, &sizes, replicates, ref_size, &sc)?;
    let d = t2.reference.len();
    let mut cols = vec!["N".to_string(), "replicates".to_string()];
    cols.extend((0..d).map(|k| format!("mean{k}")));
    cols.extend((0..d).map(|k| format!("se{k}")));
    let mut table = Table::new(cols);
    table.note(format!("reference (N = {ref_size}) = {}", fmt_vec(&t2.reference)));
    for (&n, (means, ses)) in t2.sizes.iter().zip(t2.summary()) {
        let mut row = vec![n.to_string(), replicates.to_string()];
        row.extend(means.iter().chain(&ses).map(f64::to_string));
        table.push(row);
    }
    let mut raw_cols = vec!["N".to_string(), "replicate".to_string()];
    raw_cols.extend((0..d).map(|k| format!("dev{k}")));
    let mut raw = Table::new(raw_cols);
    for (&n, reps) in t2.sizes.iter().zip(&t2.deviations) {
        for (r, dev) in reps.iter().enumerate() {
            let mut row = vec![n.to_string(), (r + 1).to_string()];
            row.extend(dev.iter().map(f64::to_string));
            raw.push(row);
        }
    }
    let files = vec![
        run.emit("table2", "table2.csv", started, &table.body())?,
        run.emit("table2", "table2_replicates.csv", started, &raw.body())?,
    ];
    Ok(Outcome { files, success: true })
}

/// How the Monte Carlo size grows with the number of intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SizeRule {
    Sqrt,
    Const(usize),
}

impl SizeRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "sqrt" => Ok(Self::Sqrt),
            other => match other.strip_prefix("const:").map(str::parse) {
                Some(Ok(n)) if n > 0 => Ok(Self::Const(n)),
                _ => bail!("size rule must be `sqrt` or `const:<N>`, got `{s}`"),
            },
        }
    }

    pub fn size(&self, n: usize) -> usize {
        match *self {
            Self::Sqrt => (n as f64).sqrt().ceil() as usize,
            Self::Const(c) => c,
        }
    }
}

/// `√n(θ̂ − θ₀)` for `replicates` fresh datasets of `n` intervals.
#[allow(clippy::too_many_arguments)]
pub fn run_nscaling(
    model: Arc<dyn TransformedModel>,
    bounds: &sam_core::model::ParameterBox,
    theta0: &[f64],
    v0: f64,
    dt: f64,
    euler: &EulerConfig,
    seed: u64,
    n: usize,
    rule: SizeRule,
    replicates: usize,
    sc: &SimplexConfig,
) -> Result<Vec<Vec<f64>>> {
    let size = rule.size(n);
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let data_key = StreamKey::new(derive_seed(seed, DATASET_LABEL, n as u64), 0, r + 1, Purpose::Euler);
            let series = simulate_dataset(model.as_ref(), theta0, v0, n, dt, euler, data_key)?;
            let bank_seed = derive_seed(seed, BANK_LABEL, derive_seed(n as u64, size as u64, r + 1));
            let s = LikelihoodSurface::build(model.clone(), bounds.clone(), &series.transitions(), bank_seed, size)?;
            let th = maximize(&s, sc)?.theta_hat;
            Ok(th.iter().zip(theta0).map(|(a, b)| (n as f64).sqrt() * (a - b)).collect())
        })
        .collect()
}

pub fn nscaling(run: &Run) -> Result<Outcome> {
    let started = Instant::now();
    let model = run.model()?;
    let bounds = run.cfg.bounds()?;
    let theta0 = run.cfg.theta0()?;
    let ns = run.cfg.vec_usize("n_list")?.unwrap_or_else(|| vec![100, 400, 1600]);
    let rule = SizeRule::parse(run.cfg.str_or("n_rule", "sqrt"))?;
    let replicates = run.cfg.usize_or("replicates", 100)?;
    let v0 = run.cfg.f64_or("v0", run.default_v0())?;
    let dt = run.cfg.f64_or("dt", 1.0)?;
    let sc = tight_simplex(run, run.cfg.vec_f64("start")?.unwrap_or_else(|| theta0.clone()))?;
    let d = theta0.len();
    let mut cols = vec!["n".to_string(), "N".to_string(), "replicates".to_string()];
    cols.extend((0..d).map(|k| format!("mean{k}")));
    cols.extend((0..d).map(|k| format!("var{k}")));
    let mut table = Table::new(cols);
    for &n in &ns {
        let devs = run_nscaling(model.clone(), &bounds, &theta0, v0, dt, &run.euler()?, run.seed, n, rule, replicates, &sc)?;
        let mut row = vec![n.to_string(), rule.size(n).to_string(), replicates.to_string()];
        let cols: Vec<Vec<f64>> = (0..d).map(|k| devs.iter().map(|v| v[k]).collect()).collect();
        row.extend(cols.iter().map(|c| mean_se(c).0.to_string()));
        row.extend(cols.iter().map(|c| sample_variance(c).to_string()));
        table.push(row);
    }
    let path = run.emit("nscaling", "nscaling.csv", started, &table.body())?;
    Ok(Outcome { files: vec![path], success: true })
}

pub fn validate(run: &Run) -> Result<Outcome> {
    let started = Instant::now();
    let scale = validation::Scale::parse(run.cfg.str_or("scale", "full"))?;
    let names: Vec<String> = match run.cfg.raw("checks") {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => validation::CHECKS.iter().map(|c| c.to_string()).collect(),
    };
    let mut table = Table::new(["check", "statistic", "threshold", "passed", "detail"]);
    let mut all = true;
    for name in &names {
        let report = validation::run_check(name, scale, run.seed)?;
        all &= report.passed;
        table.push([
            report.name.to_string(),
            report.statistic.to_string(),
            report.threshold.to_string(),
            report.passed.to_string(),
            report.detail.replace(',', ";"),
        ]);
    }
    let path = run.emit("validate", "validate.csv", started, &table.body())?;
    Ok(Outcome { files: vec![path], success: all })
}
