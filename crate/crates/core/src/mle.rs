//! Monte Carlo maximum likelihood: Nelder–Mead over the box, warm-started
//! ladders in the bank size, profiles, and the observed-information and
//! sandwich variance estimates at the maximizer.

use nalgebra::DMatrix;

use crate::model::ParameterBox;
use crate::sam::{default_steps, estimate_an, fd_hessian, AnEstimate, LikelihoodSurface, Objective};
use crate::{Error, Result};

/// Convergence tolerance as a function of the bank size:
/// `ε(N) = max(floor, scale/√N)`, relative to the box widths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsSchedule {
    pub scale: f64,
    pub floor: f64,
}

impl EpsSchedule {
    pub fn fixed(eps: f64) -> Self {
        Self { scale: 0.0, floor: eps }
    }

    pub fn eps(&self, n: usize) -> f64 {
        self.floor.max(self.scale / (n.max(1) as f64).sqrt())
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self { scale: 0.1, floor: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexConfig {
    pub initial_point: Vec<f64>,
    /// Initial edge length as a fraction of each box width.
    pub initial_scale: f64,
    pub eps_schedule: EpsSchedule,
    pub max_evals: usize,
    /// Finite-difference steps for the variance estimates; defaults to
    /// `1e-4` of each box width.
    pub fd_steps: Option<Vec<f64>>,
    /// Whether to estimate the Monte Carlo variance matrix at the maximizer.
    pub estimate_an: bool,
}

impl SimplexConfig {
    pub fn new(initial_point: Vec<f64>) -> Self {
        Self {
            initial_point,
            initial_scale: 0.1,
            eps_schedule: EpsSchedule::default(),
            max_evals: 20_000,
            fd_steps: None,
            estimate_an: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub eval_index: usize,
    pub theta: Vec<f64>,
    pub loglik: f64,
}

/// Outcome of a simplex search on any objective.
#[derive(Clone, Debug)]
pub struct SimplexOutcome {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub eps: f64,
    pub evals: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct MleResult {
    pub theta_hat: Vec<f64>,
    pub loglik: f64,
    pub bank_size: usize,
    pub eps_used: f64,
    pub evals: usize,
    pub converged: bool,
    /// Point at which the derivatives were taken (θ̂ moved off the walls).
    pub theta_inference: Vec<f64>,
    pub bn: DMatrix<f64>,
    pub se_obs: Option<Vec<f64>>,
    pub an: Option<AnEstimate>,
    pub sandwich: Option<DMatrix<f64>>,
    pub trace: Vec<TraceRow>,
    pub warnings: Vec<String>,
}

/// Folds a coordinate into `[0, 1]` by reflecting at the walls.
fn fold(u: f64) -> f64 {
    let r = u.rem_euclid(2.0);
    if r > 1.0 {
        2.0 - r
    } else {
        r
    }
}

struct Evaluator<'a> {
    obj: &'a dyn Objective,
    evals: usize,
    trace: Vec<TraceRow>,
}

impl Evaluator<'_> {
    /// `−ℓ` at unit-cube point `u`; the −∞ flag becomes `+∞`.
    fn cost(&mut self, u: &[f64]) -> Result<f64> {
        let theta = self.obj.bounds().from_unit(u);
        let ll = self.obj.log_likelihood(&theta)?;
        self.evals += 1;
        self.trace.push(TraceRow { eval_index: self.evals, theta, loglik: ll });
        Ok(if ll.is_nan() { f64::INFINITY } else { -ll })
    }
}

fn simplex_diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .flat_map(|(v, _)| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// One Nelder–Mead run from `start` (unit coordinates) with edge `scale`.
fn run_simplex(
    ev: &mut Evaluator<'_>,
    start: &[f64],
    scale: f64,
    eps: f64,
    max_evals: usize,
) -> Result<(Vec<f64>, f64, bool)> {
    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let c0 = ev.cost(start)?;
    simplex.push((start.to_vec(), c0));
    for k in 0..d {
        let mut v = start.to_vec();
        v[k] = fold(v[k] + scale);
        if (v[k] - start[k]).abs() < 0.5 * scale {
            v[k] = fold(start[k] - scale);
        }
        let c = ev.cost(&v)?;
        simplex.push((v, c));
    }
    let point = |c: &[f64], dir: &[f64], coef: f64| -> Vec<f64> {
        c.iter().zip(dir).map(|(ci, di)| fold(ci + coef * (ci - di))).collect()
    };
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex.iter().all(|(_, c)| *c == f64::INFINITY) {
            return Err(Error::NoProgress);
        }
        if simplex_diameter(&simplex) < eps {
            return Ok((simplex[0].0.clone(), simplex[0].1, true));
        }
        if ev.evals >= max_evals {
            return Ok((simplex[0].0.clone(), simplex[0].1, false));
        }
        let mut centroid = vec![0.0; d];
        for (v, _) in &simplex[..d] {
            for k in 0..d {
                centroid[k] += v[k] / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let xr = point(&centroid, &worst.0, 1.0);
        let fr = ev.cost(&xr)?;
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst.0, 2.0);
            let fe = ev.cost(&xe)?;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc, ok) = if fr < worst.1 {
            let xc = point(&centroid, &xr, -0.5);
            let fc = ev.cost(&xc)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = point(&centroid, &worst.0, -0.5);
            let fc = ev.cost(&xc)?;
            (xc, fc, fc < worst.1)
        };
        if ok {
            simplex[d] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v: Vec<f64> = vertex.0.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect();
            let c = ev.cost(&v)?;
            *vertex = (v, c);
        }
    }
}

/// Maximizes `obj` with Nelder–Mead in unit-cube coordinates, then restarts
/// once from the best point with a fresh simplex at 10% of the box.
pub fn nelder_mead(obj: &dyn Objective, start: &[f64], config: &SimplexConfig, eps: f64) -> Result<SimplexOutcome> {
    let bounds = obj.bounds();
    bounds.check(start)?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Domain { what: "simplex tolerance", value: eps });
    }
    let mut ev = Evaluator { obj, evals: 0, trace: Vec::new() };
    let mut warnings = Vec::new();
    let u0 = bounds.to_unit(start);
    let (u1, c1, conv1) = run_simplex(&mut ev, &u0, config.initial_scale, eps, config.max_evals)?;
    let (u2, c2, conv2) = if conv1 {
        run_simplex(&mut ev, &u1, 0.1, eps, config.max_evals)?
    } else {
        (u1.clone(), c1, false)
    };
    let converged = conv1 && conv2;
    if !converged {
        warnings.push(format!("stopped after {} evaluations without reaching tolerance {eps:e}", ev.evals));
    }
    // the overall best evaluation, whichever run produced it
    let (u, c) = if c2 <= c1 { (u2, c2) } else { (u1, c1) };
    let mut theta = bounds.from_unit(&u);
    let mut loglik = -c;
    if let Some(row) = ev.trace.iter().filter(|r| r.loglik > loglik).max_by(|a, b| a.loglik.total_cmp(&b.loglik)) {
        theta = row.theta.clone();
        loglik = row.loglik;
    }
    Ok(SimplexOutcome { theta, loglik, eps, evals: ev.evals, converged, trace: ev.trace, warnings })
}

/// Moves `theta` at least `margin[k]` inside each wall so the finite
/// differences stay in the box.
fn pull_inside(theta: &[f64], bounds: &ParameterBox, margin: &[f64]) -> Vec<f64> {
    theta
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let lo = bounds.lower()[k] + margin[k];
            let hi = bounds.upper()[k] - margin[k];
            if lo > hi {
                0.5 * (bounds.lower()[k] + bounds.upper()[k])
            } else {
                v.clamp(lo, hi)
            }
        })
        .collect()
}

fn invert_pd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse())
}

/// ε-maximizer of `ℓₙᴺ` with observed-information and sandwich variances.
pub fn maximize(surface: &LikelihoodSurface, config: &SimplexConfig) -> Result<MleResult> {
    let n = Objective::bank_size(surface);
    let eps = config.eps_schedule.eps(n);
    let out = nelder_mead(surface, &config.initial_point, config, eps)?;
    let bounds = surface.bounds();
    let h = config.fd_steps.clone().unwrap_or_else(|| default_steps(bounds));
    let margin: Vec<f64> = h.iter().map(|v| 2.0 * v).collect();
    let at = pull_inside(&out.theta, bounds, &margin);
    let mut warnings = out.warnings;
    if at != out.theta {
        warnings.push("maximizer within two steps of the box; derivatives taken at a shifted point".into());
    }
    let bn = -fd_hessian(surface, &at, &h)?;
    let bn_inv = invert_pd(&bn);
    if bn_inv.is_none() {
        warnings.push("observed information is not positive definite".into());
    }
    let se_obs = bn_inv.as_ref().map(|inv| (0..inv.nrows()).map(|k| inv[(k, k)].sqrt()).collect());
    let an = if config.estimate_an && n >= 2 { Some(estimate_an(surface, &at, &h)?) } else { None };
    if an.as_ref().is_some_and(AnEstimate::is_rank_deficient) {
        warnings.push("Monte Carlo variance matrix is rank deficient".into());
    }
    let sandwich = match (&bn_inv, &an) {
        (Some(inv), Some(a)) => Some(inv * &a.matrix * inv / n as f64),
        _ => None,
    };
    Ok(MleResult {
        theta_hat: out.theta,
        loglik: out.loglik,
        bank_size: n,
        eps_used: eps,
        evals: out.evals,
        converged: out.converged,
        theta_inference: at,
        bn,
        se_obs,
        an,
        sandwich,
        trace: out.trace,
        warnings,
    })
}

/// Maximizes for each bank size in turn, starting each search at the
/// previous maximizer.
pub fn warm_start_ladder(
    mut build: impl FnMut(usize) -> Result<LikelihoodSurface>,
    sizes: &[usize],
    config: &SimplexConfig,
) -> Result<Vec<MleResult>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Degenerate("bank sizes must increase".into()));
    }
    let mut cfg = config.clone();
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let surface = build(n)?;
        let res = maximize(&surface, &cfg)?;
        cfg.initial_point = res.theta_hat.clone();
        out.push(res);
    }
    Ok(out)
}

/// The objective restricted to `coord = value`, over the remaining coordinates.
struct Slice<'a> {
    inner: &'a dyn Objective,
    coord: usize,
    value: f64,
    bounds: ParameterBox,
}

impl Slice<'_> {
    fn full(&self, rest: &[f64]) -> Vec<f64> {
        let mut t = rest.to_vec();
        t.insert(self.coord, self.value);
        t
    }
}

impl Objective for Slice<'_> {
    fn bounds(&self) -> &ParameterBox {
        &self.bounds
    }

    fn log_likelihood(&self, rest: &[f64]) -> Result<f64> {
        self.inner.log_likelihood(&self.full(rest))
    }

    fn bank_size(&self) -> usize {
        self.inner.bank_size()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePoint {
    pub value: f64,
    pub theta: Vec<f64>,
    pub loglik: f64,
}

/// Profile log-likelihood of coordinate `coord` over `grid`, maximizing the
/// other coordinates at each point (warm-started along the grid).
pub fn profile(obj: &dyn Objective, coord: usize, grid: &[f64], config: &SimplexConfig) -> Result<Vec<ProfilePoint>> {
    let bounds = obj.bounds();
    if coord >= bounds.dim() {
        return Err(Error::Degenerate(format!("no coordinate {coord} in a {}-dimensional box", bounds.dim())));
    }
    let (lo, hi) = (bounds.lower()[coord], bounds.upper()[coord]);
    if let Some(&bad) = grid.iter().find(|&&g| !(g >= lo && g <= hi)) {
        return Err(Error::Domain { what: "profile grid value", value: bad });
    }
    let Some(rest_box) = bounds.without(coord) else {
        return grid
            .iter()
            .map(|&value| Ok(ProfilePoint { value, theta: vec![value], loglik: obj.log_likelihood(&[value])? }))
            .collect();
    };
    let mut start: Vec<f64> = config.initial_point.clone();
    start.remove(coord);
    let mut out = Vec::with_capacity(grid.len());
    for &value in grid {
        let slice = Slice { inner: obj, coord, value, bounds: rest_box.clone() };
        let res = nelder_mead(&slice, &start, config, config.eps_schedule.eps(obj.bank_size()))?;
        start = res.theta.clone();
        out.push(ProfilePoint { value, theta: slice.full(&res.theta), loglik: res.loglik });
    }
    Ok(out)
}
