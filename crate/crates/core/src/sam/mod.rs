//! The simultaneous estimator: θ-free random elements, the random likelihood
//! function built from them, and Monte Carlo log-likelihood surfaces over
//! common random numbers.

pub mod cache;

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::bridge::{guard_tau, split_at_minimum, visit_chi, Branch, BridgeFrame, MinSplit, PoissonMark};
use crate::model::{ParameterBox, TransformedModel};
use crate::rng::{poisson_times, Purpose, StreamKey};
use crate::stats::log_gaussian_kernel;
use crate::{Error, Result};

/// Absolute slack allowed when checking `λ ≥ r(m, θ)`.
const DOMINANCE_TOL: f64 = 1e-9;
/// Above this many Poisson points the acceptance product is accumulated in logs.
const LOG_SPACE_MARKS: usize = 50;

/// One observed transition `v → w` over a duration `t`, on the original scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub from: f64,
    pub to: f64,
    pub dt: f64,
}

/// A θ-free random element: the exponential driving the minimum, the
/// Gaussian driving its time, the rate bound and the marked Poisson process.
#[derive(Clone, Debug, PartialEq)]
pub struct XiElement {
    pub e: f64,
    pub z: f64,
    pub lambda: f64,
    pub marks: Vec<PoissonMark>,
}

impl XiElement {
    pub fn count(&self) -> usize {
        self.marks.len()
    }
}

/// Draws one element for `tr` from the purpose-tagged substreams of `key`.
pub fn generate_xi(
    model: &dyn TransformedModel,
    bounds: &ParameterBox,
    tr: &Transition,
    key: StreamKey,
) -> Result<XiElement> {
    model.check_state("v", tr.from)?;
    model.check_state("w", tr.to)?;
    if !(tr.dt > 0.0 && tr.dt.is_finite()) {
        return Err(Error::Domain { what: "transition duration", value: tr.dt });
    }
    let e = key.with_purpose(Purpose::Exponential).rng().exponential();
    let z = key.with_purpose(Purpose::Gaussian).rng().gaussian();
    let lambda = model.lambda_bound(e, tr.from, tr.to, tr.dt, bounds)?;
    let times = poisson_times(&mut key.with_purpose(Purpose::Poisson).rng(), lambda, tr.dt);
    let mut normals = key.with_purpose(Purpose::GaussianMatrix).rng();
    let marks = times
        .into_iter()
        .map(|time| PoissonMark { time, normals: [normals.gaussian(), normals.gaussian(), normals.gaussian()] })
        .collect();
    Ok(XiElement { e, z, lambda, marks })
}

/// Independent elements `Ξ¹..Ξᴺ` for one interval, element `j` drawn under
/// replicate index `j` (1-based), so shorter banks are prefixes of longer ones.
#[derive(Clone, Debug, PartialEq)]
pub struct XiBank {
    pub interval_index: u64,
    pub transition: Transition,
    pub elements: Vec<XiElement>,
}

impl XiBank {
    pub fn generate(
        model: &dyn TransformedModel,
        bounds: &ParameterBox,
        tr: Transition,
        seed: u64,
        interval_index: u64,
        size: usize,
    ) -> Result<Self> {
        let elements = (1..=size as u64)
            .into_par_iter()
            .map(|j| generate_xi(model, bounds, &tr, StreamKey::new(seed, interval_index, j, Purpose::Exponential)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { interval_index, transition: tr, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Total number of Poisson points across the bank.
    pub fn total_marks(&self) -> usize {
        self.elements.iter().map(XiElement::count).sum()
    }
}

/// The θ-dependent, element-independent part of `L(Ξ, θ)` for one interval.
#[derive(Clone, Copy, Debug)]
struct IntervalTerms {
    frame: BridgeFrame,
    log_prefactor: f64,
}

impl IntervalTerms {
    fn new(model: &dyn TransformedModel, theta: &[f64], tr: &Transition) -> Result<Self> {
        let x = model.eta(tr.from, theta);
        let y = model.eta(tr.to, theta);
        let frame = BridgeFrame::new(x, y, tr.dt)?;
        let jac = model.eta_du(tr.to, theta).abs();
        let log_prefactor = jac.ln() + log_gaussian_kernel(y - x, tr.dt)
            + model.antiderivative(y, theta)
            - model.antiderivative(x, theta)
            - model.floor(theta) * tr.dt;
        Ok(Self { frame, log_prefactor })
    }
}

fn branch_product(
    model: &dyn TransformedModel,
    theta: &[f64],
    frame: &BridgeFrame,
    split: &MinSplit,
    branch: Branch,
    xi: &XiElement,
) -> f64 {
    let tau = guard_tau(split.tau(branch), frame.t, &xi.marks);
    let lambda = xi.lambda;
    if xi.marks.len() > LOG_SPACE_MARKS {
        let mut log_sum = 0.0;
        visit_chi(frame, split, tau, &xi.marks, |_, chi| {
            log_sum += (1.0 - model.phi(chi, theta) / lambda).max(0.0).ln();
        });
        log_sum.exp()
    } else {
        let mut prod = 1.0;
        visit_chi(frame, split, tau, &xi.marks, |_, chi| {
            prod *= (1.0 - model.phi(chi, theta) / lambda).max(0.0);
        });
        prod
    }
}

/// The acceptance part `a(Ξ, θ) = Σ_i p_i Π_j [1 − φ(χ_ij, θ)/λ]`.
fn acceptance(model: &dyn TransformedModel, theta: &[f64], frame: &BridgeFrame, xi: &XiElement) -> Result<f64> {
    let split = split_at_minimum(frame, xi.e, xi.z)?;
    let r = model.phi_tail_sup(split.m, theta);
    if xi.lambda < r - DOMINANCE_TOL {
        return Err(Error::DominanceViolation { lambda: xi.lambda, r });
    }
    if xi.marks.is_empty() {
        return Ok(1.0);
    }
    let a1 = branch_product(model, theta, frame, &split, Branch::First, xi);
    let a2 = branch_product(model, theta, frame, &split, Branch::Second, xi);
    Ok(split.p1 * a1 + split.p2 * a2)
}

/// `L(Ξ, θ)` for one element and transition.
pub fn eval_l(model: &dyn TransformedModel, xi: &XiElement, theta: &[f64], tr: &Transition) -> Result<f64> {
    let terms = IntervalTerms::new(model, theta, tr)?;
    Ok(terms.log_prefactor.exp() * acceptance(model, theta, &terms.frame, xi)?)
}

/// Mean of `a(Ξʲ, θ)` over the first `n` elements and the log-prefactor.
fn bank_parts(model: &dyn TransformedModel, bank: &XiBank, n: usize, theta: &[f64]) -> Result<(f64, f64)> {
    let terms = IntervalTerms::new(model, theta, &bank.transition)?;
    let mut sum = 0.0;
    for xi in &bank.elements[..n] {
        sum += acceptance(model, theta, &terms.frame, xi)?;
    }
    Ok((terms.log_prefactor, sum / n as f64))
}

/// `Lᴺ(θ)`, the average of `L(Ξʲ, θ)` over the bank.
pub fn eval_ln(model: &dyn TransformedModel, bank: &XiBank, theta: &[f64]) -> Result<f64> {
    if bank.is_empty() {
        return Err(Error::Degenerate("empty bank".into()));
    }
    let (log_pre, mean_a) = bank_parts(model, bank, bank.len(), theta)?;
    Ok(log_pre.exp() * mean_a)
}

/// Anything with a box and a log-likelihood, so that optimizers and finite
/// differences can run on surfaces, profiles and test functions alike.
pub trait Objective: Sync {
    fn bounds(&self) -> &ParameterBox;

    /// Log-likelihood at `theta`; `-∞` flags a numerically zero likelihood.
    fn log_likelihood(&self, theta: &[f64]) -> Result<f64>;

    fn dim(&self) -> usize {
        self.bounds().dim()
    }

    /// Monte Carlo sample size behind each evaluation, for tolerance schedules.
    fn bank_size(&self) -> usize {
        1
    }
}

/// `ℓₙᴺ(θ) = Σᵢ log Lᵢᴺ(θ)` over fixed banks.
#[derive(Clone)]
pub struct LikelihoodSurface {
    model: Arc<dyn TransformedModel>,
    bounds: ParameterBox,
    banks: Arc<Vec<XiBank>>,
    n_used: usize,
}

impl std::fmt::Debug for LikelihoodSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LikelihoodSurface")
            .field("model", &self.model.name())
            .field("bounds", &self.bounds)
            .field("intervals", &self.banks.len())
            .field("n_used", &self.n_used)
            .finish()
    }
}

impl LikelihoodSurface {
    /// Generates one bank of `size` elements per transition; interval `i`
    /// (1-based) uses keys `(seed, i, j, ·)`.
    pub fn build(
        model: Arc<dyn TransformedModel>,
        bounds: ParameterBox,
        transitions: &[Transition],
        seed: u64,
        size: usize,
    ) -> Result<Self> {
        model.validate_box(&bounds)?;
        if size == 0 {
            return Err(Error::Degenerate("bank size must be at least 1".into()));
        }
        let banks = transitions
            .par_iter()
            .enumerate()
            .map(|(i, tr)| XiBank::generate(model.as_ref(), &bounds, *tr, seed, i as u64 + 1, size))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, bounds, banks: Arc::new(banks), n_used: size })
    }

    pub fn from_banks(model: Arc<dyn TransformedModel>, bounds: ParameterBox, banks: Vec<XiBank>) -> Result<Self> {
        model.validate_box(&bounds)?;
        let n_used = banks.iter().map(XiBank::len).min().unwrap_or(0);
        if n_used == 0 {
            return Err(Error::Degenerate("surface needs nonempty banks".into()));
        }
        Ok(Self { model, bounds, banks: Arc::new(banks), n_used })
    }

    /// The same surface restricted to the first `n` elements of every bank.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.banks.iter().map(XiBank::len).min().unwrap_or(0) {
            return Err(Error::Degenerate(format!("cannot truncate banks to {n} elements")));
        }
        Ok(Self { n_used: n, ..self.clone() })
    }

    pub fn model(&self) -> &Arc<dyn TransformedModel> {
        &self.model
    }

    pub fn banks(&self) -> &[XiBank] {
        &self.banks
    }

    pub fn bank_size(&self) -> usize {
        self.n_used
    }

    pub fn intervals(&self) -> usize {
        self.banks.len()
    }

    /// `log Lᵢᴺ(θ)` for every interval.
    pub fn interval_log_likelihoods(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.bounds.check(theta)?;
        self.banks
            .par_iter()
            .map(|bank| {
                let (log_pre, mean_a) = bank_parts(self.model.as_ref(), bank, self.n_used, theta)?;
                Ok(if mean_a > 0.0 { log_pre + mean_a.ln() } else { f64::NEG_INFINITY })
            })
            .collect()
    }

    /// `L(Ξʲ, θ)` for every element of interval `i` (0-based).
    pub fn element_likelihoods(&self, i: usize, theta: &[f64]) -> Result<Vec<f64>> {
        let bank = &self.banks[i];
        let terms = IntervalTerms::new(self.model.as_ref(), theta, &bank.transition)?;
        let pre = terms.log_prefactor.exp();
        bank.elements[..self.n_used]
            .iter()
            .map(|xi| Ok(pre * acceptance(self.model.as_ref(), theta, &terms.frame, xi)?))
            .collect()
    }
}

impl Objective for LikelihoodSurface {
    fn bounds(&self) -> &ParameterBox {
        &self.bounds
    }

    fn bank_size(&self) -> usize {
        self.n_used
    }

    fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for ll in self.interval_log_likelihoods(theta)? {
            if ll == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += ll;
        }
        Ok(total)
    }
}

/// Default finite-difference steps, `1e-4` of each box width.
pub fn default_steps(bounds: &ParameterBox) -> Vec<f64> {
    (0..bounds.dim()).map(|k| 1e-4 * bounds.width(k)).collect()
}

fn shifted(theta: &[f64], moves: &[(usize, f64)], bounds: &ParameterBox) -> Result<Vec<f64>> {
    let mut p = theta.to_vec();
    for &(k, d) in moves {
        p[k] += d;
    }
    for (k, &pk) in p.iter().enumerate() {
        if !(pk >= bounds.lower()[k] && pk <= bounds.upper()[k]) {
            return Err(Error::StepOutsideBox(k));
        }
    }
    Ok(p)
}

fn check_steps(obj: &dyn Objective, theta: &[f64], h: &[f64]) -> Result<()> {
    obj.bounds().check(theta)?;
    if h.len() != theta.len() {
        return Err(Error::Degenerate(format!("{} steps for {} coordinates", h.len(), theta.len())));
    }
    if let Some(&bad) = h.iter().find(|&&hk| !(hk > 0.0 && hk.is_finite())) {
        return Err(Error::Domain { what: "finite-difference step", value: bad });
    }
    Ok(())
}

/// Central-difference gradient of the log-likelihood.
pub fn fd_gradient(obj: &dyn Objective, theta: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    check_steps(obj, theta, h)?;
    let b = obj.bounds();
    (0..theta.len())
        .map(|k| {
            let up = obj.log_likelihood(&shifted(theta, &[(k, h[k])], b)?)?;
            let down = obj.log_likelihood(&shifted(theta, &[(k, -h[k])], b)?)?;
            Ok((up - down) / (2.0 * h[k]))
        })
        .collect()
}

/// Central-difference Hessian of the log-likelihood, symmetrized.
pub fn fd_hessian(obj: &dyn Objective, theta: &[f64], h: &[f64]) -> Result<DMatrix<f64>> {
    check_steps(obj, theta, h)?;
    let b = obj.bounds();
    let d = theta.len();
    let f0 = obj.log_likelihood(theta)?;
    let f = |moves: &[(usize, f64)]| -> Result<f64> { obj.log_likelihood(&shifted(theta, moves, b)?) };
    let mut hess = DMatrix::zeros(d, d);
    for k in 0..d {
        let up = f(&[(k, h[k])])?;
        let down = f(&[(k, -h[k])])?;
        hess[(k, k)] = (up - 2.0 * f0 + down) / (h[k] * h[k]);
        for l in 0..k {
            let pp = f(&[(k, h[k]), (l, h[l])])?;
            let pm = f(&[(k, h[k]), (l, -h[l])])?;
            let mp = f(&[(k, -h[k]), (l, h[l])])?;
            let mm = f(&[(k, -h[k]), (l, -h[l])])?;
            hess[(k, l)] = (pp - pm - mp + mm) / (4.0 * h[k] * h[l]);
            hess[(l, k)] = hess[(k, l)];
        }
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite Hessian entry".into()));
    }
    Ok(sym)
}

/// Estimate of the Monte Carlo variance matrix `Aₙ` at `theta`.
#[derive(Clone, Debug)]
pub struct AnEstimate {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
}

impl AnEstimate {
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.matrix.nrows()
    }
}

/// `Aₙ = Σᵢ Var_j(∇L(Ξᵢʲ, θ) / Lᵢᴺ(θ))`, with per-element central differences
/// and the sample covariance over each bank.
pub fn estimate_an(surface: &LikelihoodSurface, theta: &[f64], h: &[f64]) -> Result<AnEstimate> {
    check_steps(surface, theta, h)?;
    let n = surface.bank_size();
    if n < 2 {
        return Err(Error::Degenerate("variance estimate needs at least 2 elements per bank".into()));
    }
    let d = theta.len();
    let b = surface.bounds();
    let mut total = DMatrix::zeros(d, d);
    let mut magnitude = 0.0;
    for i in 0..surface.intervals() {
        let base = surface.element_likelihoods(i, theta)?;
        let mean = base.iter().sum::<f64>() / n as f64;
        if mean.is_nan() || mean <= 0.0 {
            return Err(Error::Degenerate(format!("zero likelihood estimate on interval {}", i + 1)));
        }
        let mut scores = DMatrix::zeros(n, d);
        for k in 0..d {
            let up = surface.element_likelihoods(i, &shifted(theta, &[(k, h[k])], b)?)?;
            let down = surface.element_likelihoods(i, &shifted(theta, &[(k, -h[k])], b)?)?;
            for j in 0..n {
                scores[(j, k)] = (up[j] - down[j]) / (2.0 * h[k] * mean);
            }
        }
        magnitude += scores.norm_squared() / (n - 1) as f64;
        let centre = scores.row_mean();
        for j in 0..n {
            let mut row = scores.row_mut(j);
            row -= &centre;
        }
        total += scores.transpose() * &scores / (n - 1) as f64;
    }
    let total = (&total + total.transpose()) * 0.5;
    let eig = SymmetricEigen::new(total.clone());
    // eigenvalues at rounding level relative to the raw scores count as zero
    let cutoff = 1e-12 * eig.eigenvalues.amax().max(magnitude);
    let rank = eig.eigenvalues.iter().filter(|&&v| v > cutoff).count();
    Ok(AnEstimate { matrix: total, rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriftedBrownianModel, LogisticGrowthModel};
    use crate::stats::gaussian_kernel;

    fn bm_box() -> ParameterBox {
        ParameterBox::new(vec![-2.0], vec![2.0]).unwrap()
    }

    fn reference_box() -> ParameterBox {
        ParameterBox::new(vec![0.03, 850.0, 0.09], vec![0.18, 1200.0, 0.12]).unwrap()
    }

    fn bm_transitions() -> Vec<Transition> {
        let path = [0.0, 0.3, -0.2, 0.9, 1.4, 1.1, 0.7, 1.9, 2.2, 2.0, 2.6];
        path.windows(2).map(|w| Transition { from: w[0], to: w[1], dt: 0.5 }).collect()
    }

    #[test]
    fn brownian_elements_are_empty() {
        let tr = Transition { from: 0.0, to: 0.3, dt: 1.0 };
        for j in 1..100 {
            let key = StreamKey::new(1, 1, j, Purpose::Exponential);
            let xi = generate_xi(&DriftedBrownianModel, &bm_box(), &tr, key).unwrap();
            assert_eq!(xi.lambda, 0.0);
            assert!(xi.marks.is_empty());
            let l = eval_l(&DriftedBrownianModel, &xi, &[0.5], &tr).unwrap();
            let exact = (-0.02f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!((l - exact).abs() < 1e-15);
            assert!((l - 0.391043).abs() < 1e-6);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let tr = Transition { from: 700.0, to: 720.0, dt: 1.0 };
        let key = StreamKey::new(8, 3, 5, Purpose::Exponential);
        let a = generate_xi(&LogisticGrowthModel, &reference_box(), &tr, key).unwrap();
        let b = generate_xi(&LogisticGrowthModel, &reference_box(), &tr, key).unwrap();
        assert_eq!(a, b);
        assert!(a.marks.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn empty_draw_gives_bare_prefactor() {
        let model = LogisticGrowthModel;
        let theta = [0.1, 1000.0, 0.1];
        let tr = Transition { from: 700.0, to: 720.0, dt: 1.0 };
        let xi = XiElement { e: 0.7, z: 0.2, lambda: 3.0, marks: vec![] };
        let terms = IntervalTerms::new(&model, &theta, &tr).unwrap();
        let l = eval_l(&model, &xi, &theta, &tr).unwrap();
        assert!((l - terms.log_prefactor.exp()).abs() <= 1e-15 * l);
    }

    #[test]
    fn broken_rate_bound_is_caught() {
        let tr = Transition { from: 700.0, to: 720.0, dt: 1.0 };
        let key = StreamKey::new(8, 1, 1, Purpose::Exponential);
        let mut xi = generate_xi(&LogisticGrowthModel, &reference_box(), &tr, key).unwrap();
        xi.lambda = 1e-3;
        let err = eval_l(&LogisticGrowthModel, &xi, &[0.1, 1000.0, 0.1], &tr).unwrap_err();
        assert!(matches!(err, Error::DominanceViolation { .. }));
    }

    #[test]
    fn mean_is_invariant_under_self_concatenation() {
        let tr = Transition { from: 700.0, to: 720.0, dt: 1.0 };
        let bank = XiBank::generate(&LogisticGrowthModel, &reference_box(), tr, 4, 1, 40).unwrap();
        let theta = [0.1, 1000.0, 0.1];
        let once = eval_ln(&LogisticGrowthModel, &bank, &theta).unwrap();
        let mut doubled = bank.clone();
        doubled.elements.extend(bank.elements.iter().cloned());
        let twice = eval_ln(&LogisticGrowthModel, &doubled, &theta).unwrap();
        assert!((once - twice).abs() <= 1e-14 * once);
        let single = XiBank { elements: bank.elements[..1].to_vec(), ..bank.clone() };
        let direct = eval_l(&LogisticGrowthModel, &bank.elements[0], &theta, &tr).unwrap();
        assert!((eval_ln(&LogisticGrowthModel, &single, &theta).unwrap() - direct).abs() <= 1e-15 * direct);
    }

    #[test]
    fn banks_are_prefix_nested() {
        let tr = Transition { from: 700.0, to: 720.0, dt: 1.0 };
        let small = XiBank::generate(&LogisticGrowthModel, &reference_box(), tr, 4, 2, 10).unwrap();
        let large = XiBank::generate(&LogisticGrowthModel, &reference_box(), tr, 4, 2, 30).unwrap();
        assert_eq!(small.elements[..], large.elements[..10]);
    }

    #[test]
    fn brownian_loglik_is_closed_form() {
        let trs = bm_transitions();
        let s = LikelihoodSurface::build(Arc::new(DriftedBrownianModel), bm_box(), &trs, 1, 3).unwrap();
        for mu in [-1.5, -0.2, 0.0, 0.7, 1.9] {
            let exact: f64 = trs.iter().map(|t| gaussian_kernel(t.to - t.from - mu * t.dt, t.dt).ln()).sum();
            let got = s.log_likelihood(&[mu]).unwrap();
            assert!((got - exact).abs() < 1e-10, "{got} vs {exact}");
        }
        assert!(s.log_likelihood(&[3.0]).is_err());
    }

    #[test]
    fn brownian_gradient_matches_score() {
        let trs = bm_transitions();
        let s = LikelihoodSurface::build(Arc::new(DriftedBrownianModel), bm_box(), &trs, 1, 1).unwrap();
        let mu = 0.4;
        let score: f64 = trs.iter().map(|t| t.to - t.from - mu * t.dt).sum();
        let g = fd_gradient(&s, &[mu], &[1e-4]).unwrap();
        assert!((g[0] - score).abs() < 1e-6, "{} vs {score}", g[0]);
        assert!(estimate_an(&s, &[mu], &[1e-4]).is_err());
        let s3 = LikelihoodSurface::build(Arc::new(DriftedBrownianModel), bm_box(), &trs, 1, 3).unwrap();
        let an = estimate_an(&s3, &[mu], &[1e-4]).unwrap();
        assert!(an.matrix.iter().all(|&v| v.abs() < 1e-12));
        assert!(an.is_rank_deficient());
    }

    struct Quadratic(ParameterBox);

    impl Objective for Quadratic {
        fn bounds(&self) -> &ParameterBox {
            &self.0
        }

        fn log_likelihood(&self, t: &[f64]) -> Result<f64> {
            Ok(-3.0 * t[0] * t[0] + 1.5 * t[0] * t[1] - 0.5 * t[1] * t[1] + 2.0 * t[0] - t[1] + 4.0)
        }
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let q = Quadratic(ParameterBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap());
        let h = fd_hessian(&q, &[0.2, -0.3], &[0.1, 0.1]).unwrap();
        let exact = [[-6.0, 1.5], [1.5, -1.0]];
        for k in 0..2 {
            for l in 0..2 {
                assert!((h[(k, l)] - exact[k][l]).abs() < 1e-9, "{k}{l}: {}", h[(k, l)]);
            }
        }
        assert!(matches!(fd_hessian(&q, &[0.99, 0.0], &[0.1, 0.1]), Err(Error::StepOutsideBox(0))));
        assert!(fd_gradient(&q, &[0.0, 0.0], &[0.0, 0.1]).is_err());
    }

    #[test]
    fn logistic_an_is_symmetric_psd() {
        let trs: Vec<Transition> = [700.0, 760.0, 810.0, 870.0, 900.0]
            .windows(2)
            .map(|w| Transition { from: w[0], to: w[1], dt: 1.0 })
            .collect();
        let s = LikelihoodSurface::build(Arc::new(LogisticGrowthModel), reference_box(), &trs, 2, 20).unwrap();
        let theta = [0.1, 1000.0, 0.1];
        let an = estimate_an(&s, &theta, &default_steps(s.bounds())).unwrap();
        let m = &an.matrix;
        assert!((m - m.transpose()).amax() == 0.0);
        let eig = SymmetricEigen::new(m.clone());
        assert!(eig.eigenvalues.iter().all(|&v| v > -1e-10 * m.amax()));
    }
}
