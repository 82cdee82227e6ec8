//! Parameter spaces and the transformed-diffusion contract.
//!
//! A model describes `dV = b(V; θ) ds + σ(V; θ) dB` through its unit-diffusion
//! transform `X = η(V, θ)`, where `X` has drift `α(·; θ)`. The estimator needs
//! `(α² + α′)/2` to be bounded below (its infimum is `l(θ)`) and bounded above
//! on every right half-line; `φ = (α² + α′)/2 − l` and `r(u) = sup_{z>u} φ(z)`
//! are supplied in closed form by each model.

mod conditions;
mod drifted_bm;
mod logistic;

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

pub use conditions::{check_conditions, ConditionProbe, ConditionReport};
pub use drifted_bm::DriftedBrownianModel;
pub use logistic::LogisticGrowthModel;

/// Compact box `Θ = Π [lower_k, upper_k]` with nonempty interior.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParameterBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBox("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidBox(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBox(format!("coordinate {k}: need finite lo < hi, got {lo},{hi}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Parses per-coordinate `lo,hi` pairs separated by whitespace or `;`,
    /// e.g. `0.03,0.18 850,1200 0.09,0.12`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for pair in spec.split(|c: char| c == ';' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let (lo, hi) = pair
                .split_once(',')
                .ok_or_else(|| Error::InvalidBox(format!("expected lo,hi but got {pair:?}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidBox(format!("not a number: {s:?}")))
            };
            lower.push(parse(lo)?);
            upper.push(parse(hi)?);
        }
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn check(&self, theta: &[f64]) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::OutsideBox { theta: theta.to_vec() })
        }
    }

    /// Maps unit-cube coordinates onto the box.
    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .enumerate()
            .map(|(k, u)| self.lower[k] + u * self.width(k))
            .collect()
    }

    pub fn to_unit(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .enumerate()
            .map(|(k, x)| (x - self.lower[k]) / self.width(k))
            .collect()
    }

    /// Tensor grid with `per_axis` points per coordinate (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        assert!(per_axis >= 2, "grid needs at least two points per axis");
        let d = self.dim();
        let total = per_axis.pow(d as u32);
        (0..total)
            .map(|mut idx| {
                (0..d)
                    .map(|k| {
                        let i = idx % per_axis;
                        idx /= per_axis;
                        self.lower[k] + self.width(k) * i as f64 / (per_axis - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }

    /// The box with coordinate `k` removed (`None` when `dim() == 1`).
    pub fn without(&self, k: usize) -> Option<Self> {
        if self.dim() == 1 {
            return None;
        }
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower.remove(k);
        upper.remove(k);
        Some(Self { lower, upper })
    }
}

impl fmt::Display for ParameterBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{lo},{hi}")?;
        }
        Ok(())
    }
}

/// A point of the parameter space, validated against its box.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(theta: Vec<f64>, bounds: &ParameterBox) -> Result<Self> {
        bounds.check(&theta)?;
        Ok(Self(theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Which sign of the Lamperti transform a model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negated,
}

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateSpace {
    pub lo: f64,
    pub hi: f64,
}

impl StateSpace {
    pub const REAL_LINE: StateSpace = StateSpace { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && self.lo < v && v < self.hi
    }
}

/// Diffusion model on the unit-diffusion scale.
///
/// `u` denotes an original-scale state in `eta*` and `drift`/`diffusion`, and a
/// transformed-scale state everywhere else. All evaluations are pure.
pub trait TransformedModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn param_names(&self) -> &'static [&'static str];

    fn dim(&self) -> usize {
        self.param_names().len()
    }

    fn orientation(&self) -> Orientation;

    /// The original state space `𝒱`.
    fn state_space(&self) -> StateSpace;

    /// Rejects boxes on which the model's closed forms are undefined.
    fn validate_box(&self, bounds: &ParameterBox) -> Result<()>;

    fn eta(&self, v: f64, theta: &[f64]) -> f64;

    /// `∂η/∂v` at an original-scale state.
    fn eta_du(&self, v: f64, theta: &[f64]) -> f64;

    fn eta_inv(&self, x: f64, theta: &[f64]) -> f64;

    fn alpha(&self, u: f64, theta: &[f64]) -> f64;

    fn alpha_du(&self, u: f64, theta: &[f64]) -> f64;

    /// Antiderivative of `α` normalised by `A(0, θ) = 0`.
    fn antiderivative(&self, u: f64, theta: &[f64]) -> f64;

    /// `l(θ) = inf_z (α² + α′)(z; θ)/2`.
    fn floor(&self, theta: &[f64]) -> f64;

    fn phi(&self, u: f64, theta: &[f64]) -> f64;

    /// `r(u, θ) = sup_{z > u} φ(z, θ)`.
    fn phi_tail_sup(&self, u: f64, theta: &[f64]) -> f64;

    /// A rate dominating `r(m(E, θ), θ)` for every θ in `bounds`, where `m` is
    /// the bridge minimum driven by `E` between `v` and `w` over time `t`.
    fn lambda_bound(&self, e: f64, v: f64, w: f64, t: f64, bounds: &ParameterBox) -> Result<f64>;

    fn drift(&self, v: f64, theta: &[f64]) -> f64;

    fn diffusion(&self, v: f64, theta: &[f64]) -> f64;

    fn check_state(&self, what: &'static str, v: f64) -> Result<()> {
        if self.state_space().contains(v) {
            Ok(())
        } else {
            Err(Error::Domain { what, value: v })
        }
    }
}

/// Looks up a model by its configuration name (`logistic`, `bm-drift`).
pub fn model_by_name(name: &str) -> Result<Arc<dyn TransformedModel>> {
    match name.trim() {
        "logistic" => Ok(Arc::new(LogisticGrowthModel)),
        "bm-drift" => Ok(Arc::new(DriftedBrownianModel)),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// The bridge minimum `m(E)` in transformed coordinates, reused by the rate
/// bounds and their checks.
pub(crate) fn bridge_minimum(x: f64, y: f64, t: f64, e: f64) -> f64 {
    (x + y - (2.0 * t * e + (y - x) * (y - x)).sqrt()) / 2.0
}

/// `r(m(E, θ), θ)` for the interval `(v, w, t)`, used by dominance checks.
pub(crate) fn tail_sup_at_minimum(
    model: &dyn TransformedModel,
    e: f64,
    v: f64,
    w: f64,
    t: f64,
    theta: &[f64],
) -> f64 {
    let x = model.eta(v, theta);
    let y = model.eta(w, theta);
    model.phi_tail_sup(bridge_minimum(x, y, t, e), theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_empty_interior() {
        assert!(ParameterBox::new(vec![1.0], vec![1.0]).is_err());
        assert!(ParameterBox::new(vec![], vec![]).is_err());
        assert!(ParameterBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(ParameterBox::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn box_parse_roundtrip() {
        let b = ParameterBox::parse("0.03,0.18 850,1200; 0.09,0.12").unwrap();
        assert_eq!(b.lower(), &[0.03, 850.0, 0.09]);
        assert_eq!(b.upper(), &[0.18, 1200.0, 0.12]);
        assert_eq!(ParameterBox::parse(&b.to_string()).unwrap(), b);
        assert!(ParameterBox::parse("1,2 3").is_err());
        assert!(ParameterBox::parse("").is_err());
    }

    #[test]
    fn grid_covers_corners() {
        let b = ParameterBox::new(vec![0.0, 10.0], vec![1.0, 20.0]).unwrap();
        let g = b.grid(3);
        assert_eq!(g.len(), 9);
        assert!(g.contains(&vec![0.0, 10.0]));
        assert!(g.contains(&vec![1.0, 20.0]));
        assert!(g.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn parameter_vector_validates() {
        let b = ParameterBox::new(vec![0.0], vec![1.0]).unwrap();
        assert!(ParameterVector::new(vec![1.0], &b).is_ok());
        assert!(ParameterVector::new(vec![1.5], &b).is_err());
    }

    #[test]
    fn names_resolve() {
        assert_eq!(model_by_name("logistic").unwrap().dim(), 3);
        assert_eq!(model_by_name("bm-drift").unwrap().dim(), 1);
        assert!(model_by_name("ou").is_err());
    }
}
