use super::{Orientation, ParameterBox, StateSpace, TransformedModel};
use crate::{Error, Result};

/// Brownian motion with drift, `dV = μ ds + dB`, `θ = (μ)`.
///
/// Here `φ ≡ 0`, so the estimator is exact: every random element returns the
/// Gaussian transition density `𝒩_t(w − v − μt)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DriftedBrownianModel;

impl TransformedModel for DriftedBrownianModel {
    fn name(&self) -> &'static str {
        "bm-drift"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["mu"]
    }

    fn orientation(&self) -> Orientation {
        Orientation::Positive
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::REAL_LINE
    }

    fn validate_box(&self, bounds: &ParameterBox) -> Result<()> {
        if bounds.dim() != 1 {
            return Err(Error::InvalidBox(format!("bm-drift needs 1 coordinate, got {}", bounds.dim())));
        }
        Ok(())
    }

    fn eta(&self, v: f64, _theta: &[f64]) -> f64 {
        v
    }

    fn eta_du(&self, _v: f64, _theta: &[f64]) -> f64 {
        1.0
    }

    fn eta_inv(&self, x: f64, _theta: &[f64]) -> f64 {
        x
    }

    fn alpha(&self, _u: f64, theta: &[f64]) -> f64 {
        theta[0]
    }

    fn alpha_du(&self, _u: f64, _theta: &[f64]) -> f64 {
        0.0
    }

    fn antiderivative(&self, u: f64, theta: &[f64]) -> f64 {
        theta[0] * u
    }

    fn floor(&self, theta: &[f64]) -> f64 {
        0.5 * theta[0] * theta[0]
    }

    fn phi(&self, _u: f64, _theta: &[f64]) -> f64 {
        0.0
    }

    fn phi_tail_sup(&self, _u: f64, _theta: &[f64]) -> f64 {
        0.0
    }

    fn lambda_bound(&self, _e: f64, v: f64, w: f64, _t: f64, _bounds: &ParameterBox) -> Result<f64> {
        self.check_state("v", v)?;
        self.check_state("w", w)?;
        Ok(0.0)
    }

    fn drift(&self, _v: f64, theta: &[f64]) -> f64 {
        theta[0]
    }

    fn diffusion(&self, _v: f64, _theta: &[f64]) -> f64 {
        1.0
    }
}
