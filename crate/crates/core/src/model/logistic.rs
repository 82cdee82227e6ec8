use super::{Orientation, ParameterBox, StateSpace, TransformedModel};
use crate::{Error, Result};

/// Logistic growth `dV = δ V (1 − V/c) ds + σ V dB` on `(0, ∞)`, with
/// `θ = (δ, c, σ)`.
///
/// The transform is `η(v) = −log(v)/σ`: the negated Lamperti map, because
/// `(α² + α′)` is bounded above on right half-lines only in that orientation.
/// Writing `z = e^{−σu}/c`, the transformed drift is
/// `α(u) = σ/2 − δ/σ + (δ/σ) z` and `φ(u) = (δ/σ)² (z − 1)² / 2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogisticGrowthModel;

#[inline]
fn unpack(theta: &[f64]) -> (f64, f64, f64) {
    (theta[0], theta[1], theta[2])
}

impl TransformedModel for LogisticGrowthModel {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["delta", "c", "sigma"]
    }

    fn orientation(&self) -> Orientation {
        Orientation::Negated
    }

    fn state_space(&self) -> StateSpace {
        StateSpace { lo: 0.0, hi: f64::INFINITY }
    }

    fn validate_box(&self, bounds: &ParameterBox) -> Result<()> {
        if bounds.dim() != 3 {
            return Err(Error::InvalidBox(format!("logistic model needs 3 coordinates, got {}", bounds.dim())));
        }
        for (k, name) in self.param_names().iter().enumerate() {
            if bounds.lower()[k] <= 0.0 {
                return Err(Error::InvalidBox(format!(
                    "lower bound of {name} must be positive, got {}",
                    bounds.lower()[k]
                )));
            }
        }
        Ok(())
    }

    fn eta(&self, v: f64, theta: &[f64]) -> f64 {
        -v.ln() / theta[2]
    }

    fn eta_du(&self, v: f64, theta: &[f64]) -> f64 {
        -1.0 / (theta[2] * v)
    }

    fn eta_inv(&self, x: f64, theta: &[f64]) -> f64 {
        (-theta[2] * x).exp()
    }

    fn alpha(&self, u: f64, theta: &[f64]) -> f64 {
        let (delta, c, sigma) = unpack(theta);
        sigma / 2.0 - delta / sigma + delta / (sigma * c) * (-sigma * u).exp()
    }

    fn alpha_du(&self, u: f64, theta: &[f64]) -> f64 {
        let (delta, c, sigma) = unpack(theta);
        -delta / c * (-sigma * u).exp()
    }

    fn antiderivative(&self, u: f64, theta: &[f64]) -> f64 {
        let (delta, c, sigma) = unpack(theta);
        (sigma / 2.0 - delta / sigma) * u - delta / (sigma * sigma * c) * (-sigma * u).exp_m1()
    }

    fn floor(&self, theta: &[f64]) -> f64 {
        let (delta, _, sigma) = unpack(theta);
        sigma * sigma / 8.0 - delta / 2.0
    }

    fn phi(&self, u: f64, theta: &[f64]) -> f64 {
        let (delta, c, sigma) = unpack(theta);
        let k = delta / sigma;
        let s = (-sigma * u).exp() / c - 1.0;
        0.5 * k * k * s * s
    }

    fn phi_tail_sup(&self, u: f64, theta: &[f64]) -> f64 {
        let (delta, _, sigma) = unpack(theta);
        let k = delta / sigma;
        self.phi(u, theta).max(0.5 * k * k)
    }

    fn lambda_bound(&self, e: f64, v: f64, w: f64, t: f64, bounds: &ParameterBox) -> Result<f64> {
        self.check_state("v", v)?;
        self.check_state("w", w)?;
        let (lo, hi) = (bounds.lower(), bounds.upper());
        let (delta_hi, c_lo, sigma_lo, sigma_hi) = (hi[0], lo[1], lo[2], hi[2]);
        let log_ratio = (w / v).ln();
        let q = v.ln() + w.ln() + (2.0 * t * sigma_hi * sigma_hi * e + log_ratio * log_ratio).sqrt();
        let excess = (0.5 * q).exp() / c_lo - 1.0;
        let lambda = delta_hi * delta_hi / (2.0 * sigma_lo * sigma_lo) * (excess * excess).max(1.0);
        if lambda.is_finite() {
            Ok(lambda)
        } else {
            Err(Error::Degenerate(format!("rate bound overflows for v={v}, w={w}, E={e}")))
        }
    }

    fn drift(&self, v: f64, theta: &[f64]) -> f64 {
        let (delta, c, _) = unpack(theta);
        delta * v * (1.0 - v / c)
    }

    fn diffusion(&self, v: f64, theta: &[f64]) -> f64 {
        theta[2] * v
    }
}
