//! Numeric screen of the drift conditions on a user grid.

use super::{tail_sup_at_minimum, ParameterBox, TransformedModel};

const TOL: f64 = 1e-9;

/// What to probe besides the state grid itself.
#[derive(Clone, Debug)]
pub struct ConditionProbe {
    pub theta_per_axis: usize,
    pub e_values: Vec<f64>,
    pub durations: Vec<f64>,
    /// Number of grid states mapped back to the original scale and paired
    /// up as `(v, w)` for the rate-bound check.
    pub state_pairs: usize,
}

impl Default for ConditionProbe {
    fn default() -> Self {
        Self { theta_per_axis: 5, e_values: vec![0.05, 0.5, 2.0, 8.0], durations: vec![0.5, 1.0], state_pairs: 6 }
    }
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    /// Smallest `φ` seen; must not be negative.
    pub min_phi: f64,
    /// Largest `max_{z ≥ u} φ(z) − r(u)` over the grid; must not be positive.
    pub max_tail_excess: f64,
    /// Smallest `λ − max_θ r(m(E, θ), θ)` over the probes; must not be negative.
    pub min_lambda_margin: f64,
    pub violations: Vec<String>,
}

impl ConditionReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates `φ`, `r` and the rate bound on `grid` (transformed scale) for a
/// tensor grid of parameters over `bounds`. Never fails: problems are listed
/// in the report.
pub fn check_conditions(
    model: &dyn TransformedModel,
    bounds: &ParameterBox,
    grid: &[f64],
    probe: &ConditionProbe,
) -> ConditionReport {
    let mut report = ConditionReport {
        min_phi: f64::NAN,
        max_tail_excess: f64::NAN,
        min_lambda_margin: f64::NAN,
        violations: Vec::new(),
    };
    if let Err(e) = model.validate_box(bounds) {
        report.violations.push(format!("precondition: {e}"));
        return report;
    }
    if grid.is_empty() {
        report.violations.push("precondition: empty state grid".into());
        return report;
    }
    let mut states = grid.to_vec();
    states.sort_by(f64::total_cmp);
    let thetas = bounds.grid(probe.theta_per_axis.max(2));

    let mut min_phi = f64::INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    for theta in &thetas {
        let phis: Vec<f64> = states.iter().map(|&u| model.phi(u, theta)).collect();
        min_phi = min_phi.min(phis.iter().copied().fold(f64::INFINITY, f64::min));
        let mut suffix_max = f64::NEG_INFINITY;
        let mut prev_r = f64::NEG_INFINITY;
        for (i, &u) in states.iter().enumerate().rev() {
            suffix_max = suffix_max.max(phis[i]);
            let r = model.phi_tail_sup(u, theta);
            max_excess = max_excess.max(suffix_max - r);
            // walking leftwards, r must not decrease
            if r < prev_r - TOL * prev_r.abs().max(1.0) {
                report.violations.push(format!("r decreases to the left at u={u}, theta={theta:?}"));
            }
            prev_r = r;
        }
    }
    report.min_phi = min_phi;
    report.max_tail_excess = max_excess;
    if min_phi < -TOL {
        report.violations.push(format!("phi bounded below violated: min phi = {min_phi}"));
    }
    if max_excess > TOL {
        report.violations.push(format!("phi exceeds r on a right half-line by {max_excess}"));
    }

    let center = bounds.center();
    let step = (states.len() / probe.state_pairs.max(1)).max(1);
    let originals: Vec<f64> = states
        .iter()
        .step_by(step)
        .map(|&u| model.eta_inv(u, &center))
        .filter(|&v| model.state_space().contains(v))
        .collect();
    let mut min_margin = f64::INFINITY;
    for &v in &originals {
        for &w in &originals {
            for &e in &probe.e_values {
                for &t in &probe.durations {
                    let lambda = match model.lambda_bound(e, v, w, t, bounds) {
                        Ok(l) => l,
                        Err(err) => {
                            report.violations.push(format!("lambda bound failed at v={v}, w={w}: {err}"));
                            continue;
                        }
                    };
                    let r_max = thetas
                        .iter()
                        .map(|theta| tail_sup_at_minimum(model, e, v, w, t, theta))
                        .fold(f64::NEG_INFINITY, f64::max);
                    let margin = lambda - r_max;
                    min_margin = min_margin.min(margin);
                    if margin < -TOL * r_max.abs().max(1.0) {
                        report.violations.push(format!(
                            "lambda bound {lambda} below r = {r_max} at E={e}, v={v}, w={w}, t={t}"
                        ));
                    }
                }
            }
        }
    }
    report.min_lambda_margin = min_margin;
    report
}
