//! Rejection sampling of diffusion bridges and the pointwise acceptance
//! estimator.

use super::{guard_tau, sample_tau, split_at_minimum, visit_chi, BridgeFrame, MinSplit, PoissonMark};
use crate::model::TransformedModel;
use crate::rng::{poisson_times, KeyedRng, Purpose, StreamKey};
use crate::{Error, Result};

/// Accepted values of a bridge at its Poisson times, on the transformed scale.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSkeleton {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub min_value: f64,
    pub tau: f64,
    pub start: f64,
    pub end: f64,
    pub horizon: f64,
}

impl PathSkeleton {
    /// Endpoints, skeleton points and the minimum, merged in time order.
    pub fn full_path(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.times.len() + 3);
        out.push((0.0, self.start));
        let mut placed = false;
        for (&s, &v) in self.times.iter().zip(&self.values) {
            if !placed && self.tau < s {
                out.push((self.tau, self.min_value));
                placed = true;
            }
            out.push((s, v));
        }
        if !placed {
            out.push((self.tau, self.min_value));
        }
        out.push((self.horizon, self.end));
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EaConfig {
    pub max_proposals: u64,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self { max_proposals: 1_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct EaOutcome {
    pub skeleton: PathSkeleton,
    pub proposals: u64,
}

/// The per-purpose streams behind one key, consumed in order across proposals.
struct Streams {
    exp: KeyedRng,
    gauss: KeyedRng,
    uniform: KeyedRng,
    poisson: KeyedRng,
    matrix: KeyedRng,
    accept: KeyedRng,
}

impl Streams {
    fn new(key: StreamKey) -> Self {
        Self {
            exp: key.with_purpose(Purpose::Exponential).rng(),
            gauss: key.with_purpose(Purpose::Gaussian).rng(),
            uniform: key.with_purpose(Purpose::Uniform).rng(),
            poisson: key.with_purpose(Purpose::Poisson).rng(),
            matrix: key.with_purpose(Purpose::GaussianMatrix).rng(),
            accept: key.with_purpose(Purpose::Acceptance).rng(),
        }
    }

    /// Draws one proposal: the minimum split, its time and the Poisson marks
    /// at rate `rate_of(m)`.
    fn propose(
        &mut self,
        frame: &BridgeFrame,
        rate_of: impl Fn(f64) -> f64,
    ) -> Result<(MinSplit, f64, f64, Vec<PoissonMark>)> {
        let e = self.exp.exponential();
        let z = self.gauss.gaussian();
        let split = split_at_minimum(frame, e, z)?;
        let tau = sample_tau(&split, self.uniform.uniform());
        let rate = rate_of(split.m);
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Domain { what: "Poisson rate", value: rate });
        }
        let marks: Vec<PoissonMark> = poisson_times(&mut self.poisson, rate, frame.t)
            .into_iter()
            .map(|time| {
                let m = &mut self.matrix;
                PoissonMark { time, normals: [m.gaussian(), m.gaussian(), m.gaussian()] }
            })
            .collect();
        let tau = guard_tau(tau, frame.t, &marks);
        Ok((split, tau, rate, marks))
    }
}

#[allow(clippy::too_many_arguments)]
fn acceptance_product(
    model: &dyn TransformedModel,
    theta: &[f64],
    frame: &BridgeFrame,
    split: &MinSplit,
    tau: f64,
    rate: f64,
    marks: &[PoissonMark],
    values: Option<&mut Vec<f64>>,
) -> f64 {
    if marks.is_empty() {
        return 1.0;
    }
    let mut prod = 1.0;
    let mut store = values;
    visit_chi(frame, split, tau, marks, |_, chi| {
        prod *= (1.0 - model.phi(chi, theta) / rate).max(0.0);
        if let Some(v) = store.as_deref_mut() {
            v.push(chi);
        }
    });
    prod
}

/// Draws a skeleton of the diffusion bridge from `(0, x)` to `(t, y)` by
/// proposing Brownian bridges through their minimum and accepting with
/// probability `Π_j [1 − φ(W_{Y_j}, θ)/r(m, θ)]`.
pub fn ea_bridge_sampler(
    model: &dyn TransformedModel,
    theta: &[f64],
    frame: BridgeFrame,
    key: StreamKey,
    config: EaConfig,
) -> Result<EaOutcome> {
    let mut streams = Streams::new(key);
    let mut proposals = 0u64;
    while proposals < config.max_proposals {
        proposals += 1;
        let (split, tau, rate, marks) = streams.propose(&frame, |m| model.phi_tail_sup(m, theta))?;
        let mut values = Vec::with_capacity(marks.len());
        let a = acceptance_product(model, theta, &frame, &split, tau, rate, &marks, Some(&mut values));
        if streams.accept.uniform() < a {
            let skeleton = PathSkeleton {
                times: marks.iter().map(|mk| mk.time).collect(),
                values,
                min_value: split.m,
                tau,
                start: frame.x,
                end: frame.y,
                horizon: frame.t,
            };
            return Ok(EaOutcome { skeleton, proposals });
        }
    }
    Err(Error::IterationCap { proposals, acceptance: 0.0 })
}

/// One unbiased draw of the acceptance probability `a(θ)` for the bridge,
/// from a single proposal with Poisson rate `rate_multiplier · r(m, θ)`.
pub fn am_pointwise(
    model: &dyn TransformedModel,
    theta: &[f64],
    frame: BridgeFrame,
    key: StreamKey,
    rate_multiplier: f64,
) -> Result<f64> {
    if !(rate_multiplier >= 1.0 && rate_multiplier.is_finite()) {
        return Err(Error::Domain { what: "rate multiplier", value: rate_multiplier });
    }
    let mut streams = Streams::new(key);
    let (split, tau, rate, marks) =
        streams.propose(&frame, |m| rate_multiplier * model.phi_tail_sup(m, theta))?;
    Ok(acceptance_product(model, theta, &frame, &split, tau, rate, &marks, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriftedBrownianModel, LogisticGrowthModel};
    use crate::stats::mean_se;

    const THETA0: [f64; 3] = [0.1, 1000.0, 0.1];

    fn logistic_frame(v: f64, w: f64, t: f64) -> BridgeFrame {
        let m = LogisticGrowthModel;
        BridgeFrame::new(m.eta(v, &THETA0), m.eta(w, &THETA0), t).unwrap()
    }

    #[test]
    fn brownian_model_accepts_first_proposal() {
        let frame = BridgeFrame::new(0.0, 1.0, 1.0).unwrap();
        for j in 0..50 {
            let key = StreamKey::new(1, 0, j, Purpose::Exponential);
            let out = ea_bridge_sampler(&DriftedBrownianModel, &[0.3], frame, key, EaConfig::default()).unwrap();
            assert_eq!(out.proposals, 1);
            assert!(out.skeleton.times.is_empty());
            assert_eq!(am_pointwise(&DriftedBrownianModel, &[0.3], frame, key, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn skeleton_respects_minimum_and_endpoints() {
        let frame = logistic_frame(700.0, 760.0, 1.0);
        for j in 0..200 {
            let key = StreamKey::new(2, 0, j, Purpose::Exponential);
            let out = ea_bridge_sampler(&LogisticGrowthModel, &THETA0, frame, key, EaConfig::default()).unwrap();
            let sk = &out.skeleton;
            assert!(sk.values.iter().all(|&v| v >= sk.min_value));
            assert!(sk.times.windows(2).all(|w| w[0] < w[1]));
            let path = sk.full_path();
            assert_eq!(path[0], (0.0, frame.x));
            assert_eq!(*path.last().unwrap(), (frame.t, frame.y));
            assert!(path.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn ea_is_deterministic_per_key() {
        let frame = logistic_frame(700.0, 720.0, 1.0);
        let key = StreamKey::new(9, 3, 4, Purpose::Exponential);
        let a = ea_bridge_sampler(&LogisticGrowthModel, &THETA0, frame, key, EaConfig::default()).unwrap();
        let b = ea_bridge_sampler(&LogisticGrowthModel, &THETA0, frame, key, EaConfig::default()).unwrap();
        assert_eq!(a.skeleton, b.skeleton);
        assert_eq!(a.proposals, b.proposals);
    }

    #[test]
    fn iteration_cap_is_reported() {
        // a steep drift makes acceptance rare enough to exhaust a tiny cap
        let frame = logistic_frame(200.0, 1800.0, 1.0);
        let key = StreamKey::new(5, 0, 0, Purpose::Exponential);
        let res = (0..50u64).find_map(|j| {
            let key = StreamKey { replicate_index: j, ..key };
            ea_bridge_sampler(&LogisticGrowthModel, &THETA0, frame, key, EaConfig { max_proposals: 1 }).err()
        });
        assert!(matches!(res, Some(Error::IterationCap { proposals: 1, .. })));
    }

    #[test]
    fn am_in_unit_interval_and_rejects_bad_multiplier() {
        let frame = logistic_frame(700.0, 720.0, 1.0);
        for j in 0..500 {
            let key = StreamKey::new(4, 0, j, Purpose::Exponential);
            let a = am_pointwise(&LogisticGrowthModel, &THETA0, frame, key, 1.5).unwrap();
            assert!((0.0..=1.0).contains(&a));
        }
        let key = StreamKey::new(4, 0, 0, Purpose::Exponential);
        assert!(am_pointwise(&LogisticGrowthModel, &THETA0, frame, key, 0.5).is_err());
    }

    #[test]
    fn thinning_preserves_mean() {
        let frame = logistic_frame(700.0, 720.0, 1.0);
        let n = 100_000u64;
        let draw = |mult: f64, seed: u64| -> Vec<f64> {
            (0..n)
                .map(|j| {
                    let key = StreamKey::new(seed, 0, j, Purpose::Exponential);
                    am_pointwise(&LogisticGrowthModel, &THETA0, frame, key, mult).unwrap()
                })
                .collect()
        };
        let (m1, s1) = mean_se(&draw(1.0, 11));
        let (m2, s2) = mean_se(&draw(2.0, 12));
        assert!((m1 - m2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt(), "{m1} vs {m2}");
    }
}
