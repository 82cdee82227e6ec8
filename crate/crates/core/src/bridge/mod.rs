//! Brownian-bridge machinery on the transformed scale.
//!
//! A Brownian bridge from `(0, x)` to `(t, y)` is decomposed at its minimum
//! `m`: `m` is driven by an exponential `E`, the time of the minimum by a
//! Gaussian `Z` (two candidate times `τ₁`, `τ₂` with weights `p₁`, `p₂`), and
//! the path on either side of `τ` is a three-dimensional Bessel bridge built
//! from standard bridges at the Poisson times. The Gaussian pool is shared by
//! both candidate times, so the construction is continuous in θ.

mod exact;

use crate::{Error, Result};

pub use exact::{am_pointwise, ea_bridge_sampler, EaConfig, EaOutcome, PathSkeleton};

/// Relative distance below which a Poisson time is considered to coincide
/// with `τ`, and the relative shift applied to `τ` in that case.
const COINCIDENCE: f64 = 1e-14;
const NUDGE: f64 = 1e-12;

/// Transformed endpoints and duration of one bridge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BridgeFrame {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl BridgeFrame {
    pub fn new(x: f64, y: f64, t: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Degenerate(format!("bridge endpoints must be finite, got {x}, {y}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Degenerate(format!("bridge duration must be positive, got {t}")));
        }
        Ok(Self { x, y, t })
    }
}

/// Which of the two candidate minimum times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    First,
    Second,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::First, Branch::Second];
}

/// The minimum of a bridge and the law of its location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinSplit {
    pub e: f64,
    pub m: f64,
    /// `x − m`, computed without cancellation.
    pub x_gap: f64,
    /// `y − m`, computed without cancellation.
    pub y_gap: f64,
    pub g: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl MinSplit {
    pub fn tau(&self, branch: Branch) -> f64 {
        match branch {
            Branch::First => self.tau1,
            Branch::Second => self.tau2,
        }
    }

    pub fn weight(&self, branch: Branch) -> f64 {
        match branch {
            Branch::First => self.p1,
            Branch::Second => self.p2,
        }
    }
}

/// `(x − m, y − m)` for the minimum driven by `e`; the product is `t·e/2`.
fn minimum_gaps(frame: &BridgeFrame, e: f64) -> (f64, f64) {
    let d = frame.y - frame.x;
    let s = (2.0 * frame.t * e + d * d).sqrt();
    let te = frame.t * e;
    // (s − d)/2 and (s + d)/2, one of them rewritten as te/(s ± d)
    if d >= 0.0 {
        (te / (s + d), 0.5 * (s + d))
    } else {
        (0.5 * (s - d), te / (s - d))
    }
}

/// Minimum of the bridge: `m = (x + y − √(2tE + (y − x)²))/2`.
pub fn sample_minimum(frame: &BridgeFrame, e: f64) -> f64 {
    let (x_gap, y_gap) = minimum_gaps(frame, e);
    if x_gap <= y_gap {
        frame.x - x_gap
    } else {
        frame.y - y_gap
    }
}

/// Computes `m`, `g`, the candidate times and their weights.
pub fn split_at_minimum(frame: &BridgeFrame, e: f64, z: f64) -> Result<MinSplit> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::Degenerate(format!("exponential draw must be positive, got {e}")));
    }
    let (x_gap, y_gap) = minimum_gaps(frame, e);
    let m = if x_gap <= y_gap { frame.x - x_gap } else { frame.y - y_gap };
    // g = 1 + a − √(2a + a²) with a = Z²/E, in the form 1/(1 + a + √(a(2 + a)))
    let a = z * z / e;
    let g = 1.0 / (1.0 + a + (a * (2.0 + a)).sqrt());
    let ratio = y_gap / x_gap;
    let t = frame.t;
    let tau1 = t / (1.0 + ratio * g);
    let tau2 = t / (1.0 + ratio / g);
    let te = t * e;
    let xx = 2.0 * x_gap * x_gap;
    let p1 = (te * g + xx) / ((1.0 + g) * (te + xx));
    Ok(MinSplit { e, m, x_gap, y_gap, g, tau1, tau2, p1, p2: 1.0 - p1 })
}

/// Time of the minimum: `τ₁` when `v ≤ p₁`, else `τ₂`.
pub fn sample_tau(split: &MinSplit, v: f64) -> f64 {
    if v <= split.p1 {
        split.tau1
    } else {
        split.tau2
    }
}

/// Standard Brownian bridge `(0,0) → (1,0)` at sorted times in `(0, 1)`,
/// driven by one standard normal per time.
pub fn bb_discrete(s: &[f64], normals: &[f64]) -> Result<Vec<f64>> {
    if s.len() != normals.len() {
        return Err(Error::Degenerate(format!("{} times but {} normals", s.len(), normals.len())));
    }
    let mut prev = 0.0;
    for &sj in s {
        if !(sj > prev && sj < 1.0) {
            return Err(Error::Domain { what: "bridge time", value: sj });
        }
        prev = sj;
    }
    let mut out = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for (&sj, &nj) in s.iter().zip(normals) {
        acc += nj * ((sj - prev) / ((1.0 - prev) * (1.0 - sj))).sqrt();
        out.push((1.0 - sj) * acc);
        prev = sj;
    }
    Ok(out)
}

/// One Poisson time with its column of three standard normals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonMark {
    pub time: f64,
    pub normals: [f64; 3],
}

/// Moves `tau` off any Poisson time closer than `COINCIDENCE·t`.
pub(crate) fn guard_tau(tau: f64, t: f64, marks: &[PoissonMark]) -> f64 {
    let near = COINCIDENCE * t;
    match marks.iter().find(|mk| (mk.time - tau).abs() < near) {
        None => tau,
        Some(mk) if tau >= mk.time => mk.time + NUDGE * t,
        Some(mk) => mk.time - NUDGE * t,
    }
}

/// Streams the skeleton values `χ_j` at the Poisson times for minimum time
/// `tau`. Assumes `marks` sorted in `(0, t)` and `tau` guarded.
#[inline]
pub(crate) fn visit_chi(
    frame: &BridgeFrame,
    split: &MinSplit,
    tau: f64,
    marks: &[PoissonMark],
    mut visit: impl FnMut(usize, f64),
) {
    let t = frame.t;
    let m = split.m;
    let mut acc = [0.0f64; 3];
    let mut prev = 0.0;
    let mut after = false;
    for (j, mk) in marks.iter().enumerate() {
        let yj = mk.time;
        let (beta, scale) = if yj <= tau {
            // Bessel bridge from x − m at time 0 down to 0 at tau
            let d = ((yj - prev) / ((tau - yj) * (tau - prev))).sqrt();
            for (a, n) in acc.iter_mut().zip(mk.normals) {
                *a += n * d;
            }
            (split.x_gap * (tau - yj) / tau, tau - yj)
        } else {
            if !after {
                // the post-minimum bridge starts afresh at tau
                after = true;
                acc = [0.0; 3];
                prev = tau;
            }
            let d = ((yj - prev) / ((t - yj) * (t - prev))).sqrt();
            for (a, n) in acc.iter_mut().zip(mk.normals) {
                *a += n * d;
            }
            (split.y_gap * (yj - tau) / (t - tau), t - yj)
        };
        let a = beta + scale * acc[0];
        let b = scale * acc[1];
        let c = scale * acc[2];
        visit(j, m + (a * a + b * b + c * c).sqrt());
        prev = yj;
    }
}

fn check_marks(frame: &BridgeFrame, marks: &[PoissonMark]) -> Result<()> {
    let mut prev = 0.0;
    for mk in marks {
        if !(mk.time > prev && mk.time < frame.t) {
            return Err(Error::Degenerate(format!("Poisson times must increase inside (0, {}): {}", frame.t, mk.time)));
        }
        prev = mk.time;
    }
    Ok(())
}

/// Skeleton values `χ_{i,1..Λ}` of the bridge with minimum `split.m` attained
/// at the candidate time of `branch`.
pub fn chi_values(frame: &BridgeFrame, split: &MinSplit, marks: &[PoissonMark], branch: Branch) -> Result<Vec<f64>> {
    check_marks(frame, marks)?;
    let tau = guard_tau(split.tau(branch), frame.t, marks);
    if !(tau > 0.0 && tau < frame.t) {
        return Err(Error::Degenerate(format!("minimum time {tau} outside (0, {})", frame.t)));
    }
    let mut out = vec![0.0; marks.len()];
    visit_chi(frame, split, tau, marks, |j, v| out[j] = v);
    Ok(out)
}
