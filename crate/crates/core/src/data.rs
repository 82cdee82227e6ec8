//! Observation series, Euler simulation on the transformed scale, and the
//! brute-force oracles used to validate the estimator.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::bridge::BridgeFrame;
use crate::model::TransformedModel;
use crate::rng::{derive_seed, KeyedRng, Purpose, StreamKey};
use crate::sam::Transition;
use crate::{Error, Result};

/// Maximum number of times an Euler step is halved after leaving the state space.
const MAX_HALVINGS: u32 = 10;
/// Proposal cap and minimum acceptance count for the conditioned-bridge oracle.
const ORACLE_MAX_PROPOSALS: u64 = 10_000_000;
const ORACLE_MIN_ACCEPTED: u64 = 100;

/// Discretely observed path: strictly increasing times from 0 and the values.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl ObservationSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Degenerate(format!("{} times but {} values", times.len(), values.len())));
        }
        if times.len() < 2 {
            return Err(Error::Degenerate("a series needs at least two observations".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Domain { what: "first observation time", value: times[0] });
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0] && w[1].is_finite())) {
            return Err(Error::Domain { what: "observation time", value: w[1] });
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain { what: "observation value", value: v });
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of transitions `n`.
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn transitions(&self) -> Vec<Transition> {
        (0..self.intervals())
            .map(|i| Transition {
                from: self.values[i],
                to: self.values[i + 1],
                dt: self.times[i + 1] - self.times[i],
            })
            .collect()
    }

    /// The first `n` transitions.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.intervals() {
            return Err(Error::Degenerate(format!("cannot keep {n} of {} intervals", self.intervals())));
        }
        Self::new(self.times[..=n].to_vec(), self.values[..=n].to_vec())
    }

    pub fn check_state_space(&self, model: &dyn TransformedModel) -> Result<()> {
        self.values.iter().try_for_each(|&v| model.check_state("observation", v))
    }

    /// Reads `time,value` CSV; lines starting with `#` are comments.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| parse_error(&e))?.clone();
        if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "value" {
            return Err(Error::Parse { line: 1, msg: "expected header `time,value`".into() });
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| parse_error(&e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 2 {
                return Err(Error::Parse { line, msg: format!("expected 2 fields, found {}", rec.len()) });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("`{s}`: {e}") })
            };
            times.push(num(&rec[0])?);
            values.push(num(&rec[1])?);
        }
        Self::new(times, values)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::read_csv(text.as_bytes())
    }

    /// Writes the `time,value` rows, full precision, without comments.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "time,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

fn parse_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, msg: e.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerConfig {
    /// Steps per unit interval are `2^substeps_log2`.
    pub substeps_log2: u32,
    pub paths: usize,
    /// Bin width on the transformed scale.
    pub bin_width: f64,
}

impl Default for EulerConfig {
    fn default() -> Self {
        Self { substeps_log2: 8, paths: 1_000_000, bin_width: 0.04 }
    }
}

/// Advances the transformed state by `h`, halving the step when the move
/// leaves the state space.
fn euler_advance(
    model: &dyn TransformedModel,
    theta: &[f64],
    x: f64,
    h: f64,
    now: f64,
    rng: &mut KeyedRng,
    depth: u32,
) -> Result<f64> {
    let next = x + model.alpha(x, theta) * h + h.sqrt() * rng.gaussian();
    if next.is_finite() && model.state_space().contains(model.eta_inv(next, theta)) {
        return Ok(next);
    }
    if depth >= MAX_HALVINGS {
        return Err(Error::StateSpaceExit { time: now });
    }
    let mid = euler_advance(model, theta, x, 0.5 * h, now, rng, depth + 1)?;
    euler_advance(model, theta, mid, 0.5 * h, now + 0.5 * h, rng, depth + 1)
}

/// Transformed-scale Euler path from `x` over `[0, t]`; returns the endpoint.
fn euler_endpoint(model: &dyn TransformedModel, theta: &[f64], x: f64, t: f64, k: u32, rng: &mut KeyedRng) -> Result<f64> {
    let steps = 1u64 << k;
    let h = t / steps as f64;
    let mut state = x;
    for s in 0..steps {
        state = euler_advance(model, theta, state, h, s as f64 * h, rng, 0)?;
    }
    Ok(state)
}

/// Simulates `n` transitions of length `dt` from `v0` with the Euler scheme on
/// the transformed scale, step `dt·2^{-k}`.
pub fn simulate_dataset(
    model: &dyn TransformedModel,
    theta: &[f64],
    v0: f64,
    n: usize,
    dt: f64,
    euler: &EulerConfig,
    key: StreamKey,
) -> Result<ObservationSeries> {
    model.check_state("v0", v0)?;
    if n == 0 {
        return Err(Error::Degenerate("a dataset needs at least one interval".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain { what: "observation spacing", value: dt });
    }
    let mut rng = key.with_purpose(Purpose::Euler).rng();
    let mut x = model.eta(v0, theta);
    let mut times = vec![0.0];
    let mut values = vec![v0];
    for i in 1..=n {
        x = euler_endpoint(model, theta, x, dt, euler.substeps_log2, &mut rng)?;
        times.push(i as f64 * dt);
        values.push(model.eta_inv(x, theta));
    }
    ObservationSeries::new(times, values)
}

/// Brute-force transition density with its binomial standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    pub density: f64,
    pub se: f64,
    pub hits: u64,
    pub paths: u64,
    pub warning: Option<String>,
}

/// Euler estimate of `p_t(v, w; θ)`: the fraction of transformed paths ending
/// in a centred bin around `η(w)`, divided by the bin width and scaled by
/// `|η'(w)|`. Path `j` draws from its own key derived from `key`.
pub fn brute_density(
    model: &dyn TransformedModel,
    theta: &[f64],
    v: f64,
    w: f64,
    t: f64,
    euler: &EulerConfig,
    key: StreamKey,
) -> Result<DensityEstimate> {
    model.check_state("v", v)?;
    model.check_state("w", w)?;
    if euler.bin_width.is_nan() || euler.bin_width <= 0.0 || euler.paths == 0 {
        return Err(Error::Degenerate("density oracle needs paths and a positive bin width".into()));
    }
    let x = model.eta(v, theta);
    let y = model.eta(w, theta);
    let half = 0.5 * euler.bin_width;
    let hits = (0..euler.paths as u64)
        .into_par_iter()
        .map(|j| {
            let path_key = StreamKey {
                replicate_index: derive_seed(key.replicate_index, Purpose::Euler as u64, j),
                purpose: Purpose::Euler,
                ..key
            };
            let end = euler_endpoint(model, theta, x, t, euler.substeps_log2, &mut path_key.rng())?;
            Ok::<u64, Error>(u64::from((end - y).abs() <= half))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let paths = euler.paths as u64;
    let p = hits as f64 / paths as f64;
    let jac = model.eta_du(w, theta).abs();
    let scale = jac / euler.bin_width;
    let warning = (hits == 0).then(|| "no path ended in the bin".to_string());
    Ok(DensityEstimate {
        density: p * scale,
        se: (p * (1.0 - p) / paths as f64).sqrt() * scale,
        hits,
        paths,
        warning,
    })
}

/// Accepted Brownian-bridge values at the query times.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedSample {
    pub times: Vec<f64>,
    /// One row per accepted path, one column per query time.
    pub values: Vec<Vec<f64>>,
    pub accepted: u64,
    pub proposals: u64,
}

/// `P(min > c)` for a Brownian bridge through the grid values, as a product
/// over cells of the single-cell bridge survival probabilities.
fn survival_above(grid_times: &[f64], grid_values: &[f64], c: f64) -> f64 {
    if c == f64::NEG_INFINITY {
        return 1.0;
    }
    if grid_values.iter().any(|&v| v <= c) {
        return 0.0;
    }
    let mut s = 1.0;
    for i in 1..grid_times.len() {
        let dt = grid_times[i] - grid_times[i - 1];
        let a = grid_values[i - 1] - c;
        let b = grid_values[i] - c;
        s *= -(-2.0 * a * b / dt).exp_m1();
    }
    s
}

/// Brownian bridges from `(0, x)` to `(t, y)` conditioned on their minimum
/// lying in `(m_lo, m_hi]`, observed at `times`.
///
/// Each proposal is a bridge on a grid of `2^k` cells merged with the query
/// times; it is accepted with the exact probability, given the grid values,
/// that the continuous minimum falls in the bin. `euler.paths` is the target
/// number of accepted paths.
pub fn conditioned_bridge_oracle(
    frame: &BridgeFrame,
    m_bin: (f64, f64),
    times: &[f64],
    euler: &EulerConfig,
    key: StreamKey,
) -> Result<ConditionedSample> {
    let (m_lo, m_hi) = m_bin;
    if !(m_lo < m_hi && m_hi <= frame.x.min(frame.y)) {
        return Err(Error::Degenerate(format!("minimum bin ({m_lo}, {m_hi}] must lie below both endpoints")));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Domain { what: "query time", value: w[1] });
    }
    if let Some(&s) = times.iter().find(|&&s| !(s > 0.0 && s < frame.t)) {
        return Err(Error::Domain { what: "query time", value: s });
    }
    let cells = 1usize << euler.substeps_log2;
    let mut grid: Vec<f64> = (0..=cells).map(|i| frame.t * i as f64 / cells as f64).collect();
    grid.extend_from_slice(times);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let query_at: Vec<usize> = times.iter().map(|s| grid.iter().position(|g| g == s).unwrap()).collect();

    let mut gauss = key.with_purpose(Purpose::Oracle).rng();
    let mut unif = key.with_purpose(Purpose::Acceptance).rng();
    let target = euler.paths as u64;
    let mut values = Vec::new();
    let mut path = vec![0.0; grid.len()];
    let mut accepted = 0u64;
    let mut proposals = 0u64;
    while accepted < target && proposals < ORACLE_MAX_PROPOSALS {
        proposals += 1;
        // free Brownian motion on the grid, pinned afterwards
        let mut b = 0.0;
        path[0] = 0.0;
        for i in 1..grid.len() {
            b += (grid[i] - grid[i - 1]).sqrt() * gauss.gaussian();
            path[i] = b;
        }
        let end = b;
        for (i, &s) in grid.iter().enumerate() {
            path[i] = frame.x + (frame.y - frame.x) * s / frame.t + path[i] - s / frame.t * end;
        }
        let p = survival_above(&grid, &path, m_lo) - survival_above(&grid, &path, m_hi);
        if unif.uniform() < p {
            accepted += 1;
            values.push(query_at.iter().map(|&i| path[i]).collect());
        }
    }
    if accepted < ORACLE_MIN_ACCEPTED.min(target) {
        return Err(Error::Starvation { accepted, proposals });
    }
    Ok(ConditionedSample { times: times.to_vec(), values, accepted, proposals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriftedBrownianModel, LogisticGrowthModel};
    use crate::stats::{gaussian_kernel, ks_one_sample, ks_one_sample_critical, mean_se};
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn series_validation() {
        assert!(ObservationSeries::new(vec![0.0], vec![1.0]).is_err());
        assert!(ObservationSeries::new(vec![0.5, 1.0], vec![1.0, 2.0]).is_err());
        assert!(ObservationSeries::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(ObservationSeries::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        let s = ObservationSeries::new(vec![0.0, 1.0, 3.0], vec![5.0, 6.0, 4.0]).unwrap();
        assert_eq!(s.transitions()[1], Transition { from: 6.0, to: 4.0, dt: 2.0 });
        assert_eq!(s.truncated(1).unwrap().intervals(), 1);
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let s = ObservationSeries::new(vec![0.0, 1.0, 2.5], vec![700.0, 712.25, 1e-3]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(ObservationSeries::read_csv(&buf[..]).unwrap(), s);
        let commented = "# seed 4\ntime,value\n0,1\n# mid\n1, 2\n";
        assert_eq!(ObservationSeries::from_csv_str(commented).unwrap().values(), &[1.0, 2.0]);
        assert!(ObservationSeries::from_csv_str("t,v\n0,1\n1,2\n").is_err());
        assert!(matches!(
            ObservationSeries::from_csv_str("time,value\n0,1\n1,x\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(ObservationSeries::from_csv_str("time,value\n0,1\n1,2,3\n").is_err());
        assert!(ObservationSeries::from_csv_str("").is_err());
    }

    #[test]
    fn zero_intervals_rejected() {
        let key = StreamKey::new(1, 0, 0, Purpose::Euler);
        let cfg = EulerConfig::default();
        assert!(simulate_dataset(&DriftedBrownianModel, &[0.0], 0.0, 0, 1.0, &cfg, key).is_err());
        let one = simulate_dataset(&DriftedBrownianModel, &[0.0], 0.0, 1, 1.0, &cfg, key).unwrap();
        assert_eq!(one.times().len(), 2);
    }

    #[test]
    fn brownian_increments_are_exact() {
        let cfg = EulerConfig { substeps_log2: 8, ..EulerConfig::default() };
        let mu = 0.3;
        let key = StreamKey::new(5, 0, 0, Purpose::Euler);
        let series = simulate_dataset(&DriftedBrownianModel, &[mu], 0.0, 20_000, 0.5, &cfg, key).unwrap();
        let inc: Vec<f64> = series.values().windows(2).map(|w| w[1] - w[0]).collect();
        let law = Normal::new(mu * 0.5, 0.5f64.sqrt()).unwrap();
        let d = ks_one_sample(&inc, |u| law.cdf(u));
        assert!(d < ks_one_sample_critical(inc.len(), 0.01), "D = {d}");
    }

    #[test]
    fn logistic_path_stays_positive() {
        let key = StreamKey::new(6, 0, 0, Purpose::Euler);
        let cfg = EulerConfig { substeps_log2: 6, ..EulerConfig::default() };
        let s = simulate_dataset(&LogisticGrowthModel, &[0.1, 1000.0, 0.1], 700.0, 300, 1.0, &cfg, key).unwrap();
        assert!(s.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn brute_density_matches_gaussian() {
        let cfg = EulerConfig { substeps_log2: 4, paths: 200_000, bin_width: 0.05 };
        let key = StreamKey::new(7, 1, 0, Purpose::Euler);
        let est = brute_density(&DriftedBrownianModel, &[0.5], 0.0, 0.3, 1.0, &cfg, key).unwrap();
        let exact = gaussian_kernel(-0.2, 1.0);
        // the bin average differs from the point density by O(width²)
        assert!((est.density - exact).abs() < 3.0 * est.se + 1e-3, "{} ± {} vs {exact}", est.density, est.se);
        let again = brute_density(&DriftedBrownianModel, &[0.5], 0.0, 0.3, 1.0, &cfg, key).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn empty_bin_warns() {
        let cfg = EulerConfig { substeps_log2: 2, paths: 100, bin_width: 1e-6 };
        let key = StreamKey::new(7, 1, 0, Purpose::Euler);
        let est = brute_density(&DriftedBrownianModel, &[0.0], 0.0, 8.0, 1.0, &cfg, key).unwrap();
        assert_eq!(est.hits, 0);
        assert_eq!(est.density, 0.0);
        assert!(est.warning.is_some());
    }

    #[test]
    fn unconditioned_oracle_accepts_everything() {
        let frame = BridgeFrame::new(0.0, 0.5, 1.0).unwrap();
        let cfg = EulerConfig { substeps_log2: 4, paths: 500, bin_width: 0.0 };
        let key = StreamKey::new(8, 0, 0, Purpose::Oracle);
        let s = conditioned_bridge_oracle(&frame, (f64::NEG_INFINITY, 0.0), &[0.5], &cfg, key).unwrap();
        assert_eq!(s.accepted, 500);
        assert_eq!(s.proposals, 500);
        let mid: Vec<f64> = s.values.iter().map(|r| r[0]).collect();
        let (m, se) = mean_se(&mid);
        assert!((m - 0.25).abs() < 3.0 * se);
    }

    #[test]
    fn conditioned_paths_respect_bin() {
        let frame = BridgeFrame::new(0.0, 0.5, 1.0).unwrap();
        let cfg = EulerConfig { substeps_log2: 5, paths: 300, bin_width: 0.0 };
        let key = StreamKey::new(8, 0, 1, Purpose::Oracle);
        let times = [0.25, 0.5, 0.75];
        let s = conditioned_bridge_oracle(&frame, (-0.51, -0.49), &times, &cfg, key).unwrap();
        assert!(s.values.iter().flatten().all(|&v| v > -0.51));
        assert!(conditioned_bridge_oracle(&frame, (-0.51, 0.1), &times, &cfg, key).is_err());
        assert!(conditioned_bridge_oracle(&frame, (-0.5, -0.4), &[0.5, 0.25], &cfg, key).is_err());
    }

    #[test]
    fn hopeless_bin_starves() {
        let frame = BridgeFrame::new(0.0, 0.0, 1.0).unwrap();
        let cfg = EulerConfig { substeps_log2: 0, paths: 1000, bin_width: 0.0 };
        let key = StreamKey::new(8, 0, 2, Purpose::Oracle);
        // P(min < −6) = e^{−72}
        let err = conditioned_bridge_oracle(&frame, (-7.0, -6.0), &[0.5], &cfg, key).unwrap_err();
        assert!(matches!(err, Error::Starvation { accepted: 0, .. }));
    }

    #[test]
    fn single_cell_survival_matches_closed_form() {
        // bridge 0 → 0 over unit time: P(min > c) = 1 − exp(−2c²)
        let p = survival_above(&[0.0, 1.0], &[0.0, 0.0], -0.5);
        assert!((p - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert_eq!(survival_above(&[0.0, 1.0], &[0.0, 0.0], 0.0), 0.0);
        assert_eq!(survival_above(&[0.0, 1.0], &[0.0, 0.0], f64::NEG_INFINITY), 1.0);
    }
}
