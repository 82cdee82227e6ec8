//! Kolmogorov–Smirnov statistics and small sample summaries.

use std::f64::consts::PI;

/// Gaussian kernel `𝒩_t(u) = exp(−u²/2t)/√(2πt)`.
pub fn gaussian_kernel(u: f64, t: f64) -> f64 {
    (-u * u / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

pub fn log_gaussian_kernel(u: f64, t: f64) -> f64 {
    -u * u / (2.0 * t) - 0.5 * (2.0 * PI * t).ln()
}

/// Two-sample KS statistic `sup |F_a − F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample critical value at level `alpha`.
pub fn ks_two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn ks_one_sample_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, (sample_variance(xs) / n).sqrt())
}

/// Unbiased sample variance, computed with the first element as shift.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let shift = xs[0];
    let n = xs.len() as f64;
    let (s, ss) = xs.iter().fold((0.0, 0.0), |(s, ss), &x| {
        let d = x - shift;
        (s + d, ss + d * d)
    });
    ((ss - s * s / n) / (n - 1.0)).max(0.0)
}
