//! Keyed, counter-based random streams.
//!
//! Every draw in the crate comes from a [`StreamKey`]: an experiment seed, an
//! interval index, a replicate index and a purpose tag. The key selects a
//! ChaCha8 key and stream id, so the variates behind a key never depend on
//! which other keys were drawn, in which order, or on which thread.

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

/// Role of a substream inside one key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Exponential = 1,
    Gaussian = 2,
    Poisson = 3,
    GaussianMatrix = 4,
    Euler = 5,
    Oracle = 6,
    Uniform = 7,
    Acceptance = 8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub experiment_seed: u64,
    pub interval_index: u64,
    pub replicate_index: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(experiment_seed: u64, interval_index: u64, replicate_index: u64, purpose: Purpose) -> Self {
        Self { experiment_seed, interval_index, replicate_index, purpose }
    }

    pub fn with_purpose(self, purpose: Purpose) -> Self {
        Self { purpose, ..self }
    }

    /// A fresh generator positioned at the start of this key's stream.
    pub fn rng(&self) -> KeyedRng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.experiment_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.interval_index.to_le_bytes());
        seed[16..24].copy_from_slice(&self.replicate_index.to_le_bytes());
        seed[24..].copy_from_slice(b"SAMXI\0\0\x01");
        let mut inner = ChaCha8Rng::from_seed(seed);
        inner.set_stream(self.purpose as u64);
        KeyedRng { inner }
    }
}

/// Derives a child seed from a parent seed and a label, for experiments that
/// need many independent seed families (replicated banks, replicated datasets).
pub fn derive_seed(parent: u64, label: u64, index: u64) -> u64 {
    let mut z = parent ^ label.rotate_left(17) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequential generator over one keyed stream.
#[derive(Clone, Debug)]
pub struct KeyedRng {
    inner: ChaCha8Rng,
}

impl KeyedRng {
    pub fn exponential(&mut self) -> f64 {
        self.inner.sample(Exp1)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.sample(Open01)
    }

    /// Poisson count with the given mean: inversion up to mean 30, PTRS above.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            0
        } else if mean <= 30.0 {
            self.poisson_inversion(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            let next = cdf + p;
            if next == cdf {
                // tail mass below rounding
                break;
            }
            cdf = next;
        }
        k
    }

    // Hörmann (1993), transformed rejection with squeeze.
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let slam = mean.sqrt();
        let loglam = mean.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
            let rhs = -mean + k * loglam - ln_factorial(k as u64);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

impl RngCore for KeyedRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub(crate) fn ln_factorial(k: u64) -> f64 {
    if k < 16 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// One unit-mean exponential variate; repeatable per key.
pub fn draw_exponential(key: StreamKey) -> f64 {
    key.rng().exponential()
}

/// Homogeneous Poisson process on `(0, horizon)`: a Poisson count followed by
/// that many sorted uniform times.
pub fn draw_poisson_process(key: StreamKey, rate: f64, horizon: f64) -> Vec<f64> {
    let mut rng = key.rng();
    poisson_times(&mut rng, rate, horizon)
}

pub(crate) fn poisson_times(rng: &mut KeyedRng, rate: f64, horizon: f64) -> Vec<f64> {
    let count = rng.poisson(rate * horizon);
    let mut times: Vec<f64> = (0..count)
        .map(|_| loop {
            let s = rng.uniform() * horizon;
            if s > 0.0 && s < horizon {
                break s;
            }
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times
}

/// `cols` independent columns of three standard normals.
pub fn draw_gaussian_matrix(key: StreamKey, cols: usize) -> Vec<[f64; 3]> {
    let mut rng = key.rng();
    (0..cols).map(|_| [rng.gaussian(), rng.gaussian(), rng.gaussian()]).collect()
}
