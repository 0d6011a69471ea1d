//! Stratified sampling of the real line for mean-measure estimates.
//!
//! A window `[start, start + length)` is cut into `samples` equal strata and
//! one uniform point is drawn in each. Strata are grouped into fixed chunks of
//! [`CHUNK`] strata; chunk `c` draws from the ChaCha stream `c` of the master
//! seed. Chunk results are returned in chunk order, so any reduction over them
//! is independent of how rayon schedules the work.

use std::f64::consts::PI;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::pairwise_sum;
use crate::trigpoly::TrigPoly;

pub(crate) const CHUNK: usize = 4096;

/// Largest period, in units of the shortest frequency gap, accepted as exact.
const MAX_PERIOD_RATIO: u64 = 1_000_000;
const MAX_DENOMINATOR: u64 = 100_000;

/// How much of the line to sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Window {
    /// One exact period of `|f|` when the frequencies are commensurable,
    /// otherwise `[-L, L]` with `L = 1000 · 2π / b(f)`.
    #[default]
    Auto,
    /// `[-L, L]` for the given `L`.
    HalfWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub window: Window,
    pub samples: usize,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        SamplingConfig {
            window: Window::Auto,
            samples,
            seed,
        }
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }
}

/// The interval actually sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub start: f64,
    pub length: f64,
    /// True when `length` is an exact period of `|f|`.
    pub periodic: bool,
}

impl Domain {
    pub fn half_width(&self) -> f64 {
        0.5 * self.length
    }

    pub(crate) fn symmetric(half_width: f64, periodic: bool) -> Domain {
        Domain {
            start: -half_width,
            length: 2.0 * half_width,
            periodic,
        }
    }
}

/// Default non-periodic half width `1000 · 2π / b(f)`.
pub fn default_half_width(bandwidth: f64) -> f64 {
    1000.0 * 2.0 * PI / bandwidth
}

/// Continued-fraction approximation `p/q ≈ r` with `q ≤ max_den`, accepted only
/// when it reproduces `r` to a relative `1e-12`.
fn rational_approx(r: f64, max_den: u64) -> Option<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (r - p1 as f64 / q1 as f64).abs() <= 1e-12 * r.abs().max(1e-300) {
            return Some((p1, q1));
        }
        let frac = x - x.floor();
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    None
}

/// Period of `x ↦ |f(x)|` when all frequency gaps are rational multiples of
/// each other (within `1e-12`), else `None`. A single-term `f` has constant
/// modulus and is given period `2π`.
pub fn exact_period(f: &TrigPoly) -> Option<f64> {
    let spectrum = f.spectrum();
    if spectrum.len() <= 1 {
        return Some(2.0 * PI);
    }
    let gaps: Vec<f64> = spectrum[1..].iter().map(|w| w - spectrum[0]).collect();
    let widest = *gaps.last()?;
    let mut ratios = Vec::with_capacity(gaps.len());
    let mut common_den = 1u64;
    for g in &gaps {
        let (p, q) = rational_approx(g / widest, MAX_DENOMINATOR)?;
        common_den = common_den.lcm(&q);
        if common_den > MAX_PERIOD_RATIO {
            return None;
        }
        ratios.push((p, q));
    }
    let divisor = ratios
        .iter()
        .fold(0u64, |acc, &(p, q)| acc.gcd(&(p * (common_den / q))));
    if divisor == 0 {
        return None;
    }
    // gaps are integer multiples of widest / common_den; the fundamental
    // frequency is divisor times that unit.
    let fundamental = widest * divisor as f64 / common_den as f64;
    Some(2.0 * PI / fundamental)
}

pub(crate) fn domain_for(f: &TrigPoly, window: Window) -> Result<Domain> {
    f.ensure_nonzero()?;
    match window {
        Window::HalfWidth(l) => {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid(format!(
                    "window half width must be positive, got {l}"
                )));
            }
            Ok(Domain::symmetric(l, false))
        }
        Window::Auto => match exact_period(f) {
            Some(period) => Ok(Domain::symmetric(0.5 * period, true)),
            None => Ok(Domain::symmetric(default_half_width(f.bandwidth()?), false)),
        },
    }
}

/// Runs `work` on the sample points of each chunk, in parallel, returning the
/// per-chunk results in chunk order.
pub(crate) fn map_chunks<T, F>(domain: Domain, samples: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let h = domain.length / samples as f64;
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let points: Vec<f64> = (lo..hi)
                .map(|i| domain.start + (i as f64 + rng.gen::<f64>()) * h)
                .collect();
            work(&points)
        })
        .collect()
}

/// Stratified estimate of the mean of `g` over `domain`, with a standard error
/// from differences of adjacent strata.
pub(crate) fn stratified_mean<G>(domain: Domain, samples: usize, seed: u64, g: G) -> (f64, f64)
where
    G: Fn(f64) -> f64 + Sync,
{
    let parts = map_chunks(domain, samples, seed, |xs| {
        let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let diffs: Vec<f64> = vals
            .chunks_exact(2)
            .map(|p| (p[0] - p[1]).powi(2))
            .collect();
        (pairwise_sum(&vals), pairwise_sum(&diffs))
    });
    let sums: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let diffs: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let n = samples as f64;
    (pairwise_sum(&sums) / n, pairwise_sum(&diffs).sqrt() / n)
}
