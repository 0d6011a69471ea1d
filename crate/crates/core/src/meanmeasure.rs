//! Mean-measure estimators: the sublevel distribution `J_f(u)`, the joint
//! derivative event `Ξ`, the grid upper estimate of `K_f`, the mean of
//! `|log⁻|f||^p`, and a randomized check of the quadrant interval bound.
//!
//! Every estimator draws one stratified sample set per call (see
//! [`crate::sampling`]); all quantities of one call share it, so orderings such
//! as `Ξ ≤ J` or monotonicity in `u` hold exactly rather than statistically.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::cnseq::{self, THREE_SQRT2_OVER_PI};
use crate::error::{Error, Result};
use crate::sampling::{domain_for, map_chunks, stratified_mean, Domain, SamplingConfig, Window};
use crate::trigpoly::TrigPoly;

const MIN_SAMPLES: usize = 1000;

/// Estimated `J_f(u)` on a grid of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelCurve {
    pub thresholds: Vec<f64>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Half width of the sampled window.
    pub window: f64,
    pub samples: usize,
    pub seed: u64,
    /// Whether the window is one exact period of `|f|`.
    pub periodic: bool,
    /// `max_u |Ĵ_{2L}(u) − Ĵ_L(u)|` for the default non-periodic window.
    pub doubling_drift: Option<f64>,
}

impl SublevelCurve {
    pub const CSV_HEADER: &'static str = "u,j_estimate,std_error";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.thresholds.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.thresholds[i], self.estimates[i], self.std_errors[i]
            ));
        }
        out
    }
}

pub(crate) fn binomial_se(p: f64, samples: usize) -> f64 {
    (p * (1.0 - p) / samples as f64).max(0.0).sqrt()
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "at least {MIN_SAMPLES} samples are required"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid(format!(
            "{name} must be positive and finite, got {x}"
        )));
    }
    Ok(())
}

fn check_ascending(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(format!("{name} grid is empty")));
    }
    for &x in grid {
        check_positive(name, x)?;
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid(format!("{name} grid must be ascending")));
    }
    Ok(())
}

/// `counts[i]` = number of values strictly below `grid[i]`.
fn cumulative_below(values: impl Iterator<Item = f64>, grid: &[f64]) -> Vec<u64> {
    let mut hist = vec![0u64; grid.len() + 1];
    for a in values {
        hist[grid.partition_point(|&u| u <= a)] += 1;
    }
    let mut running = 0;
    hist[..grid.len()]
        .iter()
        .map(|h| {
            running += h;
            running
        })
        .collect()
}

fn sum_counts(parts: Vec<Vec<u64>>, len: usize) -> Vec<u64> {
    parts.into_iter().fold(vec![0u64; len], |mut acc, part| {
        acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
        acc
    })
}

fn sublevel_counts(
    f: &TrigPoly,
    thresholds: &[f64],
    domain: Domain,
    samples: usize,
    seed: u64,
) -> Vec<u64> {
    let parts = map_chunks(domain, samples, seed, |xs| {
        cumulative_below(xs.iter().map(|&x| f.value_at(x).norm()), thresholds)
    });
    sum_counts(parts, thresholds.len())
}

/// Estimates `J_f(u)` for every `u` in `thresholds` from one stratified sample
/// set.
pub fn estimate_j(
    f: &TrigPoly,
    thresholds: &[f64],
    config: &SamplingConfig,
) -> Result<SublevelCurve> {
    f.ensure_nonzero()?;
    check_ascending("threshold", thresholds)?;
    check_samples(config.samples)?;
    let domain = domain_for(f, config.window)?;
    let sup = f.l1_norm();

    let to_estimates = |counts: &[u64]| -> Vec<f64> {
        thresholds
            .iter()
            .zip(counts)
            .map(|(&u, &c)| {
                if u >= sup {
                    1.0
                } else {
                    c as f64 / config.samples as f64
                }
            })
            .collect()
    };
    let estimates = to_estimates(&sublevel_counts(
        f,
        thresholds,
        domain,
        config.samples,
        config.seed,
    ));
    let std_errors = thresholds
        .iter()
        .zip(&estimates)
        .map(|(&u, &p)| {
            if u >= sup {
                0.0
            } else {
                binomial_se(p, config.samples)
            }
        })
        .collect();

    let doubling_drift = if config.window == Window::Auto && !domain.periodic {
        let wide = Domain::symmetric(2.0 * domain.half_width(), false);
        let doubled = to_estimates(&sublevel_counts(
            f,
            thresholds,
            wide,
            config.samples,
            config.seed,
        ));
        Some(
            estimates
                .iter()
                .zip(&doubled)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };

    Ok(SublevelCurve {
        thresholds: thresholds.to_vec(),
        estimates,
        std_errors,
        window: domain.half_width(),
        samples: config.samples,
        seed: config.seed,
        periodic: domain.periodic,
        doubling_drift,
    })
}

/// Parameters of one `Ξ` event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiParams {
    pub omega: f64,
    pub k: u32,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub value: f64,
    pub std_error: f64,
    pub params: XiParams,
    /// `Ĵ_f(u)` on the same sample set.
    pub j_value: f64,
    pub j_std_error: f64,
}

/// `[g', g'', …, g^{(k)}]` for `g = χ_ω f`.
fn modulated_derivatives(f: &TrigPoly, omega: f64, k: u32) -> Result<Vec<TrigPoly>> {
    let g = f.modulate(omega)?;
    (1..=k).map(|j| g.derivative(j)).collect()
}

/// `max_{j ≤ i} |g^{(j)}(x)|^{1/j}` for `i = 1..=k`. The event
/// `|g^{(j)}(x)| < v^j for all j ≤ i` is exactly `radii[i-1] < v`.
#[inline]
fn derivative_radii(derivs: &[TrigPoly], x: f64, out: &mut [f64]) {
    let mut running = 0.0f64;
    for (j, d) in derivs.iter().enumerate() {
        let r = d.value_at(x).norm().powf(1.0 / (j + 1) as f64);
        running = running.max(r);
        out[j] = running;
    }
}

/// Estimates the mean measure of `{|f| < u and |(χ_ω f)^{(j)}| < v^j, j = 1..k}`.
pub fn estimate_xi(f: &TrigPoly, params: XiParams, config: &SamplingConfig) -> Result<XiEstimate> {
    f.ensure_nonzero()?;
    if params.k < 1 {
        return Err(Error::invalid("derivative order k must be at least 1"));
    }
    check_positive("u", params.u)?;
    check_positive("v", params.v)?;
    if !params.omega.is_finite() {
        return Err(Error::invalid("modulation frequency must be finite"));
    }
    check_samples(config.samples)?;
    let domain = domain_for(f, config.window)?;
    let derivs = modulated_derivatives(f, params.omega, params.k)?;
    let k = params.k as usize;

    let parts = map_chunks(domain, config.samples, config.seed, |xs| {
        let mut radii = vec![0.0; k];
        let (mut in_j, mut in_xi) = (0u64, 0u64);
        for &x in xs {
            if f.value_at(x).norm() < params.u {
                in_j += 1;
                derivative_radii(&derivs, x, &mut radii);
                if radii[k - 1] < params.v {
                    in_xi += 1;
                }
            }
        }
        (in_j, in_xi)
    });
    let (in_j, in_xi) = parts
        .into_iter()
        .fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    let n = config.samples as f64;
    let (j_value, value) = (in_j as f64 / n, in_xi as f64 / n);
    Ok(XiEstimate {
        value,
        std_error: binomial_se(value, config.samples),
        params,
        j_value,
        j_std_error: binomial_se(j_value, config.samples),
    })
}

/// Search grid for the `K_f` upper estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub omegas: Vec<f64>,
    pub k_max: u32,
    /// Ascending.
    pub vs: Vec<f64>,
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid {
            omegas: vec![0.0],
            k_max: 4,
            vs: log_grid(1e-3, 1e3, 61),
        }
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KEstimate {
    /// `min` over the grid of `3√2/π · b(f) · k/v · u^{1/k} + Ξ̂`.
    pub value: f64,
    pub argmin: XiParams,
    pub xi_at_argmin: f64,
    pub xi_std_error: f64,
    /// `Ĵ_f(u)` on the same sample set.
    pub j_value: f64,
    pub j_std_error: f64,
}

/// Grid-search upper estimate of `K_f(u)`.
pub fn estimate_k(
    f: &TrigPoly,
    u: f64,
    grid: &KGrid,
    config: &SamplingConfig,
) -> Result<KEstimate> {
    f.ensure_nonzero()?;
    check_positive("u", u)?;
    if grid.omegas.is_empty() || grid.omegas.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("omega grid must be nonempty and finite"));
    }
    if grid.k_max < 1 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    check_ascending("v", &grid.vs)?;
    check_samples(config.samples)?;
    let domain = domain_for(f, config.window)?;
    let b = f.bandwidth()?;
    let k_max = grid.k_max as usize;
    let derivs: Vec<Vec<TrigPoly>> = grid
        .omegas
        .iter()
        .map(|&w| modulated_derivatives(f, w, grid.k_max))
        .collect::<Result<_>>()?;
    let nv = grid.vs.len();

    // counts[(o * k_max + k) * nv + iv] = #{|f| < u and radius_k < v_iv}
    let parts = map_chunks(domain, config.samples, config.seed, |xs| {
        let mut hist = vec![0u64; grid.omegas.len() * k_max * (nv + 1)];
        let mut radii = vec![0.0; k_max];
        let mut in_j = 0u64;
        for &x in xs {
            if f.value_at(x).norm() >= u {
                continue;
            }
            in_j += 1;
            for (o, ds) in derivs.iter().enumerate() {
                derivative_radii(ds, x, &mut radii);
                for (k, &r) in radii.iter().enumerate() {
                    let slot = grid.vs.partition_point(|&v| v <= r);
                    hist[(o * k_max + k) * (nv + 1) + slot] += 1;
                }
            }
        }
        (in_j, hist)
    });
    let in_j: u64 = parts.iter().map(|p| p.0).sum();
    let hist = sum_counts(
        parts.into_iter().map(|p| p.1).collect(),
        grid.omegas.len() * k_max * (nv + 1),
    );

    let n = config.samples as f64;
    let mut best: Option<(f64, XiParams, f64)> = None;
    for (o, &omega) in grid.omegas.iter().enumerate() {
        for k in 0..k_max {
            let row = &hist[(o * k_max + k) * (nv + 1)..][..nv];
            let kk = (k + 1) as f64;
            let mut count = 0u64;
            for (iv, &v) in grid.vs.iter().enumerate() {
                count += row[iv];
                let xi = count as f64 / n;
                let total = THREE_SQRT2_OVER_PI * b * kk / v * u.powf(1.0 / kk) + xi;
                if best.is_none_or(|(t, _, _)| total < t) {
                    let params = XiParams {
                        omega,
                        k: (k + 1) as u32,
                        u,
                        v,
                    };
                    best = Some((total, params, xi));
                }
            }
        }
    }
    let (value, argmin, xi) = best.expect("grids are nonempty");
    let j_value = in_j as f64 / n;
    Ok(KEstimate {
        value: value.max(0.0),
        argmin,
        xi_at_argmin: xi,
        xi_std_error: binomial_se(xi, config.samples),
        j_value,
        j_std_error: binomial_se(j_value, config.samples),
    })
}

/// `C_n · height^{-1/n} · u^{1/n}`, unclamped.
pub fn theorem1_bound(n: u64, height: f64, u: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    check_positive("height", height)?;
    check_positive("u", u)?;
    let inv = 1.0 / n as f64;
    Ok((cnseq::cn(n)? + inv * (u.ln() - height.ln())).exp())
}

/// `C_f n^p Γ(p)` with `C_f = C_n H^{-1/n}`: the stated bound on `m(|log⁻|f||^p)`.
pub fn log_moment_bound(n: u64, height: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(theorem1_bound(n, height, 1.0)? * (n as f64).powf(p) * gamma(p))
}

/// `∫_0^1 |log u|^p d(C_f u^{1/n}) = C_f n^p Γ(p+1)`, the value the integral actually takes.
pub fn log_moment_bound_integrated(n: u64, height: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(theorem1_bound(n, height, 1.0)? * (n as f64).powf(p) * gamma(p + 1.0))
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!(
            "exponent p must be at least 1, got {p}"
        )));
    }
    Ok(())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample mean of `|min(0, log|f(x)|)|^p`.
pub fn mean_log_minus_p(f: &TrigPoly, p: f64, config: &SamplingConfig) -> Result<MeanEstimate> {
    f.ensure_nonzero()?;
    check_exponent(p)?;
    check_samples(config.samples)?;
    let domain = domain_for(f, config.window)?;
    let (value, std_error) = stratified_mean(domain, config.samples, config.seed, |x| {
        (-f.value_at(x).norm().ln()).max(0.0).powf(p)
    });
    Ok(MeanEstimate {
        value,
        std_error,
        samples: config.samples,
    })
}

/// Grid resolution of the interval-bound check.
pub const LEMMA2_GRID: usize = 257;
const LEMMA2_SLACK: f64 = 1e-9;
/// Derivative minimum below this fraction of its maximum counts as degenerate.
const LEMMA2_DEGENERATE: f64 = 1e-6;

/// Outcome of checking `b − a ≤ 2√2 · max|φ| / min|φ'|` on one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Lemma2Outcome {
    /// The sampled derivative image is not inside one closed quadrant.
    NotQuadrant,
    /// `min|φ'|` is numerically zero.
    Degenerate,
    /// `ratio = (b − a) · min|φ'| / (2√2 · max|φ|)`; violated iff `ratio > 1`.
    Checked { ratio: f64, violated: bool },
}

fn in_one_quadrant(values: &[Complex64]) -> bool {
    let quadrants = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
    quadrants
        .iter()
        .any(|&(sr, si)| values.iter().all(|z| sr * z.re >= 0.0 && si * z.im >= 0.0))
}

/// Grid check of the quadrant interval bound for `phi` on `[a, b]`.
pub fn lemma2_check(phi: &TrigPoly, a: f64, b: f64) -> Result<Lemma2Outcome> {
    phi.ensure_nonzero()?;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::invalid("interval must satisfy a < b"));
    }
    let dphi = phi.derivative(1)?;
    let xs: Vec<f64> = (0..LEMMA2_GRID)
        .map(|i| a + (b - a) * i as f64 / (LEMMA2_GRID - 1) as f64)
        .collect();
    let d: Vec<Complex64> = xs.iter().map(|&x| dphi.value_at(x)).collect();
    if !in_one_quadrant(&d) {
        return Ok(Lemma2Outcome::NotQuadrant);
    }
    let min_d = d.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let max_d = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(min_d > LEMMA2_DEGENERATE * max_d) {
        return Ok(Lemma2Outcome::Degenerate);
    }
    let max_phi = xs
        .iter()
        .map(|&x| phi.value_at(x).norm())
        .fold(0.0, f64::max);
    let ratio = (b - a) * min_d / (2.0 * SQRT_2 * max_phi);
    Ok(Lemma2Outcome::Checked {
        ratio,
        violated: ratio > 1.0 + LEMMA2_SLACK,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub seed: u64,
    /// Number of quadrant-filtered, non-degenerate trials requested.
    pub trials: usize,
    pub accepted: usize,
    pub violations: usize,
    pub skipped_degenerate: usize,
    pub rejected_not_quadrant: usize,
    pub attempts: usize,
    pub max_ratio: f64,
}

const LEMMA2_BATCH: usize = 1024;
const LEMMA2_MAX_ATTEMPTS_PER_TRIAL: usize = 1000;

/// One random candidate: up to 8 terms, `|ω| ≤ 4`, `|a| ≤ 2`, interval start
/// in `[−10, 10]`, length in `(0, 1.5]`.
fn lemma2_candidate(seed: u64, attempt: u64) -> Result<(TrigPoly, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    let terms = rng.gen_range(1..=8);
    let poly = TrigPoly::new((0..terms).map(|_| {
        let omega = rng.gen_range(-4.0..=4.0);
        let coeff = Complex64::from_polar(
            rng.gen_range(0.0..=2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        (omega, coeff)
    }))?;
    let a = rng.gen_range(-10.0..=10.0);
    let len = 1.5 * (1.0 - rng.gen::<f64>());
    Ok((poly, a, a + len))
}

/// Runs random trials until `trials` candidates pass the quadrant and
/// degeneracy filters, counting bound violations. Deterministic for a given
/// seed regardless of thread count.
pub fn lemma2_trial(seed: u64, trials: usize) -> Result<Lemma2Report> {
    if trials < 1 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut report = Lemma2Report {
        seed,
        trials,
        accepted: 0,
        violations: 0,
        skipped_degenerate: 0,
        rejected_not_quadrant: 0,
        attempts: 0,
        max_ratio: 0.0,
    };
    let cap = trials.saturating_mul(LEMMA2_MAX_ATTEMPTS_PER_TRIAL);
    let mut next = 0usize;
    while report.accepted < trials && next < cap {
        let batch: Vec<Lemma2Outcome> = (next..next + LEMMA2_BATCH)
            .into_par_iter()
            .map(|i| -> Result<Lemma2Outcome> {
                match lemma2_candidate(seed, i as u64)? {
                    (p, _, _) if p.is_zero() => Ok(Lemma2Outcome::Degenerate),
                    (p, a, b) => lemma2_check(&p, a, b),
                }
            })
            .collect::<Result<_>>()?;
        for outcome in batch {
            if report.accepted == trials {
                break;
            }
            report.attempts += 1;
            match outcome {
                Lemma2Outcome::NotQuadrant => report.rejected_not_quadrant += 1,
                Lemma2Outcome::Degenerate => report.skipped_degenerate += 1,
                Lemma2Outcome::Checked { ratio, violated } => {
                    report.accepted += 1;
                    report.max_ratio = report.max_ratio.max(ratio);
                    if violated {
                        report.violations += 1;
                    }
                }
            }
        }
        next += LEMMA2_BATCH;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn two_term() -> TrigPoly {
        TrigPoly::from_real([(0.0, 1.0), (1.0, -1.0)]).unwrap()
    }

    fn within(est: f64, se: f64, exact: f64, sigmas: f64) -> bool {
        (est - exact).abs() <= sigmas * se.max(1e-12)
    }

    /// `log⁺(2 sin(θ/2))` period mean by composite Simpson on the smooth
    /// pieces either side of the kinks at π/3 and 5π/3.
    fn log_plus_two_sin_mean(power: i32) -> f64 {
        let g = |t: f64| (2.0 * (t / 2.0).sin()).ln().powi(power);
        let (a, b) = (PI / 3.0, 5.0 * PI / 3.0);
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0 / (2.0 * PI)
    }

    #[test]
    fn constant_is_a_step() {
        let f = TrigPoly::from_real([(0.0, 2.0)]).unwrap();
        let c = estimate_j(&f, &[1.0, 1.999, 2.5], &SamplingConfig::new(1000, 0)).unwrap();
        assert_eq!(c.estimates, vec![0.0, 0.0, 1.0]);
        assert_eq!(c.std_errors[2], 0.0);
        assert!(c.periodic);
    }

    #[test]
    fn two_term_closed_form() {
        let us = [0.25, 0.5, 1.0, 1.9, 2.0];
        let c = estimate_j(&two_term(), &us, &SamplingConfig::new(200_000, 3)).unwrap();
        for (i, &u) in us.iter().enumerate() {
            let exact = (2.0 / PI) * (u / 2.0f64).min(1.0).asin();
            assert!(within(c.estimates[i], c.std_errors[i], exact, 3.0), "u={u}");
        }
        assert_eq!(c.estimates[4], 1.0);
        assert_relative_eq!(c.window, PI);
    }

    #[test]
    fn validation() {
        let f = two_term();
        let cfg = SamplingConfig::new(1000, 0);
        assert!(estimate_j(&TrigPoly::zero(), &[1.0], &cfg).is_err());
        assert!(estimate_j(&f, &[1.0, 0.5], &cfg).is_err());
        assert!(estimate_j(&f, &[-1.0], &cfg).is_err());
        assert!(estimate_j(&f, &[1.0], &SamplingConfig::new(999, 0)).is_err());
        let p = XiParams {
            omega: 0.0,
            k: 0,
            u: 1.0,
            v: 1.0,
        };
        assert!(estimate_xi(&f, p, &cfg).is_err());
        assert!(theorem1_bound(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn incommensurable_window_reports_drift() {
        let f = TrigPoly::from_real([(0.0, 1.0), (1.0, 1.0), (SQRT_2, 1.0)]).unwrap();
        let c = estimate_j(&f, &[0.5, 1.0], &SamplingConfig::new(50_000, 1)).unwrap();
        assert!(!c.periodic);
        assert!(c.doubling_drift.unwrap() < 0.02);
    }

    #[test]
    fn csv_layout() {
        let c = estimate_j(&two_term(), &[1.0, 3.0], &SamplingConfig::new(1000, 0)).unwrap();
        let csv = c.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("u,j_estimate,std_error"));
        assert_eq!(lines.nth(1), Some("3,1,0"));
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["samples"], 1000);
        assert_eq!(json["seed"], 0);
    }

    #[test]
    fn xi_examples() {
        let f = two_term();
        let cfg = SamplingConfig::new(100_000, 9);
        let loose = estimate_xi(
            &f,
            XiParams {
                omega: 0.0,
                k: 3,
                u: 0.7,
                v: 1e9,
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(loose.value, loose.j_value);
        let full = estimate_xi(
            &f,
            XiParams {
                omega: 0.0,
                k: 2,
                u: 5.0,
                v: 1e9,
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(full.value, 1.0);

        // sub-event of {|f'| < v}, sampled on the same points
        let p = XiParams {
            omega: 0.0,
            k: 1,
            u: 0.1,
            v: 0.05,
        };
        let xi = estimate_xi(&f, p, &cfg).unwrap();
        let fp = f.derivative(1).unwrap();
        let both = estimate_j(&fp, &[0.05], &cfg).unwrap();
        assert!(xi.value <= both.estimates[0] + 3.0 * both.std_errors[0]);
        // |f| < 0.1 forces |x| small mod 2π, where |f'| = 1 > 0.05
        assert_eq!(xi.value, 0.0);
    }

    #[test]
    fn k_estimate_dominates_j() {
        let f = two_term();
        let cfg = SamplingConfig::new(100_000, 4);
        for u in [0.05, 0.1, 0.5] {
            let k = estimate_k(&f, u, &KGrid::default(), &cfg).unwrap();
            let se = (k.j_std_error.powi(2) + k.xi_std_error.powi(2)).sqrt();
            assert!(k.j_value <= k.value + 3.0 * se);
        }
        // ω = 0, k = 1 only: the estimate is the minimum of the single-v bounds
        let grid = KGrid {
            omegas: vec![0.0],
            k_max: 1,
            vs: log_grid(0.01, 100.0, 9),
        };
        let k = estimate_k(&f, 0.1, &grid, &cfg).unwrap();
        for &v in &grid.vs {
            let xi = estimate_xi(
                &f,
                XiParams {
                    omega: 0.0,
                    k: 1,
                    u: 0.1,
                    v,
                },
                &cfg,
            )
            .unwrap();
            assert!(k.value <= THREE_SQRT2_OVER_PI / v * 0.1 + xi.value + 1e-15);
        }
        // vacuous above sup|f|
        let grid = KGrid {
            omegas: vec![0.0],
            k_max: 2,
            vs: vec![1e6],
        };
        let k = estimate_k(&f, 3.0, &grid, &cfg).unwrap();
        assert!(k.value > 1.0 && k.value < 1.001);
        assert_eq!(k.j_value, 1.0);
    }

    #[test]
    fn theorem1_examples() {
        assert_eq!(theorem1_bound(1, 1.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(
            theorem1_bound(1, 2.0, 1.0).unwrap(),
            0.25,
            max_relative = 1e-15
        );
        let c2 = 2.0 * (0.5 * THREE_SQRT2_OVER_PI).sqrt();
        assert_relative_eq!(
            theorem1_bound(2, 1.0, 1.0).unwrap(),
            c2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn log_minus_mean_examples() {
        let f = TrigPoly::from_real([(0.0, 3.0), (1.0, 1.0)]).unwrap();
        let m = mean_log_minus_p(&f, 1.0, &SamplingConfig::new(10_000, 0)).unwrap();
        assert_eq!(m.value, 0.0);

        let cfg = SamplingConfig::new(1_000_000, 2);
        let m1 = mean_log_minus_p(&two_term(), 1.0, &cfg).unwrap();
        let oracle = log_plus_two_sin_mean(1);
        assert_relative_eq!(oracle, 0.3230659472, max_relative = 1e-8);
        assert!(
            within(m1.value, m1.std_error, oracle, 4.0),
            "{} vs {oracle}",
            m1.value
        );
        let m2 = mean_log_minus_p(&two_term(), 2.0, &cfg).unwrap();
        assert!(m2.value.is_finite() && m2.value > m1.value);
    }

    #[test]
    fn lemma2_examples() {
        let phi = TrigPoly::from_real([(1.0, 1.0)]).unwrap();
        match lemma2_check(&phi, 0.0, FRAC_PI_2).unwrap() {
            Lemma2Outcome::Checked { ratio, violated } => {
                assert!(!violated);
                assert_relative_eq!(ratio, FRAC_PI_2 / (2.0 * SQRT_2), max_relative = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        // −i(χ_ε − 1)/ε ≈ x near 0
        let eps = 1e-3;
        let lin = TrigPoly::new([
            (0.0, Complex64::new(0.0, 1.0 / eps)),
            (eps, Complex64::new(0.0, -1.0 / eps)),
        ])
        .unwrap();
        match lemma2_check(&lin, 0.5, 1.0).unwrap() {
            Lemma2Outcome::Checked { violated, .. } => assert!(!violated),
            other => panic!("unexpected {other:?}"),
        }
        let r = lemma2_trial(42, 500).unwrap();
        assert_eq!(r.accepted, 500);
        assert_eq!(r.violations, 0);
        assert_eq!(r, lemma2_trial(42, 500).unwrap());
    }

    fn arb_poly() -> impl Strategy<Value = TrigPoly> {
        prop::collection::vec((0i32..5, -2.0f64..2.0, -2.0f64..2.0), 1..5).prop_filter_map(
            "nonzero",
            |terms| {
                let f = TrigPoly::new(
                    terms
                        .into_iter()
                        .map(|(w, re, im)| (w as f64, Complex64::new(re, im))),
                )
                .ok()?;
                (!f.is_zero() && f.height().ok()? > 0.1).then_some(f)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn monotone_in_threshold(f in arb_poly(), seed in 0u64..1000) {
            let us = log_grid(0.01, 10.0, 25);
            let c = estimate_j(&f, &us, &SamplingConfig::new(4000, seed)).unwrap();
            prop_assert!(c.estimates.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(c.estimates.iter().all(|p| (0.0..=1.0).contains(p)));
        }

        #[test]
        fn scaling_law(f in arb_poly(), c in 0.2f64..5.0, u in 0.1f64..3.0) {
            let cfg = SamplingConfig::new(40_000, 5);
            let scaled = f.scale(Complex64::new(0.0, c)).unwrap();
            let a = estimate_j(&scaled, &[u], &cfg).unwrap();
            let b = estimate_j(&f, &[u / c], &cfg).unwrap();
            let se = (a.std_errors[0].powi(2) + b.std_errors[0].powi(2)).sqrt();
            prop_assert!((a.estimates[0] - b.estimates[0]).abs() <= 3.0 * se + 1e-12);
        }

        #[test]
        fn modulation_dilation_invariance(f in arb_poly(), w in -3.0f64..3.0, a in 0.3f64..3.0, u in 0.1f64..3.0) {
            let cfg = SamplingConfig::new(40_000, 6);
            let h = f.dilate(a).unwrap().modulate(w).unwrap();
            let x = estimate_j(&h, &[u], &cfg).unwrap();
            let y = estimate_j(&f, &[u], &cfg).unwrap();
            let se = (x.std_errors[0].powi(2) + y.std_errors[0].powi(2)).sqrt();
            prop_assert!((x.estimates[0] - y.estimates[0]).abs() <= 4.0 * se + 1e-12);
        }

        #[test]
        fn xi_never_exceeds_j(f in arb_poly(), k in 1u32..4, u in 0.1f64..3.0, v in 0.1f64..10.0, w in -2.0f64..2.0) {
            let cfg = SamplingConfig::new(5000, 7);
            let xi = estimate_xi(&f, XiParams { omega: w, k, u, v }, &cfg).unwrap();
            let j = estimate_j(&f, &[u], &cfg).unwrap();
            prop_assert!(xi.value <= xi.j_value);
            if u < f.l1_norm() {
                prop_assert_eq!(xi.j_value, j.estimates[0]);
            }
        }
    }
}
