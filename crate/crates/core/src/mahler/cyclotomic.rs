//! The product `Φ_N = Φ_1 Φ_2 ⋯ Φ_N` of the first `N` cyclotomic polynomials.
//!
//! By Möbius inversion `Φ_N(z) = Π_{d ≤ N} (z^d − 1)^{w_d}` with
//! `w_d = Σ_{m ≤ N/d} μ(m)`, the Mertens function at `⌊N/d⌋`. On the circle
//! `|e^{idθ} − 1| = 2|sin(dθ/2)|`, so `log|Φ_N|` costs `O(N)` per point.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::{circle_log_means, QuadratureOptions};
use crate::error::{Error, Result};
use crate::sampling::{stratified_mean, Domain};
use crate::trigpoly::AlgebraicPoly;

/// Default cap on `N`.
pub const DEFAULT_N_CAP: u64 = 200;

/// `μ(0..=n)`; index 0 is unused and set to 0.
pub fn mobius_table(n: usize) -> Vec<i8> {
    let mut mu = vec![1i8; n + 1];
    mu[0] = 0;
    let mut composite = vec![false; n + 1];
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        for m in (p..=n).step_by(p) {
            if m > p {
                composite[m] = true;
            }
            mu[m] = -mu[m];
        }
        if let Some(sq) = p.checked_mul(p) {
            for m in (sq..=n).step_by(sq) {
                mu[m] = 0;
            }
        }
    }
    mu
}

/// Euler's `φ(0..=n)`; index 0 is unused and set to 0.
pub fn totient_table(n: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=n as u64).collect();
    for p in 2..=n {
        if phi[p] == p as u64 {
            for m in (p..=n).step_by(p) {
                phi[m] -= phi[m] / p as u64;
            }
        }
    }
    phi
}

/// Precomputed Möbius data for evaluating `log|Φ_N|` on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycloEvalPlan {
    pub n_max: u64,
    /// `μ(k)` at index `k`; index 0 unused.
    pub mobius: Vec<i8>,
    /// `w_d` at index `d`; index 0 unused.
    pub divisor_weights: Vec<i64>,
    nonzero: Vec<(f64, i32)>,
}

impl CycloEvalPlan {
    pub fn new(n: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("N must be at least 1"));
        }
        let nu = usize::try_from(n).map_err(|_| Error::invalid("N too large"))?;
        let mobius = mobius_table(nu);
        let mut mertens = vec![0i64; nu + 1];
        for k in 1..=nu {
            mertens[k] = mertens[k - 1] + mobius[k] as i64;
        }
        let mut divisor_weights = vec![0i64; nu + 1];
        for d in 1..=nu {
            divisor_weights[d] = mertens[nu / d];
        }
        let degree: i64 = (1..=nu).map(|d| divisor_weights[d] * d as i64).sum();
        let phi_sum: u64 = totient_table(nu)[1..].iter().sum();
        if degree != phi_sum as i64 {
            return Err(Error::invalid(format!(
                "divisor weights give degree {degree}, expected Σφ = {phi_sum}"
            )));
        }
        let nonzero = (1..=nu)
            .filter(|&d| divisor_weights[d] != 0)
            .map(|d| (d as f64, divisor_weights[d] as i32))
            .collect();
        Ok(CycloEvalPlan {
            n_max: n,
            mobius,
            divisor_weights,
            nonzero,
        })
    }

    /// `deg Φ_N = Σ_{k ≤ N} φ(k)`.
    pub fn degree(&self) -> u64 {
        let total: i64 = (1..self.divisor_weights.len())
            .map(|d| self.divisor_weights[d] * d as i64)
            .sum();
        total as u64
    }

    /// `log|Φ_N(e^{iθ})|`; `−∞` exactly at the roots.
    pub fn log_abs(&self, theta: f64) -> f64 {
        let turns = theta / TAU;
        let mut log_acc = 0.0;
        let mut prod = 1.0f64;
        for &(d, w) in &self.nonzero {
            // reduce d·θ/2π to [0, 1) before taking the sine
            let x = d * turns;
            let frac = x - x.floor();
            if frac == 0.0 {
                // θ/2π is a fraction with denominator ≤ N: a root of Φ_N
                return f64::NEG_INFINITY;
            }
            prod *= (2.0 * (PI * frac).sin()).powi(w);
            if !(1e-150..=1e150).contains(&prod) {
                log_acc += prod.ln();
                prod = 1.0;
            }
        }
        log_acc + prod.ln()
    }
}

/// The circle evaluator `θ ↦ log|Φ_N(e^{iθ})|`.
pub fn phi_n_log_evaluator(plan: &CycloEvalPlan) -> impl Fn(f64) -> f64 + Sync + '_ {
    move |theta| plan.log_abs(theta)
}

/// A reduced fraction `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Farey fractions of order `n` in `[0, 1)`, ascending, by the next-term
/// recurrence. These are the root angles of `Φ_N` divided by `2π`.
pub fn farey_angles(n: u64) -> Result<Vec<Fraction>> {
    if n < 1 {
        return Err(Error::invalid("Farey order must be at least 1"));
    }
    let mut out = vec![Fraction { num: 0, den: 1 }];
    let (mut a, mut b, mut c, mut d) = (0u64, 1u64, 1u64, n);
    while c < d {
        out.push(Fraction { num: c, den: d });
        let k = (n + b) / d;
        (a, b, c, d) = (c, d, k * c - a, k * d - b);
    }
    Ok(out)
}

/// Integer coefficients of the `k`-th cyclotomic polynomial.
pub fn cyclotomic_coeffs(k: u64) -> Result<Vec<i128>> {
    if k < 1 {
        return Err(Error::invalid("cyclotomic index must be at least 1"));
    }
    let ku = k as usize;
    let mu = mobius_table(ku);
    let mut poly = vec![1i128];
    let divisors: Vec<usize> = (1..=ku).filter(|d| ku.is_multiple_of(*d)).collect();
    for &d in &divisors {
        if mu[ku / d] == 1 {
            poly = mul_xd_minus_one(&poly, d)?;
        }
    }
    for &d in &divisors {
        if mu[ku / d] == -1 {
            poly = div_xd_minus_one(&poly, d)?;
        }
    }
    Ok(poly)
}

fn overflow() -> Error {
    Error::invalid("cyclotomic coefficients overflow 128-bit integers")
}

fn mul_xd_minus_one(a: &[i128], d: usize) -> Result<Vec<i128>> {
    let mut out = vec![0i128; a.len() + d];
    for (i, &c) in a.iter().enumerate() {
        out[i] = out[i].checked_sub(c).ok_or_else(overflow)?;
        out[i + d] = out[i + d].checked_add(c).ok_or_else(overflow)?;
    }
    Ok(out)
}

/// Exact division by `z^d − 1`.
fn div_xd_minus_one(a: &[i128], d: usize) -> Result<Vec<i128>> {
    if a.len() <= d {
        return Err(Error::invalid("division by z^d - 1 is not exact"));
    }
    let mut q = vec![0i128; a.len() - d];
    for i in 0..q.len() {
        let prev = if i >= d { q[i - d] } else { 0 };
        q[i] = prev.checked_sub(a[i]).ok_or_else(overflow)?;
    }
    // remainder check on the top d coefficients
    for (i, &ai) in a.iter().enumerate().skip(q.len()) {
        let prev = if i >= d {
            q.get(i - d).copied().unwrap_or(0)
        } else {
            0
        };
        if prev != ai {
            return Err(Error::invalid("division by z^d - 1 is not exact"));
        }
    }
    Ok(q)
}

fn poly_mul(a: &[i128], b: &[i128]) -> Result<Vec<i128>> {
    let mut out = vec![0i128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let t = x.checked_mul(y).ok_or_else(overflow)?;
            out[i + j] = out[i + j].checked_add(t).ok_or_else(overflow)?;
        }
    }
    Ok(out)
}

/// Expanded integer coefficients of `Φ_N`, for cross-checks at small `N`.
pub fn phi_n_coeffs(n: u64) -> Result<Vec<i128>> {
    if n < 1 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mut poly = vec![1i128];
    for k in 1..=n {
        poly = poly_mul(&poly, &cyclotomic_coeffs(k)?)?;
    }
    Ok(poly)
}

/// `Φ_N` as an [`AlgebraicPoly`]; fails if a coefficient is not exactly
/// representable in `f64`.
pub fn phi_n_poly(n: u64) -> Result<AlgebraicPoly> {
    let coeffs = phi_n_coeffs(n)?;
    let limit = 1i128 << 53;
    if coeffs.iter().any(|c| c.abs() > limit) {
        return Err(Error::invalid("Φ_N coefficients exceed exact f64 range"));
    }
    AlgebraicPoly::new(
        coeffs
            .iter()
            .map(|&c| Complex64::new(c as f64, 0.0))
            .collect(),
    )
}

/// Options for the growth row of `log M⁺(Φ_N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiNOptions {
    pub quadrature: QuadratureOptions,
    pub samples: usize,
    pub seed: u64,
    pub n_cap: u64,
}

impl Default for PhiNOptions {
    fn default() -> Self {
        PhiNOptions {
            quadrature: QuadratureOptions::new(1e-8),
            samples: 1 << 22,
            seed: 0,
            n_cap: DEFAULT_N_CAP,
        }
    }
}

/// `log M⁺(Φ_N)` by two independent routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiNGrowthRow {
    pub n: u64,
    pub degree: u64,
    /// Farey-graded quadrature of `log⁺|Φ_N|`.
    pub log_mplus_quadrature: f64,
    /// Stratified period mean of `−log⁻|Φ_N|`, equal to `log M⁺` because `M(Φ_N) = 1`.
    pub log_mplus_sampling: f64,
    pub sampling_std_error: f64,
    /// Quadrature error estimate.
    pub err: f64,
    /// Quadrature value of `log M(Φ_N)`, zero in exact arithmetic.
    pub log_m_quadrature: f64,
}

impl PhiNGrowthRow {
    pub const CSV_HEADER: &'static str = "N,log_mplus_quadrature,log_mplus_sampling,err";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.n, self.log_mplus_quadrature, self.log_mplus_sampling, self.err
        )
    }
}

pub fn log_mplus_phi_n(n: u64, options: &PhiNOptions) -> Result<PhiNGrowthRow> {
    if n < 1 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if n > options.n_cap {
        return Err(Error::invalid(format!(
            "N = {n} exceeds the cap {}",
            options.n_cap
        )));
    }
    if options.samples < 2 {
        return Err(Error::invalid("at least two samples are required"));
    }
    let plan = CycloEvalPlan::new(n)?;
    let singular: Vec<f64> = farey_angles(n)?.iter().map(|f| TAU * f.value()).collect();
    let eval = phi_n_log_evaluator(&plan);
    let means = circle_log_means(&eval, &singular, &options.quadrature)?;
    let domain = Domain {
        start: 0.0,
        length: TAU,
        periodic: true,
    };
    let (mean, se) = stratified_mean(domain, options.samples, options.seed, |t| {
        (-eval(t)).max(0.0)
    });
    Ok(PhiNGrowthRow {
        n,
        degree: plan.degree(),
        log_mplus_quadrature: means.log_plus,
        log_mplus_sampling: mean,
        sampling_std_error: se,
        err: means.max_err(),
        log_m_quadrature: means.log,
    })
}

/// Least-squares fit of `value ≈ prefactor · N^exponent` on log–log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
}

pub fn fit_power_law(ns: &[f64], values: &[f64]) -> Result<PowerLawFit> {
    if ns.len() != values.len() || ns.len() < 2 {
        return Err(Error::invalid(
            "power-law fit needs at least two matching points",
        ));
    }
    if ns
        .iter()
        .chain(values)
        .any(|v| !(v.is_finite() && *v > 0.0))
    {
        return Err(Error::invalid("power-law fit needs positive data"));
    }
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("power-law fit needs distinct N"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    Ok(PowerLawFit {
        exponent,
        prefactor: (my - exponent * mx).exp(),
    })
}
