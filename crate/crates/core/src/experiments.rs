//! Example families and randomized probes.
//!
//! `p_n = 1 + z + ⋯ + z^n` and `q_n = (1 + z)^n / binom(n, ⌊n/2⌋)` bracket the
//! small-value behaviour of height-one polynomials: `q_n` concentrates all of
//! its roots at `−1`, `p_n` spreads them evenly. The probes sample random
//! polynomials and compare them against these two endpoints.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mahler::{
    find_roots, jensen_detail, mahler_quadrature_poly, MahlerTriple, QuadratureOptions,
    ROOT_RESIDUAL_TOL,
};
use crate::meanmeasure::{estimate_j, log_grid, theorem1_bound};
use crate::sampling::SamplingConfig;
use crate::trigpoly::{AlgebraicPoly, TrigPoly};

fn check_n(n: u64) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    Ok(())
}

/// `binom(n, k)` in floating point; exact while it fits in 53 bits.
pub fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `1 + z + ⋯ + z^n`.
pub fn pn(n: u64) -> Result<AlgebraicPoly> {
    check_n(n)?;
    AlgebraicPoly::from_real(&vec![1.0; n as usize + 1])
}

/// `(1 + z)^n / binom(n, ⌊n/2⌋)`; the middle coefficient is exactly 1.
pub fn qn(n: u64) -> Result<AlgebraicPoly> {
    check_n(n)?;
    let mid = binomial(n, n / 2);
    let coeffs: Vec<f64> = (0..=n).map(|k| binomial(n, k) / mid).collect();
    AlgebraicPoly::from_real(&coeffs)
}

/// `binom(n, ⌊n/2⌋)^{1/n} / 2`, the small-value slope constant of `q_n`.
pub fn qn_slope_constant(n: u64) -> Result<f64> {
    check_n(n)?;
    Ok(0.5 * binomial(n, n / 2).powf(1.0 / n as f64))
}

/// `J_{q_n}(u) = (2/π) arcsin(min{1, c_n u^{1/n}})`.
pub fn jqn_closed(n: u64, u: f64) -> Result<f64> {
    check_positive_u(u)?;
    let c = qn_slope_constant(n)?;
    Ok(2.0 / PI * (c * u.powf(1.0 / n as f64)).min(1.0).asin())
}

/// `(2/π) arcsin(min{1, u})`, an upper bound for `J_{p_n}(u)`.
pub fn jpn_bound(n: u64, u: f64) -> Result<f64> {
    check_n(n)?;
    check_positive_u(u)?;
    Ok(2.0 / PI * u.min(1.0).asin())
}

/// `(2/π) c_n u^{1/n}`, a lower bound for `J_{q_n}(u)` from `arcsin x ≥ x`.
pub fn jqn_lower_bound(n: u64, u: f64) -> Result<f64> {
    check_positive_u(u)?;
    let c = qn_slope_constant(n)?;
    Ok(2.0 / PI * c * u.powf(1.0 / n as f64))
}

fn check_positive_u(u: f64) -> Result<()> {
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::invalid(format!("u must be positive, got {u}")));
    }
    Ok(())
}

/// `log M⁻(q_n) = −∫_0^1 J_{q_n}(u) du/u = −(2n/π) ∫_0^{c_n} arcsin(t)/t dt`.
pub fn log_mminus_qn_closed(n: u64) -> Result<f64> {
    let c = qn_slope_constant(n)?;
    // arcsin(t)/t is smooth on [0, c] with c < 1; composite Gauss–Legendre
    const X: [f64; 5] = [
        0.0,
        0.5384693101056831,
        0.906179845938664,
        -0.5384693101056831,
        -0.906179845938664,
    ];
    const W: [f64; 5] = [
        0.5688888888888889,
        0.4786286704993665,
        0.2369268850561891,
        0.4786286704993665,
        0.2369268850561891,
    ];
    let panels = 256;
    let h = c / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mid = (i as f64 + 0.5) * h;
        for j in 0..5 {
            let t = mid + 0.5 * h * X[j];
            total += W[j] * t.asin() / t;
        }
    }
    Ok(-(2.0 * n as f64 / PI) * 0.5 * h * total)
}

/// One row of the `p_n`/`q_n` Mahler inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnQnRow {
    pub n: u64,
    pub log_mminus_pn: f64,
    pub log_mminus_qn: f64,
    pub log_mminus_qn_closed: f64,
    pub err: f64,
    /// `−2n/π`.
    pub stated_qn_bound: f64,
    /// `−(2n/π) c_n`.
    pub corrected_qn_bound: f64,
    /// `log M⁻(p_n) > −1`.
    pub pn_above_minus_one: bool,
    /// `log M⁻(q_n) < −2n/π`.
    pub qn_below_stated: bool,
    /// `log M⁻(q_n) ≤ −(2n/π) c_n`.
    pub qn_below_corrected: bool,
}

impl PnQnRow {
    pub const CSV_HEADER: &'static str =
        "n,log_mminus_pn,log_mminus_qn,log_mminus_qn_closed,minus_2n_over_pi,corrected_qn_bound";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n,
            self.log_mminus_pn,
            self.log_mminus_qn,
            self.log_mminus_qn_closed,
            self.stated_qn_bound,
            self.corrected_qn_bound
        )
    }
}

/// `log M⁻` of `p_n` and `q_n` by the root route, with the closed form for `q_n`.
pub fn pn_qn_row(n: u64, tol: f64) -> Result<PnQnRow> {
    let p = jensen_detail(&pn(n)?, tol)?.triple;
    let q = jensen_detail(&qn(n)?, tol)?.triple;
    let closed = log_mminus_qn_closed(n)?;
    let nf = n as f64;
    let stated = -2.0 * nf / PI;
    let corrected = stated * qn_slope_constant(n)?;
    let err = p.err.max(q.err);
    Ok(PnQnRow {
        n,
        log_mminus_pn: p.log_m_minus,
        log_mminus_qn: q.log_m_minus,
        log_mminus_qn_closed: closed,
        err,
        stated_qn_bound: stated,
        corrected_qn_bound: corrected,
        pn_above_minus_one: p.log_m_minus > -1.0,
        qn_below_stated: q.log_m_minus < stated,
        qn_below_corrected: q.log_m_minus <= corrected + q.err,
    })
}

/// Sampling law for the random polynomials of the chain probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conj3Family {
    /// Exponents `0 = e_0 < ⋯ < e_n ≤ 2n` when false, exactly `0..=n` when true.
    pub dense_exponents: bool,
    /// Real coefficients with random signs instead of uniform phases.
    pub real_coefficients: bool,
}

impl Conj3Family {
    pub fn describe(&self, n: u64) -> String {
        let exps = if self.dense_exponents {
            format!("exponents 0..={n}")
        } else {
            format!("exponents 0 = e_0 < ... < e_{n} <= {}", 2 * n)
        };
        let coeffs = if self.real_coefficients {
            "real coefficients, moduli uniform in (0,1], random signs"
        } else {
            "complex coefficients, moduli uniform in (0,1], uniform phases"
        };
        format!("{exps}; {coeffs}; rescaled to height 1")
    }
}

/// A random `(n+1)`-term polynomial of height 1.
pub fn random_height_one_poly(
    n: u64,
    family: Conj3Family,
    rng: &mut impl Rng,
) -> Result<AlgebraicPoly> {
    check_n(n)?;
    let exponents: Vec<usize> = if family.dense_exponents {
        (0..=n as usize).collect()
    } else {
        let mut chosen = rand::seq::index::sample(rng, 2 * n as usize, n as usize).into_vec();
        chosen.iter_mut().for_each(|e| *e += 1);
        chosen.sort_unstable();
        std::iter::once(0).chain(chosen).collect()
    };
    let degree = *exponents.last().expect("at least one exponent");
    let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
    for &e in &exponents {
        let modulus = 1.0 - rng.gen::<f64>();
        coeffs[e] = if family.real_coefficients {
            Complex64::new(if rng.gen::<bool>() { modulus } else { -modulus }, 0.0)
        } else {
            Complex64::from_polar(modulus, rng.gen_range(0.0..TAU))
        };
    }
    let height = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    AlgebraicPoly::new(coeffs.into_iter().map(|c| c / height).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureViolation {
    pub trial: usize,
    pub coefficients: Vec<Complex64>,
    pub log_mminus: f64,
    pub err: f64,
    /// Root route at `tol/100`.
    pub recheck_jensen: f64,
    /// Quadrature route at `tol/100`.
    pub recheck_quadrature: f64,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn of(values: &[f64]) -> Option<SummaryStats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mid = v.len() / 2;
        let median = if v.len() % 2 == 1 {
            v[mid]
        } else {
            0.5 * (v[mid - 1] + v[mid])
        };
        Some(SummaryStats {
            min: v[0],
            median,
            max: v[v.len() - 1],
        })
    }
}

/// Outcome of the chain probe `M⁻(q_n) ≤ M⁻(R) ≤ M⁻(p_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub n: u64,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub family: String,
    /// The chain as tested, lower end first.
    pub orientation: String,
    pub log_mminus_lower: f64,
    pub log_mminus_upper: f64,
    /// Whether `M⁻(p_n) ≤ M⁻(q_n)`, i.e. whether the reverse chain is nonempty.
    pub reverse_chain_nonempty: bool,
    /// `R = q_n` meets the lower end with equality; `R = p_n` the upper end.
    pub endpoint_equality: [bool; 2],
    /// Flags that survived re-verification.
    pub violations: Vec<ConjectureViolation>,
    /// Flags that did not survive re-verification.
    pub unconfirmed_flags: usize,
    pub failures: Vec<TrialFailure>,
    /// Of `log M⁻(R)` over the successful trials.
    pub summary: Option<SummaryStats>,
}

enum ChainSide {
    Inside,
    Below,
    Above,
}

fn chain_side(value: f64, err: f64, lower: f64, upper: f64) -> ChainSide {
    if value + err < lower {
        ChainSide::Below
    } else if value - err > upper {
        ChainSide::Above
    } else {
        ChainSide::Inside
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Probes the chain on `trials` random height-one polynomials. Flagged trials
/// are recomputed at `tol/100` by both routes and kept only if both still lie
/// outside the chain.
pub fn conj3_trial(
    n: u64,
    trials: usize,
    seed: u64,
    tol: f64,
    family: Conj3Family,
) -> Result<ConjectureReport> {
    if n < 2 {
        return Err(Error::invalid("the chain probe needs n ≥ 2"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let lower_triple = jensen_detail(&qn(n)?, tol)?.triple;
    let upper_triple = jensen_detail(&pn(n)?, tol)?.triple;
    let (lower, upper) = (lower_triple.log_m_minus, upper_triple.log_m_minus);
    let endpoint = |t: MahlerTriple| {
        matches!(
            chain_side(t.log_m_minus, 0.0, lower, upper),
            ChainSide::Inside
        )
    };
    let endpoint_equality = [
        endpoint(lower_triple) && lower_triple.log_m_minus == lower,
        endpoint(upper_triple) && upper_triple.log_m_minus == upper,
    ];

    let outcomes: Vec<std::result::Result<(f64, Option<ConjectureViolation>), TrialFailure>> = (0
        ..trials)
        .into_par_iter()
        .map(|trial| {
            let fail = |e: Error| TrialFailure {
                trial,
                message: e.to_string(),
            };
            let mut rng = trial_rng(seed, trial);
            let r = random_height_one_poly(n, family, &mut rng).map_err(fail)?;
            let t = jensen_detail(&r, tol).map_err(fail)?.triple;
            let flagged = !matches!(
                chain_side(t.log_m_minus, t.err, lower, upper),
                ChainSide::Inside
            );
            if !flagged {
                return Ok((t.log_m_minus, None));
            }
            let fine = tol / 100.0;
            let j = jensen_detail(&r, fine).map_err(fail)?.triple;
            let q = mahler_quadrature_poly(&r, &QuadratureOptions::new(fine)).map_err(fail)?;
            let outside = |x: &MahlerTriple| {
                !matches!(
                    chain_side(x.log_m_minus, x.err, lower, upper),
                    ChainSide::Inside
                )
            };
            Ok((
                t.log_m_minus,
                Some(ConjectureViolation {
                    trial,
                    coefficients: r.coeffs().to_vec(),
                    log_mminus: t.log_m_minus,
                    err: t.err,
                    recheck_jensen: j.log_m_minus,
                    recheck_quadrature: q.log_m_minus,
                    confirmed: outside(&j) && outside(&q),
                }),
            ))
        })
        .collect();

    let mut values = Vec::with_capacity(trials);
    let mut violations = Vec::new();
    let mut unconfirmed_flags = 0;
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((v, flag)) => {
                values.push(v);
                match flag {
                    Some(viol) if viol.confirmed => violations.push(viol),
                    Some(_) => unconfirmed_flags += 1,
                    None => {}
                }
            }
            Err(f) => failures.push(f),
        }
    }
    Ok(ConjectureReport {
        n,
        trials,
        seed,
        tol,
        family: family.describe(n),
        orientation: "M-(q_n) <= M-(R) <= M-(p_n)".into(),
        log_mminus_lower: lower,
        log_mminus_upper: upper,
        reverse_chain_nonempty: upper <= lower,
        endpoint_equality,
        violations,
        unconfirmed_flags,
        failures,
        summary: SummaryStats::of(&values),
    })
}

/// Random trigonometric polynomials with `n+1` terms on the frequencies
/// `0..=n`: complex coefficients with uniform phases, moduli uniform in
/// `(0, s]`, and a per-polynomial scale `s` log-uniform in `[1/2, 2]`.
pub fn random_integer_frequency_family(n: u64, count: usize, seed: u64) -> Result<Vec<TrigPoly>> {
    check_n(n)?;
    (0..count)
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let scale = (rng.gen_range(-1.0..=1.0) * std::f64::consts::LN_2).exp();
            let coeffs: Vec<Complex64> = (0..=n)
                .map(|_| {
                    Complex64::from_polar(scale * (1.0 - rng.gen::<f64>()), rng.gen_range(0.0..TAU))
                })
                .collect();
            TrigPoly::from_integer_coeffs(&coeffs)
        })
        .collect()
}

/// Empirical lower bound for the best constant in the sublevel bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestConstantReport {
    pub n: u64,
    pub trials: usize,
    pub seed: u64,
    pub samples: usize,
    pub u_grid: Vec<f64>,
    /// `sup Ĵ_f(u) · H_f^{1/n} · u^{−1/n}` over the sampled family and grid.
    pub value: f64,
    /// Standard error of the maximizing estimate, on the same scale.
    pub std_error: f64,
    pub argmax_trial: usize,
    pub argmax_u: f64,
    /// `max_u J_{q_n}(u) u^{−1/n}` on the grid (height 1).
    pub qn_family_value: f64,
    /// `C_n`, the constant of the proven bound.
    pub cn: f64,
}

pub fn default_probe_grid() -> Vec<f64> {
    log_grid(1e-3, 1.0, 13)
}

/// Samples `trials` polynomials from [`random_integer_frequency_family`] and
/// reports the largest normalized sublevel ratio on `u_grid`.
pub fn best_constant_probe(
    n: u64,
    trials: usize,
    u_grid: &[f64],
    seed: u64,
    samples: usize,
) -> Result<BestConstantReport> {
    check_n(n)?;
    if trials < 1 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let family = random_integer_frequency_family(n, trials, seed)?;
    let inv_n = 1.0 / n as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0usize, 0.0);
    for (i, f) in family.iter().enumerate() {
        let h = f.height()?;
        let thresholds: Vec<f64> = u_grid.iter().map(|u| u * h).collect();
        let curve = estimate_j(
            f,
            &thresholds,
            &SamplingConfig::new(samples, seed.wrapping_add(i as u64)),
        )?;
        for (k, &u) in u_grid.iter().enumerate() {
            // J_f(uH) · H^{1/n} (uH)^{-1/n} = J_f(uH) u^{-1/n}
            let scale = u.powf(-inv_n);
            let ratio = curve.estimates[k] * scale;
            if ratio > best.0 {
                best = (ratio, curve.std_errors[k] * scale, i, u);
            }
        }
    }
    let mut qn_family_value = 0.0f64;
    for &u in u_grid {
        qn_family_value = qn_family_value.max(jqn_closed(n, u)? * u.powf(-inv_n));
    }
    Ok(BestConstantReport {
        n,
        trials,
        seed,
        samples,
        u_grid: u_grid.to_vec(),
        value: best.0,
        std_error: best.1,
        argmax_trial: best.2,
        argmax_u: best.3,
        qn_family_value,
        cn: theorem1_bound(n, 1.0, 1.0)?,
    })
}

/// Star discrepancy `sup_t |#{x_i < t}/n − t|` of points in `[0, 1)`.
pub fn star_discrepancy(points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("star discrepancy needs at least one point"));
    }
    if points.iter().any(|x| !(0.0..1.0).contains(x)) {
        return Err(Error::invalid("points must lie in [0, 1)"));
    }
    let mut x = points.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    Ok(x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let i = i as f64;
            ((i + 1.0) / n - xi).max(xi - i / n)
        })
        .fold(0.0, f64::max))
}

/// Root arguments of `p` divided by `2π`, in `[0, 1)`.
pub fn root_angles(p: &AlgebraicPoly) -> Result<Vec<f64>> {
    let roots = find_roots(p, ROOT_RESIDUAL_TOL)?;
    Ok(roots
        .roots
        .iter()
        .map(|r| {
            let t = r.arg().rem_euclid(TAU) / TAU;
            if t >= 1.0 {
                0.0
            } else {
                t
            }
        })
        .collect())
}
