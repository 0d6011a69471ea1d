//! Mahler measures `M`, `M⁺`, `M⁻` on the unit circle.
//!
//! Two routes: the root product (`log M = log|lead| + Σ log⁺|λ|`) and adaptive
//! quadrature of a circle evaluator. `M⁺` always needs quadrature; the root
//! route integrates the root-product form of `log|p|`, which stays accurate next
//! to roots where Horner's rule cancels.

pub mod cyclotomic;
pub mod quadrature;
pub mod roots;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trigpoly::AlgebraicPoly;
pub use cyclotomic::{
    farey_angles, fit_power_law, log_mplus_phi_n, phi_n_log_evaluator, phi_n_poly, CycloEvalPlan,
    Fraction, PhiNGrowthRow, PhiNOptions, PowerLawFit,
};
pub use quadrature::{circle_log_means, CircleMeans, QuadratureOptions};
pub use roots::{find_roots, RootSet};

/// Residual tolerance for root certificates.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;
/// Roots this close to the unit circle are treated as singular angles.
const NEAR_CIRCLE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Jensen,
    Quadrature,
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MahlerTriple {
    pub m: f64,
    pub m_plus: f64,
    pub m_minus: f64,
    pub log_m: f64,
    pub log_m_plus: f64,
    pub log_m_minus: f64,
    pub method: Method,
    /// Absolute error estimate on the log scale.
    pub err: f64,
}

impl MahlerTriple {
    /// Clamps `log M⁺ ≥ 0` and `log M⁻ ≤ 0`.
    pub fn from_logs(
        log_m: f64,
        log_m_plus: f64,
        log_m_minus: f64,
        method: Method,
        err: f64,
    ) -> Self {
        let log_m_plus = log_m_plus.max(0.0);
        let log_m_minus = log_m_minus.min(0.0);
        MahlerTriple {
            m: log_m.exp(),
            m_plus: log_m_plus.exp(),
            m_minus: log_m_minus.exp(),
            log_m,
            log_m_plus,
            log_m_minus,
            method,
            err,
        }
    }
}

/// The root route together with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenDetail {
    pub triple: MahlerTriple,
    pub roots: RootSet,
    /// Quadrature error of the `M⁺` integral alone.
    pub quadrature_err: f64,
    /// `|log M − (log|p(0)| − Σ_{|λ|<1} log|λ|)|` when `p(0) ≠ 0`.
    pub h0_residual: Option<f64>,
}

/// `log|p(e^{iθ})|` from the factorization `lead · Π (z − λ)`.
pub fn root_product_evaluator(lead: Complex64, roots: &[Complex64]) -> impl Fn(f64) -> f64 + Sync {
    let log_lead = lead.norm().ln();
    let nonzero: Vec<Complex64> = roots.iter().copied().filter(|r| r.norm() > 0.0).collect();
    move |theta| {
        let z = Complex64::from_polar(1.0, theta);
        log_lead + nonzero.iter().map(|&r| (z - r).norm().ln()).sum::<f64>()
    }
}

/// Angles of roots within [`NEAR_CIRCLE`] of the unit circle.
pub fn near_circle_angles(roots: &[Complex64]) -> Vec<f64> {
    roots
        .iter()
        .filter(|r| (r.norm() - 1.0).abs() <= NEAR_CIRCLE)
        .map(|r| r.arg().rem_euclid(TAU))
        .collect()
}

/// Mahler measures by the root route. `tol` bounds the quadrature error of
/// `log M⁺`.
pub fn jensen_detail(p: &AlgebraicPoly, tol: f64) -> Result<JensenDetail> {
    if p.degree() < 1 {
        return Err(Error::invalid("Jensen route needs degree at least 1"));
    }
    let roots = find_roots(p, ROOT_RESIDUAL_TOL)?;
    let lead = p.leading();
    let log_m = lead.norm().ln()
        + roots
            .roots
            .iter()
            .map(|r| r.norm().ln().max(0.0))
            .sum::<f64>();
    // d log⁺|λ| ≤ δ/|λ| for roots that can reach outside the disk
    let root_err: f64 = roots
        .roots
        .iter()
        .zip(&roots.error_bounds)
        .filter(|(r, e)| r.norm() + **e >= 1.0)
        .map(|(r, e)| e / (r.norm() - e).max(0.5))
        .sum();

    let eval = root_product_evaluator(lead, &roots.roots);
    let means = circle_log_means(
        &eval,
        &near_circle_angles(&roots.roots),
        &QuadratureOptions::new(tol),
    )?;
    let log_m_plus = means.log_plus;
    let err = root_err + means.err_plus;

    let h0_residual = (p.constant().norm() > 0.0).then(|| {
        let inside: f64 = roots
            .roots
            .iter()
            .filter(|r| r.norm() < 1.0)
            .map(|r| r.norm().ln())
            .sum();
        (log_m - (p.constant().norm().ln() - inside)).abs()
    });

    Ok(JensenDetail {
        triple: MahlerTriple::from_logs(
            log_m,
            log_m_plus,
            log_m - log_m_plus.max(0.0),
            Method::Jensen,
            err,
        ),
        roots,
        quadrature_err: means.err_plus,
        h0_residual,
    })
}

pub fn mahler_jensen(p: &AlgebraicPoly, tol: f64) -> Result<MahlerTriple> {
    Ok(jensen_detail(p, tol)?.triple)
}

/// Mahler measures by quadrature of `log_abs(θ) = log|h(e^{iθ})|`.
pub fn mahler_quadrature<F>(
    log_abs: F,
    singular_angles: &[f64],
    options: &QuadratureOptions,
) -> Result<MahlerTriple>
where
    F: Fn(f64) -> f64 + Sync,
{
    let means = circle_log_means(log_abs, singular_angles, options)?;
    Ok(MahlerTriple::from_logs(
        means.log,
        means.log_plus,
        means.log_minus,
        Method::Quadrature,
        means.max_err(),
    ))
}

/// Quadrature route for an algebraic polynomial via Horner evaluation.
pub fn mahler_quadrature_poly(
    p: &AlgebraicPoly,
    options: &QuadratureOptions,
) -> Result<MahlerTriple> {
    mahler_quadrature(|t| p.log_abs_on_circle(t), &[], options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterReport {
    pub outer: bool,
    /// Smallest root modulus; `None` for constants.
    pub min_root_modulus: Option<f64>,
    /// `|∫ log|p| − log|p(0)||`; `None` when `p(0) = 0`.
    pub jensen_residual: Option<f64>,
    pub diagnostic: Option<String>,
}

/// Whether `p` has no roots in the open unit disk (up to `tol`), with the
/// quadrature residual of the outer mean identity.
pub fn is_outer(p: &AlgebraicPoly, tol: f64) -> Result<OuterReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if p.constant().norm() == 0.0 {
        return Ok(OuterReport {
            outer: false,
            min_root_modulus: Some(0.0),
            jensen_residual: None,
            diagnostic: Some(
                "constant coefficient is zero, so the mean of p over the circle vanishes".into(),
            ),
        });
    }
    if p.degree() == 0 {
        return Ok(OuterReport {
            outer: true,
            min_root_modulus: None,
            jensen_residual: Some(0.0),
            diagnostic: None,
        });
    }
    let roots = find_roots(p, ROOT_RESIDUAL_TOL)?;
    let min_mod = roots
        .roots
        .iter()
        .map(|r| r.norm())
        .fold(f64::INFINITY, f64::min);
    let eval = root_product_evaluator(p.leading(), &roots.roots);
    let means = circle_log_means(
        &eval,
        &near_circle_angles(&roots.roots),
        &QuadratureOptions::new(1e-10),
    )?;
    Ok(OuterReport {
        outer: min_mod >= 1.0 - tol,
        min_root_modulus: Some(min_mod),
        jensen_residual: Some((means.log - p.constant().norm().ln()).abs()),
        diagnostic: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    const LOG_MPLUS_ONE_MINUS_Z: f64 = 0.3230659472194505;

    fn lehmer() -> AlgebraicPoly {
        AlgebraicPoly::from_real(&[1.0, 1.0, 0.0, -1.0, -1.0, -1.0, -1.0, -1.0, 0.0, 1.0, 1.0])
            .unwrap()
    }

    fn random_poly(rng: &mut impl Rng) -> AlgebraicPoly {
        let d = rng.gen_range(1..=12);
        let coeffs = (0..=d)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        AlgebraicPoly::new(coeffs).unwrap()
    }

    #[test]
    fn linear_examples() {
        let t = mahler_jensen(&AlgebraicPoly::from_real(&[-2.0, 1.0]).unwrap(), 1e-10).unwrap();
        assert_abs_diff_eq!(t.m, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.m_plus, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(t.m_minus, 1.0, epsilon = 1e-9);

        let c = mahler_quadrature(|_| 2f64.ln(), &[], &QuadratureOptions::default()).unwrap();
        assert_abs_diff_eq!(c.m, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.m_plus, 2.0, epsilon = 1e-14);
        assert_eq!(c.m_minus, 1.0);
    }

    #[test]
    fn one_minus_z() {
        let q = mahler_quadrature(
            |t| (2.0 * (t / 2.0).sin().abs()).ln(),
            &[0.0],
            &QuadratureOptions::new(1e-12),
        )
        .unwrap();
        assert_abs_diff_eq!(q.log_m, 0.0, epsilon = 1e-8);
        let j = mahler_jensen(&AlgebraicPoly::from_real(&[1.0, -1.0]).unwrap(), 1e-12).unwrap();
        assert_abs_diff_eq!(j.log_m, q.log_m, epsilon = 1e-8);
        assert_abs_diff_eq!(j.log_m_plus, LOG_MPLUS_ONE_MINUS_Z, epsilon = 1e-9);
    }

    #[test]
    fn p2_cross_check() {
        let p2 = AlgebraicPoly::from_real(&[1.0, 1.0, 1.0]).unwrap();
        let j = mahler_jensen(&p2, 1e-11).unwrap();
        assert_abs_diff_eq!(j.m, 1.0, epsilon = 1e-12);
        // 2∫_0^{π/2} log(1 + 2cos θ) dθ / 2π, high-precision reference
        assert_abs_diff_eq!(j.log_m_plus, 0.3887478720410917, epsilon = 1e-9);
        let q = mahler_quadrature(
            |t| p2.log_abs_on_circle(t),
            &[TAU / 3.0, 2.0 * TAU / 3.0],
            &QuadratureOptions::new(1e-11),
        )
        .unwrap();
        assert_abs_diff_eq!(q.log_m_plus, j.log_m_plus, epsilon = 1e-9);
    }

    #[test]
    fn cyclotomic_products_have_unit_measure() {
        for n in 1..=12 {
            let d = jensen_detail(&phi_n_poly(n).unwrap(), 1e-9).unwrap();
            assert!(d.triple.log_m.abs() < 1e-9, "N={n}: {}", d.triple.log_m);
            assert!(d.h0_residual.unwrap() < 1e-9);
        }
    }

    #[test]
    fn lehmer_regression() {
        let d = jensen_detail(&lehmer(), 1e-12).unwrap();
        assert_abs_diff_eq!(d.triple.m, 1.1762808182599175, epsilon = 1e-12);
        let tight = jensen_detail(&lehmer(), 1e-13).unwrap();
        assert_abs_diff_eq!(d.triple.m, tight.triple.m, epsilon = 1e-13);
        let q = mahler_quadrature_poly(&lehmer(), &QuadratureOptions::new(1e-11)).unwrap();
        assert_abs_diff_eq!(q.log_m, d.triple.log_m, epsilon = q.err + d.triple.err);
    }

    #[test]
    fn route_agreement_and_triple_invariants() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let p = random_poly(&mut rng);
            let j = mahler_jensen(&p, 1e-10).unwrap();
            let q = mahler_quadrature_poly(&p, &QuadratureOptions::new(1e-10)).unwrap();
            let tol = j.err + q.err + 1e-12;
            assert!(
                (j.log_m - q.log_m).abs() <= tol,
                "{p:?}: {} vs {}",
                j.log_m,
                q.log_m
            );
            assert!((j.log_m_plus - q.log_m_plus).abs() <= tol);
            assert!((j.log_m_minus - q.log_m_minus).abs() <= tol);
            for t in [j, q] {
                assert!(t.m_plus >= 1.0 && t.m_minus <= 1.0);
                assert!((t.log_m - t.log_m_plus - t.log_m_minus).abs() <= 2.0 * t.err + 1e-14);
            }
        }
    }

    #[test]
    fn multiplicativity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let (p, q) = (random_poly(&mut rng), random_poly(&mut rng));
            let a = mahler_jensen(&p, 1e-9).unwrap();
            let b = mahler_jensen(&q, 1e-9).unwrap();
            let c = mahler_jensen(&p.mul(&q), 1e-9).unwrap();
            assert_abs_diff_eq!(
                c.log_m,
                a.log_m + b.log_m,
                epsilon = 1e-9 + a.err + b.err + c.err
            );
        }
    }

    #[test]
    fn outer_examples() {
        let r = is_outer(&AlgebraicPoly::from_real(&[-2.0, 1.0]).unwrap(), 1e-9).unwrap();
        assert!(r.outer);
        assert!(r.jensen_residual.unwrap() < 1e-9);

        let r = is_outer(&AlgebraicPoly::from_real(&[-0.5, 1.0]).unwrap(), 1e-9).unwrap();
        assert!(!r.outer);
        assert_abs_diff_eq!(r.jensen_residual.unwrap(), 2f64.ln(), epsilon = 1e-9);

        let r = is_outer(&AlgebraicPoly::from_real(&[1.0, 1.0, 1.0]).unwrap(), 1e-9).unwrap();
        assert!(r.outer);
        assert!(r.jensen_residual.unwrap() < 1e-9);

        let r = is_outer(&AlgebraicPoly::from_real(&[0.0, 1.0]).unwrap(), 1e-9).unwrap();
        assert!(!r.outer && r.diagnostic.is_some());
        assert!(
            is_outer(&AlgebraicPoly::from_real(&[3.0]).unwrap(), 1e-9)
                .unwrap()
                .outer
        );
    }

    #[test]
    fn triple_serializes_method_in_lowercase() {
        let t = MahlerTriple::from_logs(0.0, 0.1, -0.1, Method::Sampling, 0.0);
        let v = serde_json::to_value(t).unwrap();
        assert_eq!(v["method"], "sampling");
    }
}
