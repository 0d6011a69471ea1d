//! Trigonometric polynomials `f(x) = Σ a_ω e^{iωx}` with real frequencies, and
//! algebraic polynomials in one complex variable.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One term `a · e^{iωx}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub omega: f64,
    pub coeff: Complex64,
}

/// A finite exponential sum with strictly increasing frequencies and nonzero
/// coefficients.
///
/// The empty sum is the zero polynomial. It can be built and carried around
/// (derivatives of constants produce it) but every analysis entry point
/// rejects it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPoly {
    terms: Vec<Term>,
}

impl TrigPoly {
    /// Builds a polynomial from `(frequency, coefficient)` pairs.
    ///
    /// Terms are sorted by frequency. Terms sharing a frequency (exact `==`)
    /// are summed, and zero coefficients are dropped afterwards.
    pub fn new<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, Complex64)>,
    {
        let mut raw: Vec<Term> = Vec::new();
        for (omega, coeff) in terms {
            if !omega.is_finite() {
                return Err(Error::invalid(format!("non-finite frequency {omega}")));
            }
            if !(coeff.re.is_finite() && coeff.im.is_finite()) {
                return Err(Error::invalid(format!("non-finite coefficient {coeff}")));
            }
            // -0.0 and 0.0 compare equal; store the positive one.
            let omega = if omega == 0.0 { 0.0 } else { omega };
            raw.push(Term { omega, coeff });
        }
        raw.sort_by(|a, b| a.omega.total_cmp(&b.omega));

        let mut merged: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match merged.last_mut() {
                Some(last) if last.omega == t.omega => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
        Ok(TrigPoly { terms: merged })
    }

    /// Real-coefficient shorthand for [`TrigPoly::new`].
    pub fn from_real<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        Self::new(terms.into_iter().map(|(w, a)| (w, Complex64::new(a, 0.0))))
    }

    /// `Σ_k c_k e^{ikx}`, the restriction of `Σ c_k z^k` to the unit circle.
    pub fn from_integer_coeffs(coeffs: &[Complex64]) -> Result<Self> {
        Self::new(coeffs.iter().enumerate().map(|(k, &c)| (k as f64, c)))
    }

    pub fn zero() -> Self {
        TrigPoly { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn ensure_nonzero(&self) -> Result<()> {
        if self.is_zero() {
            Err(Error::invalid(
                "the zero polynomial is not a valid argument",
            ))
        } else {
            Ok(())
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<Complex64> {
        self.ensure_nonzero()?;
        Ok(self.value_at(x))
    }

    /// Unchecked evaluation; the zero polynomial evaluates to 0.
    #[inline]
    pub(crate) fn value_at(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeff * Complex64::cis(t.omega * x))
            .sum()
    }

    /// The `order`-th derivative. Constant terms vanish, so the derivative of a
    /// constant is the zero polynomial.
    pub fn derivative(&self, order: u32) -> Result<TrigPoly> {
        if order == 0 {
            return Err(Error::invalid("derivative order must be at least 1"));
        }
        let terms = self
            .terms
            .iter()
            .filter(|t| t.omega != 0.0)
            .map(|t| Term {
                omega: t.omega,
                coeff: t.coeff * Complex64::new(0.0, t.omega).powu(order),
            })
            .filter(|t| t.coeff != Complex64::new(0.0, 0.0))
            .collect();
        Ok(TrigPoly { terms })
    }

    /// `H_f = max |a_ω|`.
    pub fn height(&self) -> Result<f64> {
        self.ensure_nonzero()?;
        Ok(self
            .terms
            .iter()
            .map(|t| t.coeff.norm())
            .fold(0.0, f64::max))
    }

    /// `b(f) = max Ω(f) − min Ω(f)`.
    pub fn bandwidth(&self) -> Result<f64> {
        self.ensure_nonzero()?;
        Ok(self.terms[self.terms.len() - 1].omega - self.terms[0].omega)
    }

    pub fn spectrum(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.omega).collect()
    }

    /// `Σ |a_ω|`, an upper bound for `sup |f|`.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    /// `χ_ω · f`.
    pub fn modulate(&self, omega: f64) -> Result<TrigPoly> {
        Self::new(self.terms.iter().map(|t| (t.omega + omega, t.coeff)))
    }

    /// `x ↦ f(a x)` for `a ≠ 0`.
    pub fn dilate(&self, a: f64) -> Result<TrigPoly> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::invalid("dilation factor must be finite and nonzero"));
        }
        Self::new(self.terms.iter().map(|t| (t.omega * a, t.coeff)))
    }

    /// `c · f`.
    pub fn scale(&self, c: Complex64) -> Result<TrigPoly> {
        Self::new(self.terms.iter().map(|t| (t.omega, t.coeff * c)))
    }

    /// Moves the spectrum onto `[0, 1]` with both endpoints occupied.
    ///
    /// The result is `h(x) = e^{i·modulation·x/scale} f(x/scale)` with
    /// `scale = b(f)` and `modulation = −min Ω(f)`, so `|h(scale·x)| = |f(x)|`.
    pub fn normalize(&self) -> Result<Normalized> {
        self.ensure_nonzero()?;
        let scale = self.bandwidth()?;
        if scale == 0.0 {
            return Err(Error::NotNormalizable);
        }
        let lowest = self.terms[0].omega;
        let poly = Self::new(
            self.terms
                .iter()
                .map(|t| ((t.omega - lowest) / scale, t.coeff)),
        )?;
        let modulation = if lowest == 0.0 { 0.0 } else { -lowest };
        Ok(Normalized {
            poly,
            modulation,
            scale,
        })
    }
}

/// Output of [`TrigPoly::normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub poly: TrigPoly,
    /// Frequency shift applied before rescaling, in the original units.
    pub modulation: f64,
    /// The original bandwidth; the argument was divided by it.
    pub scale: f64,
}

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})·χ[{}]", t.coeff, t.omega)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    omega: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TrigPolyRepr {
    terms: Vec<TermRepr>,
}

impl Serialize for TrigPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TrigPolyRepr {
            terms: self
                .terms
                .iter()
                .map(|t| TermRepr {
                    omega: t.omega,
                    re: t.coeff.re,
                    im: t.coeff.im,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TrigPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = TrigPolyRepr::deserialize(deserializer)?;
        TrigPoly::new(
            repr.terms
                .into_iter()
                .map(|t| (t.omega, Complex64::new(t.re, t.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// `Σ c_k z^k` with a nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct AlgebraicPoly {
    coeffs: Vec<Complex64>,
}

impl TryFrom<Vec<Complex64>> for AlgebraicPoly {
    type Error = Error;

    fn try_from(coeffs: Vec<Complex64>) -> Result<Self> {
        AlgebraicPoly::new(coeffs)
    }
}

impl From<AlgebraicPoly> for Vec<Complex64> {
    fn from(p: AlgebraicPoly) -> Self {
        p.coeffs
    }
}

impl AlgebraicPoly {
    /// Coefficients in ascending powers. Trailing zeros are trimmed; an all-zero
    /// input is rejected.
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::invalid("non-finite polynomial coefficient"));
        }
        while coeffs
            .last()
            .is_some_and(|c| *c == Complex64::new(0.0, 0.0))
        {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::invalid("polynomial is identically zero"));
        }
        Ok(AlgebraicPoly { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn constant(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Maximum coefficient modulus.
    pub fn height(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Number of nonzero coefficients.
    pub fn term_count(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|c| **c != Complex64::new(0.0, 0.0))
            .count()
    }

    /// Horner evaluation.
    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `Σ |c_k| |z|^k`, the natural scale for rounding errors of [`eval`](Self::eval).
    pub fn eval_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// `log |p(e^{iθ})|`.
    pub fn log_abs_on_circle(&self, theta: f64) -> f64 {
        self.eval(Complex64::cis(theta)).norm().ln()
    }

    pub fn derivative(&self) -> Option<AlgebraicPoly> {
        if self.coeffs.len() < 2 {
            return None;
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, &c)| c * (k + 1) as f64)
            .collect();
        AlgebraicPoly::new(coeffs).ok()
    }

    pub fn mul(&self, other: &AlgebraicPoly) -> AlgebraicPoly {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        AlgebraicPoly { coeffs: out }
    }

    /// `θ ↦ p(e^{iθ})` as a trigonometric polynomial with integer frequencies.
    pub fn to_trig_poly(&self) -> TrigPoly {
        // Coefficients are finite, so construction cannot fail.
        TrigPoly::from_integer_coeffs(&self.coeffs).expect("finite coefficients")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_minus_chi1() -> TrigPoly {
        TrigPoly::from_real([(0.0, 1.0), (1.0, -1.0)]).unwrap()
    }

    #[test]
    fn evaluate_constant() {
        let f = TrigPoly::from_real([(0.0, 1.0)]).unwrap();
        assert_eq!(f.evaluate(17.3).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn evaluate_two_term() {
        let f = one_minus_chi1();
        let v = f.evaluate(PI).unwrap();
        assert_relative_eq!(v.re, 2.0, epsilon = 1e-15);
        assert!(v.im.abs() < 1e-15);
        // |1 - e^{ix}| = 2|sin(x/2)|
        let v = f.evaluate(PI / 3.0).unwrap();
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        let z = TrigPoly::zero();
        assert!(matches!(z.evaluate(0.0), Err(Error::InvalidInput(_))));
        assert!(z.height().is_err());
        assert!(z.bandwidth().is_err());
        assert!(z.normalize().is_err());
    }

    #[test]
    fn construction_merges_and_drops() {
        let f = TrigPoly::from_real([(1.0, 2.0), (0.0, 1.0), (1.0, -2.0), (3.0, 0.0)]).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.terms()[0].omega, 0.0);
        assert!(TrigPoly::from_real([(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn derivative_examples() {
        let d = one_minus_chi1().derivative(1).unwrap();
        assert_eq!(
            d.terms(),
            &[Term {
                omega: 1.0,
                coeff: c(0.0, -1.0)
            }]
        );

        let d = TrigPoly::from_real([(2.0, 1.0)])
            .unwrap()
            .derivative(2)
            .unwrap();
        assert_eq!(
            d.terms(),
            &[Term {
                omega: 2.0,
                coeff: c(-4.0, 0.0)
            }]
        );

        let d = TrigPoly::from_real([(0.0, 3.0)])
            .unwrap()
            .derivative(1)
            .unwrap();
        assert!(d.is_zero());
        assert!(one_minus_chi1().derivative(0).is_err());
    }

    #[test]
    fn height_and_bandwidth() {
        assert_eq!(one_minus_chi1().height().unwrap(), 1.0);
        let f = TrigPoly::from_real([(0.0, 0.5), (1.0, 2.0), (3.0, -1.0)]).unwrap();
        assert_eq!(f.height().unwrap(), 2.0);
        let q2 = TrigPoly::from_real([(0.0, 0.5), (1.0, 1.0), (2.0, 0.5)]).unwrap();
        assert_eq!(q2.height().unwrap(), 1.0);

        assert_eq!(
            TrigPoly::from_real([(0.0, 1.0)])
                .unwrap()
                .bandwidth()
                .unwrap(),
            0.0
        );
        assert_eq!(one_minus_chi1().bandwidth().unwrap(), 1.0);
        let g = TrigPoly::from_real([(-3.0, 1.0), (5.0, 1.0)]).unwrap();
        assert_eq!(g.bandwidth().unwrap(), 8.0);
    }

    #[test]
    fn normalize_examples() {
        let n = one_minus_chi1().normalize().unwrap();
        assert_eq!(n.poly, one_minus_chi1());
        assert_eq!((n.modulation, n.scale), (0.0, 1.0));
        assert!(n.modulation.is_sign_positive());

        let unit_pair = TrigPoly::from_real([(0.0, 1.0), (1.0, 1.0)]).unwrap();
        let n = TrigPoly::from_real([(2.0, 1.0), (4.0, 1.0)])
            .unwrap()
            .normalize()
            .unwrap();
        assert_eq!(n.poly, unit_pair);
        assert_eq!((n.modulation, n.scale), (-2.0, 2.0));

        let n = TrigPoly::from_real([(-1.0, 1.0), (1.0, 1.0)])
            .unwrap()
            .normalize()
            .unwrap();
        assert_eq!(n.poly, unit_pair);
        assert_eq!((n.modulation, n.scale), (1.0, 2.0));

        assert_eq!(
            TrigPoly::from_real([(0.0, 2.0)]).unwrap().normalize(),
            Err(Error::NotNormalizable)
        );
    }

    #[test]
    fn json_schema() {
        let f = one_minus_chi1();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"terms":[{"omega":0.0,"re":1.0,"im":0.0},{"omega":1.0,"re":-1.0,"im":0.0}]}"#
        );
        let back: TrigPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let unsorted: TrigPoly = serde_json::from_str(
            r#"{"terms":[{"omega":2,"re":1,"im":0},{"omega":-1,"re":0,"im":1}]}"#,
        )
        .unwrap();
        assert_eq!(unsorted.spectrum(), vec![-1.0, 2.0]);
    }

    #[test]
    fn algebraic_basics() {
        let p = AlgebraicPoly::from_real(&[1.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(c(1.0, 0.0)), c(3.0, 0.0));
        let d = p.derivative().unwrap();
        assert_eq!(d.coeffs(), &[c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(AlgebraicPoly::from_real(&[0.0, 0.0]).is_err());
        let sq = p.mul(&p);
        assert_eq!(sq.degree(), 4);
        assert_eq!(sq.eval(c(1.0, 0.0)), c(9.0, 0.0));
        let t = p.to_trig_poly();
        let z = Complex64::cis(0.7);
        assert!((t.evaluate(0.7).unwrap() - p.eval(z)).norm() < 1e-14);
    }

    fn arb_poly() -> impl Strategy<Value = TrigPoly> {
        prop::collection::vec((-4.0f64..4.0, 0.0f64..2.0, 0.0f64..(2.0 * PI)), 1..=8).prop_map(
            |terms| {
                TrigPoly::new(
                    terms
                        .into_iter()
                        .map(|(w, r, ph)| (w, Complex64::from_polar(r, ph))),
                )
                .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(f in arb_poly(), x in -20.0f64..20.0) {
            prop_assume!(!f.is_zero());
            let h = 1e-5;
            let fd = (f.value_at(x + h) - f.value_at(x - h)) / (2.0 * h);
            let d = f.derivative(1).unwrap().value_at(x);
            let scale = d.norm().max(f.l1_norm() * 1e-3).max(1e-3);
            prop_assert!((fd - d).norm() / scale <= 1e-6, "fd {} vs {}", fd, d);
        }

        #[test]
        fn normalize_preserves_height_and_modulus(f in arb_poly(), x in -10.0f64..10.0) {
            prop_assume!(f.len() >= 2);
            let n = f.normalize().unwrap();
            prop_assert_eq!(n.poly.height().unwrap(), f.height().unwrap());
            prop_assert_eq!(n.poly.bandwidth().unwrap(), 1.0);
            let lhs = n.poly.value_at(x * n.scale).norm();
            let rhs = f.value_at(x).norm();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + f.l1_norm()));
        }
    }
}
