//! All roots of a complex polynomial by Aberth–Ehrlich simultaneous iteration.
//!
//! Multiple roots converge only linearly and finish as a ring of approximations
//! with radius about `ε^{1/m}`. After the main iteration, groups of approximations
//! whose uncertainty discs overlap are tested as one `m`-fold root: the centre
//! is refined by Newton's method on `p^{(m-1)}`, where the root is simple, and
//! accepted when the Taylor coefficients of orders `0..m` all vanish to
//! rounding level.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trigpoly::AlgebraicPoly;

const MAX_ITERATIONS: usize = 500;

/// Roots with a residual certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    /// `deg p` roots, repeated by multiplicity.
    pub roots: Vec<Complex64>,
    /// Per-root absolute error estimate.
    pub error_bounds: Vec<f64>,
    /// `max |p(λ)| / Σ|c_k||λ|^k` over the roots.
    pub max_residual: f64,
    pub iterations: usize,
    /// Roots recognised as multiple: `(root, multiplicity)`.
    pub multiple: Vec<(Complex64, usize)>,
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `(p(z), p'(z))` by Horner.
#[inline]
fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = czero();
    let mut dp = czero();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn scale_at(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Coefficients of `p^{(j)}(z) / j!`.
fn taylor_coeffs(coeffs: &[Complex64], j: usize) -> Vec<Complex64> {
    (j..coeffs.len())
        .map(|k| coeffs[k] * binomial(k, j))
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(czero(), |acc, &c| acc * z + c)
}

fn initial_guesses(monic: &[Complex64]) -> Vec<Complex64> {
    let d = monic.len() - 1;
    let radius = monic[0].norm().powf(1.0 / d as f64).max(f64::MIN_POSITIVE);
    (0..d)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / d as f64 + 0.4;
            let wobble = 1.0 + 0.01 * (k % 3) as f64;
            Complex64::from_polar(radius * wobble, angle)
        })
        .collect()
}

/// Aberth–Ehrlich iteration in Gauss–Seidel form. Returns the iterates, the
/// final corrections and the iteration count.
fn aberth(monic: &[Complex64]) -> (Vec<Complex64>, Vec<f64>, usize) {
    let d = monic.len() - 1;
    let mut z = initial_guesses(monic);
    let mut corrections = vec![f64::INFINITY; d];
    let floor = 16.0 * d as f64 * f64::EPSILON;
    let mut iterations = 0;
    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let mut max_rel = 0.0f64;
        let mut at_floor = true;
        for i in 0..d {
            let (p, dp) = eval_with_derivative(monic, z[i]);
            if p.norm() > floor * scale_at(monic, z[i]) {
                at_floor = false;
            }
            if p == czero() {
                corrections[i] = 0.0;
                continue;
            }
            let newton = if dp == czero() {
                // stationary point: push off with a unit-scale step
                Complex64::from_polar(1e-3 * (1.0 + z[i].norm()), i as f64)
            } else {
                p / dp
            };
            let repulsion: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| {
                    let diff = z[i] - z[j];
                    if diff == czero() {
                        czero()
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let w = if denom == czero() {
                newton
            } else {
                newton / denom
            };
            if w.re.is_finite() && w.im.is_finite() {
                z[i] -= w;
                corrections[i] = w.norm();
                max_rel = max_rel.max(w.norm() / z[i].norm().max(1.0));
            }
        }
        if max_rel <= 4.0 * f64::EPSILON || at_floor {
            break;
        }
    }
    (z, corrections, iterations)
}

/// Connected components of roots whose uncertainty discs overlap.
fn uncertainty_groups(monic: &[Complex64], z: &[Complex64]) -> Vec<Vec<usize>> {
    let d = monic.len() - 1;
    let radius: Vec<f64> = z
        .iter()
        .map(|&zi| {
            let (p, dp) = eval_with_derivative(monic, zi);
            if dp == czero() {
                f64::INFINITY
            } else {
                // evaluation rounding widens the disc around clustered roots
                let noise = 2.0 * d as f64 * f64::EPSILON * scale_at(monic, zi);
                d as f64 * (p.norm() + noise) / dp.norm()
            }
        })
        .collect();
    let mut parent: Vec<usize> = (0..z.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            if (z[i] - z[j]).norm() <= radius[i] + radius[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; z.len()];
    for i in 0..z.len() {
        let r = find(&mut parent, i);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of_root[r]].push(i);
    }
    groups
}

/// Tries to certify `members` as one root of multiplicity `members.len()`.
/// Returns the refined centre and the size of the last Newton step.
fn certify_multiple(
    monic: &[Complex64],
    z: &[Complex64],
    members: &[usize],
) -> Option<(Complex64, f64)> {
    let m = members.len();
    let mut c = members.iter().map(|&i| z[i]).sum::<Complex64>() / m as f64;
    let high = taylor_coeffs(monic, m - 1);
    let mut step = f64::INFINITY;
    for _ in 0..60 {
        let (p, dp) = eval_with_derivative(&high, c);
        if p == czero() {
            step = 0.0;
            break;
        }
        if dp == czero() {
            return None;
        }
        let w = p / dp;
        c -= w;
        step = w.norm();
        if step <= 2.0 * f64::EPSILON * c.norm().max(1.0) {
            break;
        }
    }
    if !(c.re.is_finite() && c.im.is_finite()) {
        return None;
    }
    let d = monic.len() - 1;
    let threshold = 1e3 * d as f64 * f64::EPSILON;
    for j in 0..m {
        let t = taylor_coeffs(monic, j);
        if horner(&t, c).norm() > threshold * scale_at(&t, c) {
            return None;
        }
    }
    Some((c, step))
}

/// All roots of `p`, each with `|p(λ)| ≤ tol · Σ|c_k||λ|^k`.
pub fn find_roots(p: &AlgebraicPoly, tol: f64) -> Result<RootSet> {
    if p.degree() < 1 {
        return Err(Error::invalid("root finding needs degree at least 1"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let coeffs = p.coeffs();
    let zeros = coeffs.iter().take_while(|c| **c == czero()).count();
    let mut roots = vec![czero(); zeros];
    let mut error_bounds = vec![0.0; zeros];
    let mut multiple = Vec::new();
    if zeros > 1 {
        multiple.push((czero(), zeros));
    }
    let reduced = &coeffs[zeros..];
    let lead = reduced[reduced.len() - 1];
    let monic: Vec<Complex64> = reduced.iter().map(|&c| c / lead).collect();
    let d = monic.len() - 1;
    let mut iterations = 0;

    if d == 1 {
        roots.push(-monic[0]);
        error_bounds.push(f64::EPSILON * monic[0].norm());
    } else if d > 1 {
        let (mut z, corrections, its) = aberth(&monic);
        iterations = its;
        let mut bounds: Vec<f64> = corrections
            .iter()
            .zip(&z)
            .map(|(&w, zi)| 2.0 * w + 4.0 * f64::EPSILON * zi.norm())
            .collect();
        for group in uncertainty_groups(&monic, &z) {
            if group.len() < 2 {
                continue;
            }
            if let Some((c, step)) = certify_multiple(&monic, &z, &group) {
                for &i in &group {
                    z[i] = c;
                    bounds[i] = 2.0 * step + 4.0 * f64::EPSILON * c.norm();
                }
                multiple.push((c, group.len()));
            }
        }
        roots.extend(z);
        error_bounds.extend(bounds);
    }

    let max_residual = roots
        .iter()
        .map(|&r| p.eval(r).norm() / p.eval_scale(r).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    if !(max_residual <= tol) {
        return Err(Error::Convergence {
            iterations,
            max_residual,
            best: roots,
        });
    }
    Ok(RootSet {
        roots,
        error_bounds,
        max_residual,
        iterations,
        multiple,
    })
}
