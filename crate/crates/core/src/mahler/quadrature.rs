//! Adaptive Gauss–Kronrod 7-15 quadrature of `log|h|`, `log⁺|h|` and
//! `log⁻|h|` over one period of the circle.
//!
//! All nodes are interior, so zeros of `h` placed at panel endpoints are never
//! evaluated. Initial panels are cut at every singular angle and graded
//! geometrically toward it down to [`MIN_GRADED_WIDTH`]; afterwards the worst
//! panels are bisected in fixed-size batches, never below that width. The batch schedule depends only
//! on the error estimates, so the result does not depend on thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::pairwise_sum;

pub const MIN_GRADED_WIDTH: f64 = 1e-12;
const GRADING: f64 = 0.25;
const BASE_PANELS: usize = 16;
const BATCH: usize = 256;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights at `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Absolute tolerance on each of the three circle means.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            tol: 1e-10,
            max_panels: 2_000_000,
        }
    }
}

impl QuadratureOptions {
    pub fn new(tol: f64) -> Self {
        QuadratureOptions {
            tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        if self.max_panels < BASE_PANELS {
            return Err(Error::invalid(format!(
                "panel budget must be at least {BASE_PANELS}"
            )));
        }
        Ok(())
    }
}

/// Means over the circle of `log|h|`, `log⁺|h|` and `log⁻|h|`, with error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleMeans {
    pub log: f64,
    pub log_plus: f64,
    pub log_minus: f64,
    pub err_log: f64,
    pub err_plus: f64,
    pub err_minus: f64,
    pub panels: usize,
}

impl CircleMeans {
    pub fn max_err(&self) -> f64 {
        self.err_log.max(self.err_plus).max(self.err_minus)
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    kronrod: [f64; 3],
    err: [f64; 3],
}

impl Panel {
    fn key(&self) -> f64 {
        self.err[0].max(self.err[1]).max(self.err[2])
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key()
            .total_cmp(&other.key())
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Panels for `[a, b]`, cut at every detected crossing of `log|h| = 0` so that
/// `log⁺` and `log⁻` are smooth on each piece.
fn make_panels<F: Fn(f64) -> f64>(eval: &F, a: f64, b: f64) -> Result<Vec<Panel>> {
    let mut out = Vec::new();
    let mut stack = vec![(a, b, 0u32)];
    while let Some((a, b, depth)) = stack.pop() {
        let (panel, nodes) = eval_panel(eval, a, b)?;
        let crossing = (depth < 8 && b - a > 1e-13)
            .then(|| nodes.windows(2).find(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0)))
            .flatten();
        match crossing {
            Some(w) => {
                let k = bisect_crossing(eval, w[0], w[1]);
                // a kink within 1e-13 of an end moves the integral negligibly
                if k - a >= 1e-13 && b - k >= 1e-13 {
                    stack.push((k, b, depth + 1));
                    stack.push((a, k, depth + 1));
                } else {
                    out.push(panel);
                }
            }
            None => out.push(panel),
        }
    }
    Ok(out)
}

/// Point between two nodes where `log|h|` changes sign.
fn bisect_crossing<F: Fn(f64) -> f64>(eval: &F, lo: (f64, f64), hi: (f64, f64)) -> f64 {
    let (mut x0, mut x1) = (lo.0, hi.0);
    let positive_left = lo.1 > 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (x0 + x1);
        if !(mid > x0 && mid < x1) {
            break;
        }
        if (eval(mid) > 0.0) == positive_left {
            x0 = mid;
        } else {
            x1 = mid;
        }
    }
    0.5 * (x0 + x1)
}

/// GK15 panel and its node values in ascending order.
fn eval_panel<F: Fn(f64) -> f64>(eval: &F, a: f64, b: f64) -> Result<(Panel, Vec<(f64, f64)>)> {
    let mut nodes = Vec::with_capacity(15);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; 3];
    let mut g = [0.0; 3];
    let mut add = |x: f64, wk: f64, wg: f64| -> Result<()> {
        let v = eval(x);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::invalid(format!(
                "circle evaluator returned {v} at θ = {x}"
            )));
        }
        if v == f64::NEG_INFINITY {
            return Err(Error::invalid(format!(
                "circle evaluator hit a zero at θ = {x}; list it as a singular angle"
            )));
        }
        nodes.push((x, v));
        let parts = [v, v.max(0.0), v.min(0.0)];
        for i in 0..3 {
            k[i] += wk * parts[i];
            g[i] += wg * parts[i];
        }
        Ok(())
    };
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        add(c - h * XGK[j], WGK[j], wg)?;
        add(c + h * XGK[j], WGK[j], wg)?;
    }
    add(c, WGK[7], WG[3])?;
    let mut err = [0.0; 3];
    for i in 0..3 {
        k[i] *= h;
        g[i] *= h;
        err[i] = (k[i] - g[i]).abs();
    }
    nodes.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok((
        Panel {
            a,
            b,
            kronrod: k,
            err,
        },
        nodes,
    ))
}

/// Sorted distinct singular angles reduced to `[0, 2π)`.
fn reduce_angles(singular: &[f64]) -> Result<Vec<f64>> {
    let mut s: Vec<f64> = Vec::with_capacity(singular.len());
    for &t in singular {
        if !t.is_finite() {
            return Err(Error::invalid("singular angles must be finite"));
        }
        let r = t.rem_euclid(TAU);
        s.push(if r >= TAU { 0.0 } else { r });
    }
    s.sort_by(f64::total_cmp);
    s.dedup_by(|b, a| (*b - *a).abs() <= 4.0 * f64::EPSILON);
    if s.len() > 1 && TAU - s[s.len() - 1] + s[0] <= 4.0 * f64::EPSILON * TAU {
        s.pop();
    }
    Ok(s)
}

/// Initial breakpoints covering one period, graded toward each singular angle.
fn initial_breakpoints(singular: &[f64]) -> Vec<f64> {
    if singular.is_empty() {
        return (0..=BASE_PANELS)
            .map(|i| TAU * i as f64 / BASE_PANELS as f64)
            .collect();
    }
    let start = singular[0];
    let mut points = Vec::new();
    for i in 0..singular.len() {
        let lo = singular[i];
        let hi = if i + 1 < singular.len() {
            singular[i + 1]
        } else {
            start + TAU
        };
        let half = 0.5 * (hi - lo);
        let mut offsets = Vec::new();
        let mut w = half * GRADING;
        while w >= MIN_GRADED_WIDTH {
            offsets.push(w);
            w *= GRADING;
        }
        points.push(lo);
        points.extend(offsets.iter().rev().map(|o| lo + o));
        points.push(lo + half);
        points.extend(offsets.iter().map(|o| hi - o));
    }
    points.push(start + TAU);
    points.dedup();
    points
}

/// Circle means of `log|h|`, `log⁺|h|`, `log⁻|h|`, where `log_abs(θ)` returns
/// `log|h(e^{iθ})|` and `singular` lists the known zeros of `h` on the circle.
pub fn circle_log_means<F>(
    log_abs: F,
    singular: &[f64],
    options: &QuadratureOptions,
) -> Result<CircleMeans>
where
    F: Fn(f64) -> f64 + Sync,
{
    options.validate()?;
    let singular = reduce_angles(singular)?;
    let points = initial_breakpoints(&singular);
    let initial: Vec<Panel> = points
        .par_windows(2)
        .map(|w| make_panels(&log_abs, w[0], w[1]))
        .collect::<Result<Vec<_>>>()?
        .concat();
    if initial.len() > options.max_panels {
        let count = initial.len();
        let means = finish(initial.into_iter().collect(), Vec::new());
        return Err(Error::Accuracy {
            tol: options.tol,
            panels: count,
            estimate: means.log,
            error: means.max_err(),
        });
    }

    let target = options.tol * TAU;
    let mut heap: BinaryHeap<Panel> = initial.into_iter().collect();
    let mut frozen: Vec<Panel> = Vec::new();
    let total_key = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let keys: Vec<f64> = heap.iter().chain(frozen).map(Panel::key).collect();
        pairwise_sum(&keys)
    };

    loop {
        let total = total_key(&heap, &frozen);
        if total <= target {
            break;
        }
        let count = heap.len() + frozen.len();
        let frozen_err = pairwise_sum(&frozen.iter().map(Panel::key).collect::<Vec<_>>());
        if heap.is_empty()
            || frozen_err > target
            || count + 2 * batch_size(heap.len()) > options.max_panels
        {
            let means = finish(heap, frozen);
            return Err(Error::Accuracy {
                tol: options.tol,
                panels: count,
                estimate: means.log,
                error: means.max_err(),
            });
        }
        let batch = batch_size(heap.len());
        let mut remaining = total;
        let mut split = Vec::with_capacity(2 * batch);
        while split.len() < 2 * batch && remaining > 0.5 * target {
            let Some(p) = heap.pop() else { break };
            let mid = 0.5 * (p.a + p.b);
            if !(mid > p.a && mid < p.b) || p.b - p.a < MIN_GRADED_WIDTH {
                frozen.push(p);
                continue;
            }
            remaining -= p.key();
            split.push((p.a, mid));
            split.push((mid, p.b));
        }
        let halves: Vec<Panel> = split
            .par_iter()
            .map(|&(a, b)| make_panels(&log_abs, a, b))
            .collect::<Result<Vec<_>>>()?
            .concat();
        heap.extend(halves);
    }
    Ok(finish(heap, frozen))
}

/// Panels bisected per round: a fixed fraction of the live panels.
fn batch_size(live: usize) -> usize {
    BATCH.max(live / 16)
}

fn finish(heap: BinaryHeap<Panel>, frozen: Vec<Panel>) -> CircleMeans {
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let column = |f: &dyn Fn(&Panel) -> f64| {
        let v: Vec<f64> = panels.iter().map(f).collect();
        pairwise_sum(&v) / TAU
    };
    CircleMeans {
        log: column(&|p| p.kronrod[0]),
        log_plus: column(&|p| p.kronrod[1]),
        log_minus: column(&|p| p.kronrod[2]),
        err_log: column(&|p| p.err[0]),
        err_plus: column(&|p| p.err[1]),
        err_minus: column(&|p| p.err[2]),
        panels: panels.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_sin(t: f64) -> f64 {
        (2.0 * (0.5 * t).sin().abs()).ln()
    }

    #[test]
    fn constant() {
        let m = circle_log_means(|_| 2f64.ln(), &[], &QuadratureOptions::default()).unwrap();
        assert_abs_diff_eq!(m.log, 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.log_plus, 2f64.ln(), epsilon = 1e-15);
        assert_eq!(m.log_minus, 0.0);
    }

    #[test]
    fn one_minus_z_has_zero_log_mean() {
        let m = circle_log_means(two_sin, &[0.0], &QuadratureOptions::new(1e-12)).unwrap();
        assert_abs_diff_eq!(m.log, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.log_plus, 0.3230659472194505, epsilon = 1e-10);
        assert_abs_diff_eq!(m.log_plus + m.log_minus, m.log, epsilon = 1e-14);
        assert!(m.err_log <= 1e-12);
    }

    #[test]
    fn singular_angles_are_reduced() {
        let a = circle_log_means(two_sin, &[0.0], &QuadratureOptions::new(1e-11)).unwrap();
        let b =
            circle_log_means(two_sin, &[TAU, -TAU, 0.0], &QuadratureOptions::new(1e-11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_singular_angle_still_converges() {
        // the adaptive phase finds the log singularity by itself
        let m = circle_log_means(|t| two_sin(t - 1.0), &[], &QuadratureOptions::new(1e-9)).unwrap();
        assert_abs_diff_eq!(m.log, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn budget_exhaustion_reports_accuracy_error() {
        let opts = QuadratureOptions {
            tol: 1e-15,
            max_panels: 20,
        };
        let err = circle_log_means(|t| two_sin(t - 1.0), &[], &opts).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn zero_on_a_node_is_reported() {
        let err = circle_log_means(|_| f64::NEG_INFINITY, &[], &QuadratureOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }
}
