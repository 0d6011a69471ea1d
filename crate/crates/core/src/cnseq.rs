//! The constant sequence of the sublevel bound,
//!
//! ```text
//! C_1 = 1/2,
//! C_n = C_{n-1}^{1-1/n} · [a (n-1)]^{1/n} · n/(n-1),   a = 3√2/π.
//! ```
//!
//! Multiplying the log form by `n` turns the recurrence into a plain sum,
//! `n·log C_n = (n-1)·log C_{n-1} + log(a(n-1)) + n·log(n/(n-1))`, which is
//! accumulated with Neumaier compensation in O(1) memory.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

/// `3√2/π`, the interval-density constant of the bound.
pub const THREE_SQRT2_OVER_PI: f64 = 3.0 * SQRT_2 / PI;

/// Recurrence with a configurable prefactor `a`; [`Default`] uses `3√2/π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnRecurrence {
    prefactor: f64,
}

impl Default for CnRecurrence {
    fn default() -> Self {
        CnRecurrence {
            prefactor: THREE_SQRT2_OVER_PI,
        }
    }
}

/// Checkpointed output of one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnSeries {
    pub n_checkpoints: Vec<u64>,
    /// `log C_n`.
    pub log_cn: Vec<f64>,
    /// `C_n / n`.
    pub ratio: Vec<f64>,
    /// Bound on the absolute rounding error of `ratio`, from the magnitude of
    /// the summed terms.
    pub ratio_error_bound: Vec<f64>,
    /// Neumaier residue divided by `n` (the part of `log C_n` a naive sum loses).
    pub compensation: Vec<f64>,
}

impl CnSeries {
    pub fn final_ratio(&self) -> f64 {
        *self
            .ratio
            .last()
            .expect("series has at least two checkpoints")
    }
}

impl CnRecurrence {
    pub fn with_prefactor(prefactor: f64) -> Result<Self> {
        if !(prefactor.is_finite() && prefactor > 0.0) {
            return Err(Error::invalid("prefactor must be positive"));
        }
        Ok(CnRecurrence { prefactor })
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    #[inline]
    fn term(&self, log_prefactor: f64, k: u64) -> f64 {
        let km1 = (k - 1) as f64;
        log_prefactor + km1.ln() + k as f64 * (1.0 / km1).ln_1p()
    }

    /// `log C_n`.
    pub fn log_cn(&self, n: u64) -> Result<f64> {
        if n < 1 {
            return Err(Error::invalid("C_n is defined for n ≥ 1"));
        }
        let log_a = self.prefactor.ln();
        let mut acc = NeumaierSum::new(0.5f64.ln());
        for k in 2..=n {
            acc += self.term(log_a, k);
        }
        Ok(acc.value() / n as f64)
    }

    /// One pass to `n_max`, recording `checkpoints` geometrically spaced values
    /// of `n` from 1 to `n_max` inclusive.
    pub fn series(&self, n_max: u64, checkpoints: usize) -> Result<CnSeries> {
        if n_max < 10 {
            return Err(Error::invalid("n_max must be at least 10"));
        }
        if checkpoints < 2 {
            return Err(Error::invalid("at least two checkpoints are required"));
        }
        let marks = geometric_checkpoints(n_max, checkpoints);
        let log_a = self.prefactor.ln();
        let eps = f64::EPSILON;

        let mut out = CnSeries {
            n_checkpoints: Vec::with_capacity(marks.len()),
            log_cn: Vec::with_capacity(marks.len()),
            ratio: Vec::with_capacity(marks.len()),
            ratio_error_bound: Vec::with_capacity(marks.len()),
            compensation: Vec::with_capacity(marks.len()),
        };
        let mut acc = NeumaierSum::new(0.5f64.ln());
        let mut magnitude = 0.5f64.ln().abs();
        let mut record = |n: u64, acc: &NeumaierSum, magnitude: f64| {
            let nf = n as f64;
            let log_cn = acc.value() / nf;
            let ratio = (log_cn - nf.ln()).exp();
            // each term carries a few ulps of evaluation error; the compensated
            // sum itself adds at most 2 ulps of the total.
            let log_err = eps * (4.0 * magnitude + 2.0 * acc.value().abs()) / nf;
            out.n_checkpoints.push(n);
            out.log_cn.push(log_cn);
            out.ratio.push(ratio);
            out.ratio_error_bound.push(ratio * (log_err + 2.0 * eps));
            out.compensation.push(acc.compensation() / nf);
        };

        let mut next = marks.iter().copied().peekable();
        if next.peek() == Some(&1) {
            record(1, &acc, magnitude);
            next.next();
        }
        let mut target = next.next();
        for k in 2..=n_max {
            let t = self.term(log_a, k);
            acc += t;
            magnitude += t.abs();
            if Some(k) == target {
                record(k, &acc, magnitude);
                target = next.next();
            }
        }
        Ok(out)
    }
}

/// Distinct values `round(n_max^{i/(count-1)})`, `i = 0..count`, always
/// including 1 and `n_max`.
pub fn geometric_checkpoints(n_max: u64, count: usize) -> Vec<u64> {
    let count = count.max(2);
    let top = (n_max as f64).ln();
    let mut marks: Vec<u64> = (0..count)
        .map(|i| {
            let v = (top * i as f64 / (count - 1) as f64).exp().round() as u64;
            v.clamp(1, n_max)
        })
        .collect();
    marks[count - 1] = n_max;
    marks.dedup();
    marks
}

/// Number of checkpoints giving a spacing ratio of about 2.
pub fn doubling_checkpoint_count(n_max: u64) -> usize {
    ((n_max as f64).log2().ceil() as usize + 1).max(2)
}

/// `log C_n` for the default recurrence.
pub fn cn(n: u64) -> Result<f64> {
    CnRecurrence::default().log_cn(n)
}

/// Checkpointed forward pass of the default recurrence.
pub fn cn_series(n_max: u64, checkpoints: usize) -> Result<CnSeries> {
    CnRecurrence::default().series(n_max, checkpoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// The recurrence in linear space, exactly as written.
    fn linear_cn(n: u64) -> f64 {
        let a = THREE_SQRT2_OVER_PI;
        let mut c: f64 = 0.5;
        for k in 2..=n {
            let kf = k as f64;
            c = c.powf(1.0 - 1.0 / kf) * (a * (kf - 1.0)).powf(1.0 / kf) * kf / (kf - 1.0);
        }
        c
    }

    #[test]
    fn base_constants() {
        assert_eq!(cn(1).unwrap(), 0.5f64.ln());
        assert_eq!(cn(1).unwrap().exp(), 0.5);
        // one step by hand: C_2 = C_1^{1/2} (a·1)^{1/2} · 2
        let c2 = 2.0 * (0.5 * THREE_SQRT2_OVER_PI).sqrt();
        assert_relative_eq!(cn(2).unwrap().exp(), c2, max_relative = 1e-12);
        assert_relative_eq!(c2, 1.643456, max_relative = 1e-6);
        assert!(cn(0).is_err());
    }

    #[test]
    fn matches_linear_space_recurrence() {
        for n in 1..=50 {
            assert_relative_eq!(cn(n).unwrap().exp(), linear_cn(n), max_relative = 1e-12);
        }
    }

    #[test]
    fn series_records_checkpoints() {
        let s = cn_series(100, doubling_checkpoint_count(100)).unwrap();
        assert_eq!(s.n_checkpoints[0], 1);
        assert_eq!(s.ratio[0], 0.5);
        assert_eq!(*s.n_checkpoints.last().unwrap(), 100);
        for (i, &n) in s.n_checkpoints.iter().enumerate() {
            assert_relative_eq!(s.log_cn[i], cn(n).unwrap(), max_relative = 1e-14);
            assert!(s.log_cn[i].is_finite() && s.ratio[i] > 0.0);
        }
        assert!(cn_series(9, 4).is_err());
        assert!(cn_series(100, 1).is_err());
    }

    #[test]
    fn ratio_converges_monotonically() {
        let s = cn_series(1_000_000, doubling_checkpoint_count(1_000_000)).unwrap();
        let tail = &s.ratio[s.ratio.len() / 2..];
        assert!(tail.windows(2).all(|w| w[1] >= w[0]));
        let diffs: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(diffs.windows(2).all(|d| d[1] <= d[0]));
        // telescoped closed form: C_n / n = a · (1/(2a))^{1/n}
        let a = THREE_SQRT2_OVER_PI;
        for (&n, &r) in s.n_checkpoints.iter().zip(&s.ratio) {
            let closed = a * (0.5 / a).powf(1.0 / n as f64);
            assert_relative_eq!(r, closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn checkpoints_are_geometric() {
        assert_eq!(geometric_checkpoints(16, 5), vec![1, 2, 4, 8, 16]);
        let m = geometric_checkpoints(1000, 4);
        assert_eq!(m, vec![1, 10, 100, 1000]);
    }
}
