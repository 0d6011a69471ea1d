//! Compensated and fixed-shape summation.

use std::ops::AddAssign;

/// Kahan–Babuška–Neumaier running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new(initial: f64) -> Self {
        NeumaierSum {
            sum: initial,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// The accumulated low-order correction not yet folded into the sum.
    pub fn compensation(&self) -> f64 {
        self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

/// Sums `values` with a balanced binary tree whose shape depends only on the
/// length, so the result is reproducible bit-for-bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut s = NeumaierSum::new(0.0);
        s += 1e100;
        s += 1.0;
        s += -1e100;
        assert_eq!(s.value(), 1.0);

        let mut s = NeumaierSum::default();
        for _ in 0..10_000_000 {
            s += 0.1;
        }
        assert!((s.value() - 1_000_000.0).abs() < 1e-9);
    }

    #[test]
    fn pairwise_is_order_stable() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
