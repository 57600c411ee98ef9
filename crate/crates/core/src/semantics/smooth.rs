//! Log-sum-exp approximations of max/min and the smooth rectifiers.
//!
//! `smooth_max` overestimates `max` by at most `ln(m)/beta` and `smooth_min`
//! underestimates `min` by the same amount. All forms shift by the extremum
//! before exponentiating, so large `beta * a` never overflows.

use crate::error::{Error, Result};

/// Smoothing sharpness. `minmax` applies to max/min, `rect` to the rectifiers.
///
/// With `centered` set, the evaluators shift every smooth max down and every
/// smooth min up by `ln(m)/beta`, so a list of equal values maps to that
/// value. The plain form is biased by up to `ln(m)/beta` per operator, and
/// the cumulative sums add that bias once per window; centering keeps the
/// gradients of each operator and removes the offset from equal-valued
/// windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothParams {
    pub minmax: f64,
    pub rect: f64,
    pub centered: bool,
}

impl SmoothParams {
    pub fn new(beta: f64) -> Result<Self> {
        Self::with_overrides(beta, beta)
    }

    pub fn with_overrides(minmax: f64, rect: f64) -> Result<Self> {
        if !(minmax > 0.0 && minmax.is_finite() && rect > 0.0 && rect.is_finite()) {
            return Err(Error::Config(format!(
                "smoothing parameter must be positive and finite (got {minmax}, {rect})"
            )));
        }
        Ok(Self {
            minmax,
            rect,
            centered: false,
        })
    }

    pub fn centered(self, centered: bool) -> Self {
        Self { centered, ..self }
    }

    /// Amount added to a smooth min (and subtracted from a smooth max) of
    /// `m` arguments.
    pub fn offset(&self, m: usize) -> f64 {
        if self.centered && m > 1 {
            (m as f64).ln() / self.minmax
        } else {
            0.0
        }
    }
}

fn max_of(values: &[f64]) -> f64 {
    values[1..].iter().fold(values[0], |a, &b| a.max(b))
}

fn min_of(values: &[f64]) -> f64 {
    values[1..].iter().fold(values[0], |a, &b| a.min(b))
}

/// `(1/beta) ln sum exp(beta a_i)`. Panics on an empty slice.
pub fn smooth_max(values: &[f64], beta: f64) -> f64 {
    assert!(!values.is_empty(), "smooth_max of an empty list");
    let m = max_of(values);
    let s: f64 = values.iter().map(|&a| (beta * (a - m)).exp()).sum();
    m + s.ln() / beta
}

/// `-smooth_max(-a)`. Panics on an empty slice.
pub fn smooth_min(values: &[f64], beta: f64) -> f64 {
    assert!(!values.is_empty(), "smooth_min of an empty list");
    let m = min_of(values);
    let s: f64 = values.iter().map(|&a| (-beta * (a - m)).exp()).sum();
    m - s.ln() / beta
}

/// Value of `smooth_max` and its partials (a softmax distribution).
pub fn smooth_max_grad(values: &[f64], beta: f64, grad: &mut Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "smooth_max of an empty list");
    let m = max_of(values);
    grad.clear();
    grad.extend(values.iter().map(|&a| (beta * (a - m)).exp()));
    let s: f64 = grad.iter().sum();
    grad.iter_mut().for_each(|w| *w /= s);
    m + s.ln() / beta
}

/// Value of `smooth_min` and its partials (a softmin distribution).
pub fn smooth_min_grad(values: &[f64], beta: f64, grad: &mut Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "smooth_min of an empty list");
    let m = min_of(values);
    grad.clear();
    grad.extend(values.iter().map(|&a| (-beta * (a - m)).exp()));
    let s: f64 = grad.iter().sum();
    grad.iter_mut().for_each(|w| *w /= s);
    m - s.ln() / beta
}

pub fn rect_pos(a: f64) -> f64 {
    a.max(0.0)
}

pub fn rect_neg(a: f64) -> f64 {
    a.min(0.0)
}

/// `(1/beta) ln(1 + exp(beta a))`
pub fn rect_pos_smooth(a: f64, beta: f64) -> f64 {
    a.max(0.0) + (-(beta * a).abs()).exp().ln_1p() / beta
}

/// `-(1/beta) ln(1 + exp(-beta a))`
pub fn rect_neg_smooth(a: f64, beta: f64) -> f64 {
    -rect_pos_smooth(-a, beta)
}

/// Derivative of [`rect_pos_smooth`]: the logistic function of `beta a`.
pub fn rect_pos_smooth_deriv(a: f64, beta: f64) -> f64 {
    logistic(beta * a)
}

/// Derivative of [`rect_neg_smooth`].
pub fn rect_neg_smooth_deriv(a: f64, beta: f64) -> f64 {
    logistic(-beta * a)
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn two_zeros() {
        assert!((smooth_max(&[0.0, 0.0], 1.0) - LN_2).abs() < 1e-15);
        assert!((smooth_min(&[0.0, 0.0], 1.0) + LN_2).abs() < 1e-15);
    }

    #[test]
    fn single_element_is_exact() {
        for beta in [0.1, 1.0, 1e3] {
            assert_eq!(smooth_max(&[5.0], beta), 5.0);
            assert_eq!(smooth_min(&[5.0], beta), 5.0);
        }
    }

    #[test]
    fn no_overflow_at_large_beta() {
        let v = smooth_max(&[800.0, 799.0], 100.0);
        assert!(v.is_finite() && (v - 800.0).abs() < 1e-10);
        assert!(rect_pos_smooth(1e4, 100.0).is_finite());
        assert_eq!(rect_pos_smooth(-1e4, 100.0), 0.0);
    }

    #[test]
    fn rectifiers() {
        assert_eq!(rect_pos(-2.0), 0.0);
        assert_eq!(rect_neg(-2.0), -2.0);
        assert_eq!(rect_pos(3.0), 3.0);
        assert_eq!(rect_neg(3.0), 0.0);
        assert!((rect_pos_smooth(0.0, 1.0) - LN_2).abs() < 1e-15);
        assert!((rect_neg_smooth(0.0, 1.0) + LN_2).abs() < 1e-15);
        // direct evaluation of (1/10) ln(1 + e^30)
        let direct = (1.0 + 30f64.exp()).ln() / 10.0;
        let gap = rect_pos_smooth(3.0, 10.0) - 3.0;
        assert!((rect_pos_smooth(3.0, 10.0) - direct).abs() < 1e-14);
        assert!(gap > 0.0 && gap <= LN_2 / 10.0);
    }

    #[test]
    fn equal_inputs_split_gradient() {
        let mut g = Vec::new();
        smooth_max_grad(&[0.3, 0.3], 1.0, &mut g);
        assert_eq!(g, vec![0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn max_bound(values in prop::collection::vec(-50.0f64..50.0, 2..9), bi in 0usize..4) {
            let beta = [0.5, 1.0, 10.0, 100.0][bi];
            let m = values.len() as f64;
            let exact = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let gap = smooth_max(&values, beta) - exact;
            prop_assert!(gap >= 0.0 && gap <= m.ln() / beta);
        }

        #[test]
        fn min_bound(values in prop::collection::vec(-50.0f64..50.0, 2..9), bi in 0usize..4) {
            let beta = [0.5, 1.0, 10.0, 100.0][bi];
            let m = values.len() as f64;
            let exact = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let gap = exact - smooth_min(&values, beta);
            prop_assert!(gap >= 0.0 && gap <= m.ln() / beta);
        }

        #[test]
        fn softmax_weights_are_a_distribution(values in prop::collection::vec(-20.0f64..20.0, 1..10), beta in 0.1f64..100.0) {
            let mut g = Vec::new();
            let v = smooth_max_grad(&values, beta, &mut g);
            prop_assert_eq!(v, smooth_max(&values, beta));
            prop_assert!(g.iter().all(|&w| w >= 0.0));
            prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rectifier_derivatives(a in -5.0f64..5.0, beta in 0.5f64..20.0) {
            let h = 1e-6;
            let fd = (rect_pos_smooth(a + h, beta) - rect_pos_smooth(a - h, beta)) / (2.0 * h);
            prop_assert!((fd - rect_pos_smooth_deriv(a, beta)).abs() < 1e-6);
            let fd = (rect_neg_smooth(a + h, beta) - rect_neg_smooth(a - h, beta)) / (2.0 * h);
            prop_assert!((fd - rect_neg_smooth_deriv(a, beta)).abs() < 1e-6);
        }
    }
}
