//! Splitting a variance budget between the coupled and pathwise parts.

use serde::Serialize;

use crate::error::{Error, Result};

/// Plan for the hybrid estimator. `_l` refers to the coupled correction
/// samples and `_p` to the pathwise samples; `v` are per-sample variances
/// and `c` per-sample costs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AllocationPlan {
    pub v_l: f64,
    pub c_l: f64,
    pub v_p: f64,
    pub c_p: f64,
    pub delta: f64,
    pub target_var_l: f64,
    pub target_var_p: f64,
    pub n_l: u64,
    pub n_p: u64,
}

/// Variance target matching a 95% halfwidth.
pub fn delta_from_halfwidth(eps: f64) -> f64 {
    (eps / super::Z95).powi(2)
}

/// Minimises expected cost `n_l c_l + n_p c_p` subject to
/// `v_l / n_l + v_p / n_p = delta`.
pub fn allocate(v_l: f64, c_l: f64, v_p: f64, c_p: f64, delta: f64) -> Result<AllocationPlan> {
    for (name, v) in [("v_l", v_l), ("c_l", c_l), ("v_p", v_p), ("c_p", c_p), ("delta", delta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Argument(format!("allocation needs positive {name}, got {v}")));
        }
    }
    let sl = (v_l * c_l).sqrt();
    let sp = (v_p * c_p).sqrt();
    // The larger share comes from the formula and the smaller one by
    // subtraction, which is exact since the larger share is at least
    // delta / 2; the two then add up to delta without rounding.
    let (target_var_l, target_var_p) = if sl >= sp {
        let l = delta * sl / (sp + sl);
        (l, delta - l)
    } else {
        let p = delta * sp / (sp + sl);
        (delta - p, p)
    };
    Ok(AllocationPlan {
        v_l,
        c_l,
        v_p,
        c_p,
        delta,
        target_var_l,
        target_var_p,
        n_l: ceil_count(v_l / target_var_l),
        n_p: ceil_count(v_p / target_var_p),
    })
}

/// Ceiling that ignores rounding noise just above an integer, so that
/// `4 / 0.2` gives 20 rather than 21.
pub(crate) fn ceil_count(x: f64) -> u64 {
    (x * (1.0 - 1e-12)).ceil().max(1.0) as u64
}

/// Splits `n` samples so that `n_l / n_p = sqrt(v_l / c_l) / sqrt(v_p / c_p)`,
/// the cost-optimal ratio, keeping at least two of each.
pub fn split_fixed(n: u64, v_l: f64, c_l: f64, v_p: f64, c_p: f64) -> (u64, u64) {
    if n < 4 {
        return (n / 2, n - n / 2);
    }
    let a = (v_l / c_l.max(f64::MIN_POSITIVE)).sqrt();
    let b = (v_p / c_p.max(f64::MIN_POSITIVE)).sqrt();
    let frac = if a + b > 0.0 && (a + b).is_finite() { a / (a + b) } else { 0.5 };
    let n_l = ((n as f64) * frac).round() as u64;
    let n_l = n_l.clamp(2, n - 2);
    (n_l, n - n_l)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn hand_example() {
        let p = allocate(4.0, 1.0, 1.0, 1.0, 0.3).unwrap();
        assert!((p.target_var_l - 0.2).abs() < 1e-15);
        assert!((p.target_var_p - 0.1).abs() < 1e-15);
        assert_eq!((p.n_l, p.n_p), (20, 10));
    }

    #[test]
    fn symmetric_costs_split_evenly() {
        let p = allocate(2.0, 3.0, 3.0, 2.0, 0.5).unwrap();
        assert!((p.target_var_l - 0.25).abs() < 1e-15);
        assert!((p.target_var_p - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        assert!(allocate(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(allocate(1.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(allocate(1.0, 1.0, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn halfwidth_to_delta() {
        assert!((delta_from_halfwidth(1.96) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fixed_split() {
        assert_eq!(split_fixed(100, 1.0, 1.0, 1.0, 1.0), (50, 50));
        assert_eq!(split_fixed(100, 0.0, 1.0, 1.0, 1.0), (2, 98));
        let (l, p) = split_fixed(300, 4.0, 1.0, 1.0, 1.0);
        assert_eq!((l, p), (200, 100));
    }

    proptest! {
        #[test]
        fn budget_constraint_is_exact(
            v_l in 1e-6f64..1e6, c_l in 1e-3f64..1e4, v_p in 1e-6f64..1e6, c_p in 1e-3f64..1e4, delta in 1e-6f64..1e3,
        ) {
            let p = allocate(v_l, c_l, v_p, c_p, delta).unwrap();
            prop_assert_eq!(p.target_var_l + p.target_var_p, delta);
            prop_assert!(v_l / p.n_l as f64 <= p.target_var_l * (1.0 + 1e-11));
            prop_assert!(v_p / p.n_p as f64 <= p.target_var_p * (1.0 + 1e-11));
            // first-order optimality: n_x proportional to sqrt(v_x / c_x)
            let r = (p.target_var_l / p.target_var_p) / ((v_l * c_l).sqrt() / (v_p * c_p).sqrt());
            prop_assert!((r - 1.0).abs() < 1e-9);
        }
    }
}
