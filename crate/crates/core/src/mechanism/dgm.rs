use serde_json::{json, Value};

use super::RewardFunction;
use crate::error::{Error, Result};

/// Double geometric mechanism: `x(j, n) = (1 - alpha)^(j-1) * alpha^(n-j) * delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleGeometric {
    alpha: f64,
    delta: f64,
}

impl DoubleGeometric {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "dgm alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dgm delta must be positive and finite, got {delta}"
            )));
        }
        Ok(DoubleGeometric { alpha, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(alpha^n - (1-alpha)^n) / (2 alpha - 1) * delta`, or `n delta / 2^(n-1)`
    /// at `alpha = 1/2`.
    pub fn closed_form_total(&self, n: usize) -> f64 {
        let a = self.alpha;
        if a == 0.5 {
            return n as f64 * self.delta * 0.5f64.powi(n as i32 - 1);
        }
        let n = n as i32;
        (a.powi(n) - (1.0 - a).powi(n)) / (2.0 * a - 1.0) * self.delta
    }
}

impl RewardFunction for DoubleGeometric {
    fn kind(&self) -> &'static str {
        "dgm"
    }

    fn value(&self, j: usize, n: usize) -> f64 {
        (1.0 - self.alpha).powi(j as i32 - 1) * self.alpha.powi((n - j) as i32) * self.delta
    }

    fn budget_bound(&self) -> Option<f64> {
        Some(self.delta)
    }

    fn spec(&self) -> Value {
        json!({ "type": "dgm", "alpha": self.alpha, "delta": self.delta })
    }

    fn label(&self) -> String {
        format!("dgm(alpha={};delta={})", self.alpha, self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mechanism;
    use proptest::prelude::*;

    #[test]
    fn constructor_domain() {
        assert!(DoubleGeometric::new(0.0, 1.0).is_err());
        assert!(DoubleGeometric::new(1.0, 1.0).is_err());
        assert!(DoubleGeometric::new(0.3, 0.0).is_err());
        assert!(DoubleGeometric::new(f64::NAN, 1.0).is_err());
        assert!(DoubleGeometric::new(0.3, -1.0).is_err());
        assert!(DoubleGeometric::new(0.7, 2.0).is_ok());
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    proptest! {
        #[test]
        fn split_identity(alpha in 0.01f64..0.99, delta in 0.1f64..10.0) {
            let m = Mechanism::dgm(alpha, delta).unwrap();
            for n in 1..50usize {
                for j in 1..=n {
                    let lhs = m.reward(j, n).unwrap();
                    let rhs = m.reward(j, n + 1).unwrap() + m.reward(j + 1, n + 1).unwrap();
                    prop_assert!(rel_close(lhs, rhs, 1e-12), "j={} n={} {} vs {}", j, n, lhs, rhs);
                }
            }
        }

        #[test]
        fn constant_neighbour_ratio(alpha in 0.01f64..0.99) {
            let m = Mechanism::dgm(alpha, 1.0).unwrap();
            let expected = alpha / (1.0 - alpha);
            for n in 2..=50usize {
                for j in 1..n {
                    let r = m.reward(j, n).unwrap() / m.reward(j + 1, n).unwrap();
                    prop_assert!(rel_close(r, expected, 1e-12));
                }
            }
        }

        #[test]
        fn total_matches_closed_form(alpha in 0.01f64..0.99, delta in 0.1f64..10.0) {
            prop_assume!((alpha - 0.5).abs() > 1e-3);
            let d = DoubleGeometric::new(alpha, delta).unwrap();
            let m = Mechanism::new(d);
            for n in 1..=50usize {
                prop_assert!(rel_close(m.total_cost(n).unwrap(), d.closed_form_total(n), 1e-12));
            }
        }
    }

    #[test]
    fn closed_form_at_one_half() {
        let d = DoubleGeometric::new(0.5, 1.0).unwrap();
        assert_eq!(d.closed_form_total(3), 0.75);
        assert!(rel_close(d.closed_form_total(3), Mechanism::new(d).total_cost(3).unwrap(), 1e-15));
    }
}
