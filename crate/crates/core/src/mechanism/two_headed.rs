use serde_json::{json, Value};

use super::RewardFunction;
use crate::error::{Error, Result};

/// Pays `a` to the first path agent and `b` to the winner (`a + b` when
/// they coincide); every interior agent gets nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoHeaded {
    a: f64,
    b: f64,
}

impl TwoHeaded {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "two-headed mechanism needs finite a, b >= 0, got a = {a}, b = {b}"
            )));
        }
        Ok(TwoHeaded { a, b })
    }

    pub fn heads(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

impl RewardFunction for TwoHeaded {
    fn kind(&self) -> &'static str {
        "two_headed"
    }

    fn value(&self, j: usize, n: usize) -> f64 {
        match (j, n) {
            (1, 1) => self.a + self.b,
            (1, _) => self.a,
            (j, n) if j == n => self.b,
            _ => 0.0,
        }
    }

    fn spec(&self) -> Value {
        json!({ "type": "two_headed", "a": self.a, "b": self.b })
    }

    fn label(&self) -> String {
        format!("two_headed(a={};b={})", self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_table() {
        let t = TwoHeaded::new(2.0, 3.0).unwrap();
        assert_eq!(t.value(1, 1), 5.0);
        assert_eq!(t.value(1, 4), 2.0);
        assert_eq!(t.value(4, 4), 3.0);
        assert_eq!(t.value(2, 4), 0.0);
        assert!(TwoHeaded::new(-1.0, 0.0).is_err());
        assert!(TwoHeaded::new(0.0, 0.0).is_ok());
    }
}
