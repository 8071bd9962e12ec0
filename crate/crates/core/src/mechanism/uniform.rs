use serde_json::{json, Value};

use super::RewardFunction;
use crate::error::{Error, Result};

/// Splits `delta` evenly over the path, `x(j, n) = delta / n`.
///
/// Not Sybil-proof; used as the baseline for attack demonstrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformSplit {
    delta: f64,
}

impl UniformSplit {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "uniform split delta must be positive and finite, got {delta}"
            )));
        }
        Ok(UniformSplit { delta })
    }
}

impl RewardFunction for UniformSplit {
    fn kind(&self) -> &'static str {
        "uniform_split"
    }

    fn value(&self, _j: usize, n: usize) -> f64 {
        self.delta / n as f64
    }

    fn spec(&self) -> Value {
        json!({ "type": "uniform_split", "delta": self.delta })
    }

    fn label(&self) -> String {
        format!("uniform_split(delta={})", self.delta)
    }
}
