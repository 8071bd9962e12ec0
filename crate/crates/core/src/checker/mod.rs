//! Bounded verification of path-mechanism properties.
//!
//! Every universally quantified property is swept over `j <= n <= n_max`,
//! `m <= m_max` (and colluding group sizes up to `m_max + 1`). Reports carry
//! the effective range, the minimum normalized slack observed and, on
//! failure, the lexicographically smallest violating `(lambda, j, n, m)`.
//!
//! A comparison `lhs >= rhs` passes iff
//! `lhs - rhs >= -tolerance * max(1, |lhs|, |rhs|)`; the reported margin is
//! the normalized slack `(lhs - rhs) / max(1, |lhs|, |rhs|)`. Strong individual
//! rationality is the exception: it requires strictly positive entries.

mod csv;
mod gains;
mod properties;
mod registry;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::Mechanism;

pub use self::csv::{write_reports, REPORT_HEADER};
pub use gains::{acp_ratio, collusion_gain, sybil_gain};
pub use properties::{
    check_base_condition, check_bc, check_beta_acp, check_cp, check_eps_acp, check_ir,
    check_lambda_cp, check_rho_ss, check_sir, check_sp, check_time_critical, find_acp_violation,
    AcpBound, AcpViolation, BudgetReport,
};
pub use registry::{Property, PropertyParams, PropertyRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckRange {
    pub n_max: usize,
    pub m_max: usize,
    pub tolerance: f64,
}

impl Default for CheckRange {
    fn default() -> Self {
        CheckRange { n_max: 50, m_max: 20, tolerance: 1e-9 }
    }
}

impl CheckRange {
    pub fn new(n_max: usize, m_max: usize, tolerance: f64) -> Result<Self> {
        let r = CheckRange { n_max, m_max, tolerance };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(Error::InvalidParameter(format!("n_max must be >= 2, got {}", self.n_max)));
        }
        if self.m_max < 1 {
            return Err(Error::InvalidParameter(format!("m_max must be >= 1, got {}", self.m_max)));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be finite and >= 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// The range actually covered for `mech`: tables truncate `n_max` to
    /// their declared size.
    pub fn effective_for(&self, mech: &Mechanism) -> Result<CheckRange> {
        self.validate()?;
        let n_max = match mech.max_length() {
            Some(limit) => self.n_max.min(limit),
            None => self.n_max,
        };
        Ok(CheckRange { n_max, ..*self })
    }
}

/// Counterexample coordinates; unused coordinates are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Witness {
    pub j: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub lambda: Option<usize>,
}

impl Witness {
    pub fn at(j: usize, n: usize) -> Self {
        Witness { j: Some(j), n: Some(n), ..Default::default() }
    }

    pub fn with_m(self, m: usize) -> Self {
        Witness { m: Some(m), ..self }
    }

    pub fn with_lambda(self, lambda: usize) -> Self {
        Witness { lambda: Some(lambda), ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub holds: bool,
    pub range: CheckRange,
    pub witness: Option<Witness>,
    pub margin: f64,
}

/// `(lhs - rhs) / max(1, |lhs|, |rhs|)`.
pub fn normalized_slack(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / 1f64.max(lhs.abs()).max(rhs.abs())
}

/// Running minimum of slacks plus the first violation seen. Sweeps iterate
/// in lexicographic witness order, so "first" is the smallest witness.
pub(crate) struct Sweep {
    tolerance: f64,
    min_slack: f64,
    witness: Option<Witness>,
}

impl Sweep {
    pub(crate) fn new(tolerance: f64) -> Self {
        Sweep { tolerance, min_slack: f64::INFINITY, witness: None }
    }

    pub(crate) fn ge(&mut self, lhs: f64, rhs: f64, at: impl FnOnce() -> Witness) {
        self.record(normalized_slack(lhs, rhs), at);
    }

    pub(crate) fn record(&mut self, slack: f64, at: impl FnOnce() -> Witness) {
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if slack < self.min_slack {
            self.min_slack = slack;
        }
        if slack < -self.tolerance && self.witness.is_none() {
            self.witness = Some(at());
        }
    }

    pub(crate) fn finish(self, property: impl Into<String>, range: CheckRange) -> PropertyReport {
        PropertyReport {
            property: property.into(),
            holds: self.witness.is_none(),
            range,
            witness: self.witness,
            margin: if self.min_slack == 0.0 { 0.0 } else { self.min_slack },
        }
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")))
    }
}
