use std::collections::BTreeMap;

use super::properties::*;
use super::{CheckRange, PropertyReport};
use crate::error::{Error, Result};
use crate::mechanism::Mechanism;

/// A named property that can be swept over a mechanism.
pub trait Property: Send + Sync {
    /// Canonical name, as written to the `property` column of reports.
    fn name(&self) -> String;
    fn check(&self, mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport>;
}

/// Defaults for parameterized properties named without an `@value` suffix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyParams {
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for PropertyParams {
    fn default() -> Self {
        PropertyParams { rho: 0.5, epsilon: 0.1 }
    }
}

struct Simple {
    name: &'static str,
    run: fn(&Mechanism, &CheckRange) -> Result<PropertyReport>,
}

impl Property for Simple {
    fn name(&self) -> String {
        self.name.to_string()
    }
    fn check(&self, mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
        (self.run)(mech, range)
    }
}

struct LambdaCp(usize);

impl Property for LambdaCp {
    fn name(&self) -> String {
        format!("{}-CP", self.0)
    }
    fn check(&self, mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
        check_lambda_cp(mech, self.0, range)
    }
}

struct RhoSs(f64);

impl Property for RhoSs {
    fn name(&self) -> String {
        format!("rho-SS@{}", self.0)
    }
    fn check(&self, mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
        check_rho_ss(mech, self.0, range)
    }
}

struct BaseCondition(f64);

impl Property for BaseCondition {
    fn name(&self) -> String {
        format!("base-condition@{}", self.0)
    }
    fn check(&self, mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
        check_base_condition(mech, self.0, range)
    }
}

struct EpsAcp(f64);

impl Property for EpsAcp {
    fn name(&self) -> String {
        format!("(1+eps)-ACP@{}", self.0)
    }
    fn check(&self, mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
        check_eps_acp(mech, self.0, range)
    }
}

fn bc(mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
    check_bc(mech, range).map(|b| b.report)
}

fn exp_acp(mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
    let bound = AcpBound::Exponential;
    check_beta_acp(mech, |m| bound.factor(m), bound.name(), range)
}

type PropertyFactory = fn(Option<f64>, &PropertyParams) -> Result<Box<dyn Property>>;

fn simple(name: &'static str, run: fn(&Mechanism, &CheckRange) -> Result<PropertyReport>) -> Box<dyn Property> {
    Box::new(Simple { name, run })
}

fn no_param(key: &str, param: Option<f64>) -> Result<()> {
    match param {
        Some(_) => Err(Error::UnknownProperty(format!("{key} takes no parameter"))),
        None => Ok(()),
    }
}

/// Resolves property names such as `SP`, `3-CP` or `rho-SS@0.5`.
/// Matching is case-insensitive; `ρ`, `ε` and `λ` may be used for
/// `rho`, `eps` and `lambda`.
pub struct PropertyRegistry {
    factories: BTreeMap<&'static str, PropertyFactory>,
}

impl PropertyRegistry {
    pub fn builtin() -> Self {
        let mut f: BTreeMap<&'static str, PropertyFactory> = BTreeMap::new();
        f.insert("ir", |p, _| no_param("IR", p).map(|_| simple("IR", check_ir)));
        f.insert("sir", |p, _| no_param("SIR", p).map(|_| simple("SIR", check_sir)));
        f.insert("sp", |p, _| no_param("SP", p).map(|_| simple("SP", check_sp)));
        f.insert("cp", |p, _| no_param("CP", p).map(|_| simple("CP", check_cp)));
        f.insert("bc", |p, _| no_param("BC", p).map(|_| simple("BC", bc)));
        f.insert("time-critical", |p, _| {
            no_param("time-critical", p).map(|_| simple("time-critical", check_time_critical))
        });
        f.insert("2^m-acp", |p, _| no_param("2^m-ACP", p).map(|_| simple("2^m-ACP", exp_acp)));
        f.insert("lambda-cp", |p, _| {
            let lambda = p.ok_or_else(|| Error::UnknownProperty("lambda-CP needs @lambda".into()))?;
            if lambda.fract() != 0.0 || lambda < 2.0 {
                return Err(Error::InvalidParameter(format!("lambda must be an integer >= 2, got {lambda}")));
            }
            Ok(Box::new(LambdaCp(lambda as usize)))
        });
        f.insert("rho-ss", |p, d| {
            let rho = p.unwrap_or(d.rho);
            super::check_rho(rho)?;
            Ok(Box::new(RhoSs(rho)))
        });
        f.insert("base-condition", |p, d| {
            let rho = p.unwrap_or(d.rho);
            super::check_rho(rho)?;
            Ok(Box::new(BaseCondition(rho)))
        });
        f.insert("(1+eps)-acp", |p, d| {
            let eps = p.unwrap_or(d.epsilon);
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
            }
            Ok(Box::new(EpsAcp(eps)))
        });
        PropertyRegistry { factories: f }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().copied()
    }

    pub fn parse(&self, name: &str, defaults: &PropertyParams) -> Result<Box<dyn Property>> {
        let norm = name
            .trim()
            .to_lowercase()
            .replace('ρ', "rho")
            .replace('ε', "eps")
            .replace('λ', "lambda");
        let (key, param) = match norm.split_once('@') {
            Some((k, v)) => {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::UnknownProperty(format!("{name}: bad parameter `{v}`")))?;
                (k.trim().to_string(), Some(v))
            }
            None => (norm.clone(), None),
        };
        if let Some(digits) = key.strip_suffix("-cp") {
            if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                no_param(&key, param)?;
                let lambda: usize = digits.parse().map_err(|_| Error::UnknownProperty(name.into()))?;
                if lambda < 2 {
                    return Err(Error::InvalidParameter(format!("{name}: lambda must be >= 2")));
                }
                return Ok(Box::new(LambdaCp(lambda)));
            }
        }
        let key = match key.as_str() {
            "exp-acp" => "2^m-acp",
            "eps-acp" | "1+eps-acp" => "(1+eps)-acp",
            "ss" => "rho-ss",
            "base" => "base-condition",
            k => k,
        };
        let factory = self
            .factories
            .get(key)
            .ok_or_else(|| Error::UnknownProperty(name.to_string()))?;
        factory(param, defaults)
    }

    /// IR, SIR, SP, 2-CP, 3-CP, truncated CP, BC, rho-SS, time-critical,
    /// base condition, 2^m-ACP and (1+eps)-ACP.
    pub fn standard_suite(&self, defaults: &PropertyParams) -> Result<Vec<Box<dyn Property>>> {
        [
            "IR", "SIR", "SP", "2-CP", "3-CP", "CP", "BC", "rho-SS", "time-critical",
            "base-condition", "2^m-ACP", "(1+eps)-ACP",
        ]
        .iter()
        .map(|n| self.parse(n, defaults))
        .collect()
    }
}

impl Default for PropertyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
