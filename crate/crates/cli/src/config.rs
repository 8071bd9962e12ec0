//! Run configuration: one JSON document, optionally patched by
//! `--set dotted.key=value` overrides before validation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qnet_core::attack::{AuditLimits, DeviationRegistry};
use qnet_core::checker::{CheckRange, PropertyParams, PropertyRegistry};
use qnet_core::sim::GenConfig;
use qnet_core::Mechanism;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub offspring_mean: f64,
    pub answer_prob: f64,
    pub max_depth: usize,
    pub max_nodes: usize,
    /// Required by randomized commands; there is no clock-based default.
    pub seed: Option<u64>,
    pub episodes: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection { offspring_mean: 2.0, answer_prob: 0.1, max_depth: 8, max_nodes: 400, seed: None, episodes: 100 }
    }
}

impl SimSection {
    pub fn gen_config(&self, cmd: &str) -> Result<GenConfig> {
        let seed = self.seed.with_context(|| format!("`{cmd}` needs an explicit sim.seed"))?;
        let cfg = GenConfig {
            offspring_mean: self.offspring_mean,
            answer_prob: self.answer_prob,
            max_depth: self.max_depth,
            max_nodes: self.max_nodes,
            seed,
        };
        cfg.validate()?;
        if self.episodes < 1 {
            bail!("sim.episodes must be at least 1");
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Default rho for rho-SS and the base condition.
    pub rho: f64,
    /// Default epsilon for the (1+eps)-ACP search.
    pub epsilon: f64,
    /// Properties that must hold for exit status 0.
    pub expect: Vec<String>,
}

impl Default for CheckSection {
    fn default() -> Self {
        let d = PropertyParams::default();
        CheckSection { rho: d.rho, epsilon: d.epsilon, expect: Vec::new() }
    }
}

impl CheckSection {
    pub fn params(&self) -> PropertyParams {
        PropertyParams { rho: self.rho, epsilon: self.epsilon }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeriveSection {
    pub rho: Option<f64>,
    pub delta: f64,
    pub n_max: usize,
}

impl Default for DeriveSection {
    fn default() -> Self {
        DeriveSection { rho: None, delta: 1.0, n_max: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    /// Deviation classes to audit; empty means all registered classes.
    pub classes: Vec<String>,
    pub sybil_m_max: usize,
    pub withhold_full_max_children: usize,
}

impl Default for AttackSection {
    fn default() -> Self {
        let l = AuditLimits::default();
        AttackSection { classes: Vec::new(), sybil_m_max: l.sybil_m_max, withhold_full_max_children: l.withhold_full_max_children }
    }
}

impl AttackSection {
    pub fn limits(&self) -> AuditLimits {
        AuditLimits { sybil_m_max: self.sybil_m_max, withhold_full_max_children: self.withhold_full_max_children }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinCostSection {
    pub rho: Option<f64>,
    pub delta: f64,
    pub n_max: usize,
    pub grid_step: f64,
}

impl Default for MinCostSection {
    fn default() -> Self {
        MinCostSection { rho: None, delta: 1.0, n_max: 5, grid_step: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mechanism: Option<Value>,
    pub checker: CheckRange,
    pub sim: SimSection,
    pub check: CheckSection,
    pub derive: DeriveSection,
    pub attack: AttackSection,
    pub mincost: MinCostSection,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Reads `path` (or starts from `{}`), applies overrides and
    /// deserializes strictly.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Value::Object(Map::new()),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Domain checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if let Some(spec) = &self.mechanism {
            Mechanism::from_spec(spec).context("invalid mechanism")?;
        }
        self.checker.validate().context("invalid checker range")?;
        let registry = PropertyRegistry::builtin();
        for name in &self.check.expect {
            registry.parse(name, &self.check.params()).context("invalid check.expect entry")?;
        }
        let classes = DeviationRegistry::builtin();
        for name in &self.attack.classes {
            classes.build(name).context("invalid attack.classes entry")?;
        }
        if self.attack.sybil_m_max < 1 {
            bail!("attack.sybil_m_max must be at least 1");
        }
        let s = &self.sim;
        let probe = GenConfig {
            offspring_mean: s.offspring_mean,
            answer_prob: s.answer_prob,
            max_depth: s.max_depth,
            max_nodes: s.max_nodes,
            seed: 0,
        };
        probe.validate().context("invalid sim section")?;
        Ok(())
    }

    pub fn mechanism(&self, cmd: &str) -> Result<Mechanism> {
        let spec = self.mechanism.as_ref().with_context(|| format!("`{cmd}` needs a mechanism"))?;
        Ok(Mechanism::from_spec(spec)?)
    }

    /// SHA-256 of the canonical JSON form, ignoring where outputs go.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("output_dir");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}

/// Sets `key.path` in `doc`. The value is read as JSON when it parses,
/// otherwise as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .with_context(|| format!("override `{assignment}` is not key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key `{key}` has an empty segment");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur
            .as_object_mut()
            .with_context(|| format!("override `{key}`: `{}` is not an object", parts[..i].join(".")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("at least one segment")
}
