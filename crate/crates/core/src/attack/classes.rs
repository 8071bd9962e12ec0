use std::collections::{BTreeMap, BTreeSet};

use super::audit::AuditLimits;
use super::deviation::Deviation;
use crate::error::{Error, Result};
use crate::mechanism::AgentId;
use crate::sim::{QueryTree, Realization};

/// What a deviation class may inspect when enumerating candidates.
/// The deviator is granted full knowledge of the sampled network.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeContext<'a> {
    pub episode: usize,
    pub seed: u64,
    pub network: &'a QueryTree,
    pub truthful: &'a Realization,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Enumeration {
    pub deviations: Vec<Deviation>,
    /// Set when the class enumerated only part of its space.
    pub note: Option<String>,
}

impl Enumeration {
    fn full(deviations: Vec<Deviation>) -> Self {
        Self { deviations, note: None }
    }
}

/// A family of deviations the audit can enumerate per episode.
pub trait DeviationClass: Send + Sync {
    fn name(&self) -> &'static str;
    /// Deterministic list of candidates for one episode.
    fn enumerate(&self, ctx: &EpisodeContext<'_>, limits: &AuditLimits) -> Enumeration;
}

/// Chain insertion by each winning-path agent, `1..=sybil_m_max` copies.
#[derive(Debug, Default)]
pub struct SybilChains;

impl DeviationClass for SybilChains {
    fn name(&self) -> &'static str {
        "sybil"
    }

    fn enumerate(&self, ctx: &EpisodeContext<'_>, limits: &AuditLimits) -> Enumeration {
        let Some(path) = &ctx.truthful.path else { return Enumeration::default() };
        let mut out = Vec::new();
        for &agent in path.agents() {
            for copies in 1..=limits.sybil_m_max {
                out.push(Deviation::Sybil { agent, copies });
            }
        }
        Enumeration::full(out)
    }
}

/// Every contiguous winning-path segment of length at least two.
#[derive(Debug, Default)]
pub struct ColludingSegments;

impl DeviationClass for ColludingSegments {
    fn name(&self) -> &'static str {
        "collude"
    }

    fn enumerate(&self, ctx: &EpisodeContext<'_>, _: &AuditLimits) -> Enumeration {
        let Some(path) = &ctx.truthful.path else { return Enumeration::default() };
        let agents = path.agents();
        let mut out = Vec::new();
        for start in 0..agents.len() {
            for end in start + 2..=agents.len() {
                out.push(Deviation::Collude { segment: agents[start..end].to_vec() });
            }
        }
        Enumeration::full(out)
    }
}

/// Each holder the truthful query reaches forwards instead of answering.
#[derive(Debug, Default)]
pub struct DelayedAnswers;

impl DeviationClass for DelayedAnswers {
    fn name(&self) -> &'static str {
        "delay_answer"
    }

    fn enumerate(&self, ctx: &EpisodeContext<'_>, _: &AuditLimits) -> Enumeration {
        let out = ctx
            .truthful
            .realized_tree
            .holders()
            .map(|n| Deviation::DelayAnswer { agent: n.id })
            .collect();
        Enumeration::full(out)
    }
}

/// Each reached forwarding agent drops some of her children: every
/// nonempty subset when she has at most `withhold_full_max_children`,
/// otherwise one child at a time.
#[derive(Debug, Default)]
pub struct WithheldPropagation;

impl DeviationClass for WithheldPropagation {
    fn name(&self) -> &'static str {
        "withhold_propagation"
    }

    fn enumerate(&self, ctx: &EpisodeContext<'_>, limits: &AuditLimits) -> Enumeration {
        let realized = &ctx.truthful.realized_tree;
        let mut out = Vec::new();
        let mut truncated = 0usize;
        for node in realized.nodes() {
            if node.id == realized.root() || node.holds_answer {
                continue;
            }
            let children = ctx.network.children(node.id);
            if children.is_empty() {
                continue;
            }
            if children.len() <= limits.withhold_full_max_children {
                for mask in 1u32..(1 << children.len()) {
                    let dropped: BTreeSet<AgentId> =
                        children.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, c)| *c).collect();
                    out.push(Deviation::WithholdPropagation { agent: node.id, dropped });
                }
            } else {
                truncated += 1;
                for &c in children {
                    out.push(Deviation::WithholdPropagation { agent: node.id, dropped: [c].into() });
                }
            }
        }
        let note = (truncated > 0).then(|| {
            format!(
                "episode {}: {truncated} agent(s) with more than {} children tried singleton drops only",
                ctx.episode, limits.withhold_full_max_children
            )
        });
        Enumeration { deviations: out, note }
    }
}

pub type DeviationFactory = fn() -> Box<dyn DeviationClass>;

/// Deviation classes by name.
#[derive(Clone)]
pub struct DeviationRegistry {
    factories: BTreeMap<String, DeviationFactory>,
}

impl DeviationRegistry {
    pub fn builtin() -> Self {
        let mut r = Self { factories: BTreeMap::new() };
        r.register("sybil", || Box::new(SybilChains));
        r.register("collude", || Box::new(ColludingSegments));
        r.register("delay_answer", || Box::new(DelayedAnswers));
        r.register("withhold_propagation", || Box::new(WithheldPropagation));
        r
    }

    pub fn register(&mut self, name: &str, factory: DeviationFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str) -> Result<Box<dyn DeviationClass>> {
        let key = name.trim().to_ascii_lowercase().replace('-', "_");
        let key = match key.as_str() {
            "collusion" => "collude",
            "delay" => "delay_answer",
            "withhold" => "withhold_propagation",
            k => k,
        };
        self.factories
            .get(key)
            .map(|f| f())
            .ok_or_else(|| Error::UnknownDeviationClass(name.to_string()))
    }

    /// Every registered class, in name order.
    pub fn all(&self) -> Vec<Box<dyn DeviationClass>> {
        self.factories.values().map(|f| f()).collect()
    }
}

impl std::fmt::Debug for DeviationRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeviationRegistry").field("classes", &self.names()).finish()
    }
}
