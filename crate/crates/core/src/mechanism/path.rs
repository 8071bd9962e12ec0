use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The rewarded path `(i_1, ..., i_n)` from the requester's child to the
/// winner. Position `j` (1-based) is the agent's depth.
///
/// Paths produced by deviations may repeat an identity (Sybil copies share
/// their owner's id) or skip tree edges (a merged collusion group).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinningPath {
    agents: Vec<AgentId>,
}

impl WinningPath {
    pub fn new(agents: Vec<AgentId>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Domain("winning path must contain at least one agent".into()));
        }
        Ok(WinningPath { agents })
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn winner(&self) -> AgentId {
        *self.agents.last().expect("non-empty by construction")
    }

    /// 1-based position of `agent`, first occurrence.
    pub fn position(&self, agent: AgentId) -> Option<usize> {
        self.agents.iter().position(|a| *a == agent).map(|p| p + 1)
    }
}

/// Per-agent payments. Agents absent from the map are paid exactly 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    rewards: BTreeMap<AgentId, f64>,
    total: f64,
}

impl Allocation {
    pub(crate) fn credit(&mut self, agent: AgentId, amount: f64) {
        *self.rewards.entry(agent).or_insert(0.0) += amount;
        self.total += amount;
    }

    pub fn get(&self, agent: AgentId) -> f64 {
        self.rewards.get(&agent).copied().unwrap_or(0.0)
    }

    /// Summed reward of a set of agents.
    pub fn group(&self, agents: &[AgentId]) -> f64 {
        let mut seen: Vec<AgentId> = agents.to_vec();
        seen.sort();
        seen.dedup();
        seen.iter().map(|a| self.get(*a)).sum()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, f64)> + '_ {
        self.rewards.iter().map(|(a, r)| (*a, *r))
    }
}
