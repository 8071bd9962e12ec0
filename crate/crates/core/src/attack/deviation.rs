use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::mechanism::{AgentId, Mechanism, WinningPath};
use crate::sim::{run_on_tree, settle_on_tree, Behavior, QueryTree, Realization, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Deviation {
    /// Replace `agent` on the winning path by a chain of `copies + 1`
    /// identities.
    Sybil { agent: AgentId, copies: usize },
    /// Consecutive winning-path agents pose as the first of them.
    Collude { segment: Vec<AgentId> },
    WithholdPropagation { agent: AgentId, dropped: BTreeSet<AgentId> },
    DelayAnswer { agent: AgentId },
}

impl Deviation {
    pub fn class(&self) -> &'static str {
        match self {
            Deviation::Sybil { .. } => "sybil",
            Deviation::Collude { .. } => "collude",
            Deviation::WithholdPropagation { .. } => "withhold_propagation",
            Deviation::DelayAnswer { .. } => "delay_answer",
        }
    }

    /// Compact parameter string, free of commas.
    pub fn params(&self) -> String {
        let join = |ids: &mut dyn Iterator<Item = &AgentId>| {
            ids.map(|a| a.to_string()).collect::<Vec<_>>().join("-")
        };
        match self {
            Deviation::Sybil { agent, copies } => format!("agent={agent};m={copies}"),
            Deviation::Collude { segment } => format!("segment={}", join(&mut segment.iter())),
            Deviation::WithholdPropagation { agent, dropped } => {
                format!("agent={agent};dropped={}", join(&mut dropped.iter()))
            }
            Deviation::DelayAnswer { agent } => format!("agent={agent}"),
        }
    }

    /// The agents whose summed utility the deviation is judged by.
    pub fn beneficiaries(&self) -> Vec<AgentId> {
        match self {
            Deviation::Sybil { agent, .. }
            | Deviation::WithholdPropagation { agent, .. }
            | Deviation::DelayAnswer { agent } => vec![*agent],
            Deviation::Collude { segment } => segment.clone(),
        }
    }
}

/// Path after agent `j` (1-based) inserts `m` copies of herself directly
/// below her own position. Copies share her id.
pub fn apply_sybil(path: &WinningPath, j: usize, m: usize) -> Result<WinningPath> {
    if j < 1 || j > path.len() {
        return Err(Error::Domain(format!("sybil position {j} outside path of length {}", path.len())));
    }
    if m < 1 {
        return Err(Error::Domain("a Sybil attack needs at least one copy".into()));
    }
    let mut agents = path.agents().to_vec();
    let who = agents[j - 1];
    agents.splice(j..j, std::iter::repeat_n(who, m));
    WinningPath::new(agents)
}

/// Path after positions `j..=j+m` merge into the agent at `j`.
pub fn apply_collusion(path: &WinningPath, j: usize, m: usize) -> Result<WinningPath> {
    if j < 1 {
        return Err(Error::Domain("a colluding segment cannot include the requester".into()));
    }
    if m < 1 {
        return Err(Error::Domain("a colluding segment needs at least two agents".into()));
    }
    if j + m > path.len() {
        return Err(Error::Domain(format!(
            "segment {j}..={} exceeds path of length {}",
            j + m,
            path.len()
        )));
    }
    let mut agents = path.agents().to_vec();
    agents.drain(j..j + m);
    WinningPath::new(agents)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationOutcome {
    pub truthful_utility: f64,
    pub deviating_utility: f64,
    pub gain: f64,
    /// `(j, n, m)` on the truthful path for Sybil and Collude deviations.
    pub path_position: Option<(usize, usize, usize)>,
}

fn on_path(truthful: &Realization, agent: AgentId) -> Result<(&WinningPath, usize)> {
    let path = truthful
        .path
        .as_ref()
        .ok_or_else(|| Error::InapplicableDeviation("no winning path in the truthful episode".into()))?;
    let j = path
        .position(agent)
        .ok_or_else(|| Error::InapplicableDeviation(format!("agent {agent} is not on the winning path")))?;
    Ok((path, j))
}

/// Evaluates `deviation` against an already computed truthful realization
/// of `tree` under the same tie-break seed.
pub fn evaluate_against(
    mech: &Mechanism,
    tree: &QueryTree,
    truthful: &Realization,
    deviation: &Deviation,
    tie_seed: u64,
) -> Result<DeviationOutcome> {
    let who = deviation.beneficiaries();
    let truthful_utility = truthful.allocation.group(&who);
    let (deviating_utility, path_position) = match deviation {
        Deviation::Sybil { agent, copies } => {
            let (path, j) = on_path(truthful, *agent)?;
            let forged = apply_sybil(path, j, *copies)?;
            let alloc = mech.allocate(&forged)?;
            (alloc.get(*agent), Some((j, path.len(), *copies)))
        }
        Deviation::Collude { segment } => {
            if segment.len() < 2 {
                return Err(Error::InapplicableDeviation("colluding segment needs two agents".into()));
            }
            let (path, j) = on_path(truthful, segment[0])?;
            let contiguous = segment
                .iter()
                .enumerate()
                .all(|(k, a)| path.agents().get(j - 1 + k) == Some(a));
            if !contiguous {
                return Err(Error::InapplicableDeviation(
                    "colluding agents must form a contiguous winning-path segment".into(),
                ));
            }
            let m = segment.len() - 1;
            let merged = apply_collusion(path, j, m)?;
            let alloc = mech.allocate(&merged)?;
            (alloc.group(segment), Some((j, path.len(), m)))
        }
        Deviation::WithholdPropagation { agent, dropped } => {
            let profile = StrategyProfile::truthful().with(*agent, Behavior::Withhold(dropped.clone()));
            let (_, alloc) = settle_on_tree(mech, tree, &profile, tie_seed)?;
            (alloc.get(*agent), None)
        }
        Deviation::DelayAnswer { agent } => {
            let profile = StrategyProfile::truthful().with(*agent, Behavior::DelayAnswer);
            let (_, alloc) = settle_on_tree(mech, tree, &profile, tie_seed)?;
            (alloc.get(*agent), None)
        }
    };
    Ok(DeviationOutcome {
        truthful_utility,
        deviating_utility,
        gain: deviating_utility - truthful_utility,
        path_position,
    })
}

/// Deviating minus truthful utility of the deviator (group sum for
/// collusion) on `tree`.
pub fn evaluate_deviation(
    mech: &Mechanism,
    tree: &QueryTree,
    deviation: &Deviation,
    rng_seed: u64,
) -> Result<DeviationOutcome> {
    let truthful = run_on_tree(mech, tree, &StrategyProfile::truthful(), rng_seed)?;
    evaluate_against(mech, tree, &truthful, deviation, rng_seed)
}
