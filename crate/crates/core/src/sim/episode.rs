use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{self, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{generate_tree, GenConfig, QueryTree, TIE_STREAM};
use crate::error::{Error, Result};
use crate::mechanism::{AgentId, Allocation, Mechanism, WinningPath};

/// What an agent does once the query reaches her.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Behavior {
    /// Answer if holding, otherwise forward to every child.
    Truthful,
    /// Forward to every child except these.
    Withhold(BTreeSet<AgentId>),
    /// Holder forwards the query instead of answering.
    DelayAnswer,
}

/// Per-agent behaviour; agents not listed are truthful.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StrategyProfile {
    deviations: BTreeMap<AgentId, Behavior>,
}

impl StrategyProfile {
    pub fn truthful() -> Self {
        Self::default()
    }

    pub fn with(mut self, agent: AgentId, behavior: Behavior) -> Self {
        match behavior {
            Behavior::Truthful => {
                self.deviations.remove(&agent);
            }
            b => {
                self.deviations.insert(agent, b);
            }
        }
        self
    }

    pub fn behavior(&self, agent: AgentId) -> &Behavior {
        self.deviations.get(&agent).unwrap_or(&Behavior::Truthful)
    }

    pub fn is_truthful(&self) -> bool {
        self.deviations.is_empty()
    }

    fn validate(&self, tree: &QueryTree) -> Result<()> {
        for (agent, behavior) in &self.deviations {
            let node = tree
                .node(*agent)
                .ok_or_else(|| Error::InapplicableDeviation(format!("agent {agent} is not in the tree")))?;
            match behavior {
                Behavior::Truthful => {}
                Behavior::Withhold(dropped) => {
                    if dropped.is_empty() {
                        return Err(Error::InapplicableDeviation(format!(
                            "agent {agent} withholds from an empty set"
                        )));
                    }
                    if let Some(c) = dropped.iter().find(|c| !node.children.contains(c)) {
                        return Err(Error::InapplicableDeviation(format!(
                            "{c} is not a child of {agent}"
                        )));
                    }
                }
                Behavior::DelayAnswer => {
                    if !node.holds_answer {
                        return Err(Error::InapplicableDeviation(format!(
                            "agent {agent} has no answer to delay"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-agent tie-break priorities drawn from the episode's tie stream,
/// addressed by agent id so they do not depend on which agents are reached.
#[derive(Debug, Clone)]
pub struct TieBreak {
    rng: ChaCha8Rng,
}

impl TieBreak {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(TIE_STREAM);
        TieBreak { rng }
    }

    pub fn priority(&self, agent: AgentId) -> u64 {
        let mut rng = self.rng.clone();
        rng.set_word_pos(2 * u128::from(agent.0));
        rng.next_u64()
    }
}

fn select_with(tree: &QueryTree, ties: &TieBreak) -> Option<AgentId> {
    let min_depth = tree.holders().map(|n| n.depth).min()?;
    tree.holders()
        .filter(|n| n.depth == min_depth)
        .min_by_key(|n| (ties.priority(n.id), n.id))
        .map(|n| n.id)
}

/// A holder of minimal depth; ties are broken uniformly by the seeded
/// priorities.
pub fn select_winner(tree: &QueryTree, rng_seed: u64) -> Result<AgentId> {
    select_with(tree, &TieBreak::new(rng_seed))
        .ok_or_else(|| Error::Domain("no agent in the tree holds the answer".into()))
}

/// Root-to-winner path, requester excluded.
pub fn winning_path(tree: &QueryTree, winner: AgentId) -> Result<WinningPath> {
    if !tree.contains(winner) {
        return Err(Error::Domain(format!("winner {winner} is not in the tree")));
    }
    if winner == tree.root() {
        return Err(Error::Domain("the requester cannot be the winner".into()));
    }
    let mut agents = Vec::new();
    let mut cur = winner;
    while cur != tree.root() {
        agents.push(cur);
        cur = tree.parent(cur).expect("non-root nodes have parents");
    }
    agents.reverse();
    WinningPath::new(agents)
}

/// The outcome of propagating a query through a fixed network.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    /// Agents the query reached; `holds_answer` marks agents that answered.
    pub realized_tree: QueryTree,
    pub winner: Option<AgentId>,
    pub path: Option<WinningPath>,
    pub allocation: Allocation,
}

impl Realization {
    /// Winning path length, 0 when no answer was delivered.
    pub fn path_length(&self) -> usize {
        self.path.as_ref().map_or(0, WinningPath::len)
    }
}

fn realize(tree: &QueryTree, profile: &StrategyProfile) -> Result<QueryTree> {
    let mut records = Vec::new();
    let mut queue = VecDeque::from([tree.root()]);
    while let Some(id) = queue.pop_front() {
        let node = tree.node(id).expect("reached nodes exist");
        let behavior = if id == tree.root() { &Behavior::Truthful } else { profile.behavior(id) };
        let answers = node.holds_answer && *behavior != Behavior::DelayAnswer;
        records.push((id, node.parent, answers));
        if answers {
            continue;
        }
        for &c in &node.children {
            if let Behavior::Withhold(dropped) = behavior {
                if dropped.contains(&c) {
                    continue;
                }
            }
            queue.push_back(c);
        }
    }
    QueryTree::from_records(tree.root(), records)
}

/// Propagates the query under `profile`, selects the winner among agents
/// that answered and settles rewards.
pub fn run_on_tree(
    mech: &Mechanism,
    tree: &QueryTree,
    profile: &StrategyProfile,
    tie_seed: u64,
) -> Result<Realization> {
    profile.validate(tree)?;
    let realized_tree = realize(tree, profile)?;
    let winner = select_with(&realized_tree, &TieBreak::new(tie_seed));
    let (path, allocation) = match winner {
        Some(w) => {
            let path = winning_path(&realized_tree, w)?;
            let allocation = mech.allocate(&path)?;
            (Some(path), allocation)
        }
        None => (None, Allocation::default()),
    };
    Ok(Realization { realized_tree, winner, path, allocation })
}

/// Winner and rewards under `profile` without materializing the realized
/// tree. Propagation stops at the first depth where someone answers.
pub fn settle_on_tree(
    mech: &Mechanism,
    tree: &QueryTree,
    profile: &StrategyProfile,
    tie_seed: u64,
) -> Result<(Option<WinningPath>, Allocation)> {
    profile.validate(tree)?;
    let ties = TieBreak::new(tie_seed);
    let mut level = vec![tree.root()];
    while !level.is_empty() {
        let mut answered: Option<(u64, AgentId)> = None;
        let mut next = Vec::new();
        for &id in &level {
            let node = tree.node(id).expect("reached nodes exist");
            let behavior = if id == tree.root() { &Behavior::Truthful } else { profile.behavior(id) };
            if node.holds_answer && *behavior != Behavior::DelayAnswer {
                let key = (ties.priority(id), id);
                answered = Some(answered.map_or(key, |k| k.min(key)));
                continue;
            }
            match behavior {
                Behavior::Withhold(dropped) => {
                    next.extend(node.children.iter().filter(|c| !dropped.contains(c)).copied())
                }
                _ => next.extend_from_slice(&node.children),
            }
        }
        if let Some((_, w)) = answered {
            let path = winning_path(tree, w)?;
            let allocation = mech.allocate(&path)?;
            return Ok((Some(path), allocation));
        }
        level = next;
    }
    Ok((None, Allocation::default()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    /// The sampled network before any strategy is applied.
    pub network: QueryTree,
    pub outcome: Realization,
}

/// Samples a network from `cfg` and runs one episode on it.
pub fn run_episode(mech: &Mechanism, cfg: &GenConfig, profile: &StrategyProfile) -> Result<EpisodeResult> {
    let network = generate_tree(cfg)?;
    let outcome = run_on_tree(mech, &network, profile, cfg.seed)?;
    Ok(EpisodeResult { seed: cfg.seed, network, outcome })
}

pub const EPISODES_HEADER: &str = "episode,seed,n,winner_depth,total_paid,mechanism";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    pub n: usize,
    pub winner_depth: usize,
    pub total_paid: f64,
    pub mechanism: String,
}

/// Episode seed for index `i` of a batch started at `base_seed`.
pub fn episode_seed(base_seed: u64, i: usize) -> u64 {
    base_seed.wrapping_add(i as u64)
}

/// Runs `episodes` all-truthful episodes with seeds `cfg.seed + i`.
pub fn simulate_batch(mech: &Mechanism, cfg: &GenConfig, episodes: usize) -> Result<Vec<EpisodeRow>> {
    cfg.validate()?;
    let label = mech.label();
    (0..episodes)
        .into_par_iter()
        .map(|i| {
            let seed = episode_seed(cfg.seed, i);
            let ep = run_episode(mech, &cfg.with_seed(seed), &StrategyProfile::truthful())?;
            let winner_depth = ep
                .outcome
                .winner
                .and_then(|w| ep.outcome.realized_tree.depth(w))
                .unwrap_or(0);
            Ok(EpisodeRow {
                episode: i,
                seed,
                n: ep.outcome.path_length(),
                winner_depth,
                total_paid: ep.outcome.allocation.total(),
                mechanism: label.clone(),
            })
        })
        .collect()
}

pub fn write_episodes_csv<W: Write>(out: &mut W, rows: &[EpisodeRow]) -> io::Result<()> {
    writeln!(out, "{EPISODES_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:?},{}",
            r.episode, r.seed, r.n, r.winner_depth, r.total_paid, r.mechanism
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(i: u32) -> AgentId {
        AgentId(i)
    }

    fn tree(records: &[(u32, Option<u32>, bool)]) -> QueryTree {
        QueryTree::from_records(a(0), records.iter().map(|(i, p, h)| (a(*i), p.map(a), *h))).unwrap()
    }

    #[test]
    fn shallowest_holder_wins() {
        // 0 -> 1 -> 2(h), 0 -> 3 -> 4 -> 5(h)
        let t = tree(&[(0, None, false), (1, Some(0), false), (2, Some(1), true), (3, Some(0), false), (4, Some(3), false), (5, Some(4), true)]);
        for seed in 0..20 {
            assert_eq!(select_winner(&t, seed).unwrap(), a(2));
        }
        let single = tree(&[(0, None, false), (1, Some(0), true)]);
        assert_eq!(select_winner(&single, 99).unwrap(), a(1));
        let none = tree(&[(0, None, false), (1, Some(0), false)]);
        assert!(select_winner(&none, 0).is_err());
    }

    #[test]
    fn ties_are_uniform() {
        // binomial(10000, 1/2): sd = 50, 3 sd band = +-150; accept +-300
        let t = tree(&[(0, None, false), (1, Some(0), false), (2, Some(0), false), (3, Some(1), true), (4, Some(2), true)]);
        let first = (0..10_000u64).filter(|s| select_winner(&t, *s).unwrap() == a(3)).count();
        assert!((4_700..=5_300).contains(&first), "{first}");
    }

    #[test]
    fn path_reconstruction() {
        let chain = tree(&[(0, None, false), (1, Some(0), false), (2, Some(1), false), (3, Some(2), true)]);
        let p = winning_path(&chain, a(3)).unwrap();
        assert_eq!(p.agents(), &[a(1), a(2), a(3)]);
        assert!(winning_path(&chain, a(0)).is_err());
        assert!(winning_path(&chain, a(9)).is_err());
        assert_eq!(winning_path(&chain, a(1)).unwrap().len(), 1);
    }

    #[test]
    fn paths_match_depth_on_random_trees() {
        let cfg = GenConfig { offspring_mean: 2.0, answer_prob: 0.1, max_depth: 8, max_nodes: 400, seed: 0 };
        for seed in 0..100 {
            let ep = run_episode(&Mechanism::dgm(0.4, 1.0).unwrap(), &cfg.with_seed(seed), &StrategyProfile::truthful()).unwrap();
            let w = ep.outcome.winner.unwrap();
            let path = ep.outcome.path.as_ref().unwrap();
            assert_eq!(path.len(), ep.network.depth(w).unwrap());
            // brute force: walk parents in the network
            let mut back = vec![w];
            while let Some(p) = ep.network.parent(*back.last().unwrap()) {
                back.push(p);
            }
            back.pop();
            back.reverse();
            assert_eq!(path.agents(), back.as_slice());
        }
    }

    #[test]
    fn withholding_can_cut_off_the_answer() {
        let t = tree(&[(0, None, false), (1, Some(0), false), (2, Some(1), true)]);
        let m = Mechanism::dgm(0.4, 1.0).unwrap();
        let profile = StrategyProfile::truthful().with(a(1), Behavior::Withhold([a(2)].into()));
        let r = run_on_tree(&m, &t, &profile, 0).unwrap();
        assert_eq!(r.winner, None);
        assert!(r.allocation.is_empty());
        assert_eq!(r.allocation.total(), 0.0);
    }

    #[test]
    fn delay_exposes_deeper_holders() {
        let t = tree(&[(0, None, false), (1, Some(0), true), (2, Some(1), false), (3, Some(2), true)]);
        let m = Mechanism::dgm(0.4, 1.0).unwrap();
        let truthful = run_on_tree(&m, &t, &StrategyProfile::truthful(), 0).unwrap();
        assert_eq!(truthful.winner, Some(a(1)));
        assert!(!truthful.realized_tree.contains(a(2)));
        let delayed = run_on_tree(&m, &t, &StrategyProfile::truthful().with(a(1), Behavior::DelayAnswer), 0).unwrap();
        assert_eq!(delayed.winner, Some(a(3)));
        assert_eq!(delayed.path_length(), 3);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let t = tree(&[(0, None, false), (1, Some(0), false), (2, Some(1), true)]);
        let m = Mechanism::dgm(0.4, 1.0).unwrap();
        let bad = [
            StrategyProfile::truthful().with(a(1), Behavior::DelayAnswer),
            StrategyProfile::truthful().with(a(1), Behavior::Withhold(BTreeSet::new())),
            StrategyProfile::truthful().with(a(1), Behavior::Withhold([a(0)].into())),
            StrategyProfile::truthful().with(a(8), Behavior::DelayAnswer),
        ];
        for p in bad {
            assert!(matches!(run_on_tree(&m, &t, &p, 0), Err(Error::InapplicableDeviation(_))));
        }
    }

    #[test]
    fn truthful_episodes_conserve_and_minimize() {
        let cfg = GenConfig { offspring_mean: 2.0, answer_prob: 0.1, max_depth: 8, max_nodes: 400, seed: 0 };
        let m = Mechanism::dgm(0.3, 1.0).unwrap();
        for seed in 0..60 {
            let ep = run_episode(&m, &cfg.with_seed(seed), &StrategyProfile::truthful()).unwrap();
            let o = &ep.outcome;
            let n = o.path_length();
            assert!((o.allocation.total() - m.total_cost(n).unwrap()).abs() < 1e-12);
            let path = o.path.as_ref().unwrap();
            for node in ep.network.nodes() {
                if path.position(node.id).is_none() {
                    assert_eq!(o.allocation.get(node.id), 0.0);
                }
            }
            let best = ep.network.holders().map(|h| h.depth).min().unwrap();
            assert_eq!(n, best);
        }
    }

    #[test]
    fn half_dgm_pays_lower_bound() {
        let m = Mechanism::dgm(0.5, 1.0).unwrap();
        let chain = tree(&[(0, None, false), (1, Some(0), false), (2, Some(1), false), (3, Some(2), true)]);
        let r = run_on_tree(&m, &chain, &StrategyProfile::truthful(), 5).unwrap();
        assert_eq!(r.allocation.total(), 0.75);
    }

    #[test]
    fn batch_is_deterministic_and_ordered() {
        let cfg = GenConfig { offspring_mean: 2.0, answer_prob: 0.2, max_depth: 6, max_nodes: 200, seed: 11 };
        let m = Mechanism::dgm(0.5, 1.0).unwrap();
        let a = simulate_batch(&m, &cfg, 30).unwrap();
        let b = simulate_batch(&m, &cfg, 30).unwrap();
        assert_eq!(a, b);
        for (i, row) in a.iter().enumerate() {
            assert_eq!(row.episode, i);
            assert_eq!(row.seed, 11 + i as u64);
            let expected = row.n as f64 / 2f64.powi(row.n as i32 - 1);
            assert!((row.total_paid - expected).abs() < 1e-12);
        }
    }
}
