use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{QueryTree, TREE_STREAM};
use crate::error::{Error, Result};
use crate::mechanism::AgentId;

/// Rejection-sampling attempts before generation gives up.
pub const GENERATION_RETRY_CAP: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    /// Mean of the Poisson offspring distribution.
    pub offspring_mean: f64,
    /// Probability that a non-root agent holds the answer.
    pub answer_prob: f64,
    pub max_depth: usize,
    /// Node cap, requester included.
    pub max_nodes: usize,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.offspring_mean > 0.0 && self.offspring_mean.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "offspring_mean must be positive, got {}",
                self.offspring_mean
            )));
        }
        if !(self.answer_prob > 0.0 && self.answer_prob <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "answer_prob must lie in (0, 1], got {}",
                self.answer_prob
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        if self.max_nodes < 2 {
            return Err(Error::InvalidParameter(format!("max_nodes must be >= 2, got {}", self.max_nodes)));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GenConfig { seed, ..self }
    }
}

fn sample_once(cfg: &GenConfig, offspring: &Poisson<f64>, rng: &mut ChaCha8Rng) -> Vec<(AgentId, Option<AgentId>, bool)> {
    let mut records = vec![(AgentId(0), None, false)];
    let mut queue = VecDeque::from([(AgentId(0), 0usize)]);
    let mut next = 1u32;
    while let Some((id, depth)) = queue.pop_front() {
        if depth >= cfg.max_depth {
            continue;
        }
        let k = offspring.sample(rng) as u64;
        for _ in 0..k {
            if next as usize >= cfg.max_nodes {
                break;
            }
            let child = AgentId(next);
            next += 1;
            records.push((child, Some(id), rng.random_bool(cfg.answer_prob)));
            queue.push_back((child, depth + 1));
        }
    }
    records
}

/// Samples a Galton-Watson tree with Poisson offspring, expanded breadth
/// first and truncated at `max_depth` and `max_nodes`. Samples without an
/// answer holder are rejected and redrawn from the same stream.
pub fn generate_tree(cfg: &GenConfig) -> Result<QueryTree> {
    cfg.validate()?;
    let offspring = Poisson::new(cfg.offspring_mean)
        .map_err(|e| Error::InvalidParameter(format!("offspring distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(TREE_STREAM);
    for _ in 0..GENERATION_RETRY_CAP {
        let records = sample_once(cfg, &offspring, &mut rng);
        if records.iter().any(|r| r.2) {
            return QueryTree::from_records(AgentId(0), records);
        }
    }
    Err(Error::GenerationExhausted { retries: GENERATION_RETRY_CAP })
}
