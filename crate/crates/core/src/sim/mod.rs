//! Query-network simulation: tree generation, propagation under agent
//! strategies, winner selection and settlement.
//!
//! Each episode seed drives two independent ChaCha streams: stream 0 samples
//! the network, stream 1 assigns every agent a tie-break priority. Winner
//! ties among minimal-depth holders go to the smallest priority, so removing
//! a losing candidate never changes the winner.

mod episode;
mod generate;
mod tree;

pub use episode::{
    episode_seed, run_episode, run_on_tree, select_winner, settle_on_tree, simulate_batch, winning_path, write_episodes_csv,
    Behavior, EpisodeResult, EpisodeRow, Realization, StrategyProfile, TieBreak, EPISODES_HEADER,
};
pub use generate::{generate_tree, GenConfig, GENERATION_RETRY_CAP};
pub use tree::{Node, QueryTree};

/// Stream used for network sampling.
pub(crate) const TREE_STREAM: u64 = 0;
/// Stream used for tie-break priorities.
pub(crate) const TIE_STREAM: u64 = 1;
