//! Reward mechanisms for query incentive networks.
//!
//! A *path mechanism* pays only the agents on the winning path of a query
//! tree, and the payment `x(j, n)` depends only on the agent's depth `j` and
//! the path length `n`. This crate provides:
//!
//! * [`mechanism`]: the [`RewardFunction`](mechanism::RewardFunction) trait,
//!   the built-in mechanisms and a registry that builds them from JSON specs;
//! * [`checker`]: bounded sweeps that certify or refute each incentive
//!   property, with deterministic counterexample witnesses;
//! * [`characterizer`]: constructive derivations (unique mechanism under the
//!   base condition, two-headed classification, minimum-cost grid search);
//! * [`sim`]: Galton-Watson query trees, propagation and winner selection;
//! * [`attack`]: Sybil, collusion and withholding deviations and the
//!   empirical audit loop.

pub mod attack;
pub mod characterizer;
pub mod checker;
pub mod error;
pub mod mechanism;
pub mod sim;

pub use error::{Error, Result};
pub use mechanism::{Allocation, Mechanism, WinningPath};
