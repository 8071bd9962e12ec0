//! Path mechanisms and reward allocation.
//!
//! Every mechanism implements [`RewardFunction`]. [`Mechanism`] is the
//! shared, immutable handle the rest of the crate passes around; it performs
//! the index validation so implementations only see `1 <= j <= n`.

mod dgm;
mod path;
mod registry;
mod table;
mod two_headed;
mod uniform;

use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};

pub use dgm::DoubleGeometric;
pub use path::{AgentId, Allocation, WinningPath};
pub use registry::{MechanismFactory, MechanismRegistry};
pub use table::Table;
pub use two_headed::TwoHeaded;
pub use uniform::UniformSplit;

/// A reward function `x(j, n)` for agents on the winning path.
pub trait RewardFunction: fmt::Debug + Send + Sync {
    /// Registry name, also the `"type"` field of the JSON spec.
    fn kind(&self) -> &'static str;

    /// Reward at depth `j` on a path of length `n`. Callers guarantee
    /// `1 <= j <= n` and `n <= max_length()`.
    fn value(&self, j: usize, n: usize) -> f64;

    /// Largest supported path length, `None` for mechanisms total over all `n`.
    fn max_length(&self) -> Option<usize> {
        None
    }

    /// A bound the mechanism promises on every path total, if any.
    fn budget_bound(&self) -> Option<f64> {
        None
    }

    /// JSON spec that rebuilds this mechanism through the registry.
    fn spec(&self) -> Value;

    /// Short label such as `dgm(alpha=0.4;delta=1)`. Must not contain commas;
    /// it is written unquoted into CSV fields.
    fn label(&self) -> String;
}

/// Shared handle to an immutable mechanism.
#[derive(Clone)]
pub struct Mechanism(Arc<dyn RewardFunction>);

impl fmt::Debug for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.label())
    }
}

impl Mechanism {
    pub fn new<R: RewardFunction + 'static>(inner: R) -> Self {
        Mechanism(Arc::new(inner))
    }

    pub fn dgm(alpha: f64, delta: f64) -> Result<Self> {
        DoubleGeometric::new(alpha, delta).map(Self::new)
    }

    pub fn two_headed(a: f64, b: f64) -> Result<Self> {
        TwoHeaded::new(a, b).map(Self::new)
    }

    pub fn uniform_split(delta: f64) -> Result<Self> {
        UniformSplit::new(delta).map(Self::new)
    }

    pub fn table(rows: Vec<Vec<f64>>) -> Result<Self> {
        Table::from_rows(rows).map(Self::new)
    }

    /// Builds a mechanism from its JSON spec using the built-in registry.
    pub fn from_spec(spec: &Value) -> Result<Self> {
        MechanismRegistry::builtin().build(spec)
    }

    pub fn kind(&self) -> &'static str {
        self.0.kind()
    }

    pub fn max_length(&self) -> Option<usize> {
        self.0.max_length()
    }

    pub fn budget_bound(&self) -> Option<f64> {
        self.0.budget_bound()
    }

    pub fn spec(&self) -> Value {
        self.0.spec()
    }

    pub fn label(&self) -> String {
        self.0.label()
    }

    pub fn inner(&self) -> &dyn RewardFunction {
        self.0.as_ref()
    }

    fn check_length(&self, n: usize) -> Result<()> {
        match self.max_length() {
            Some(n_max) if n > n_max => Err(Error::OutOfRange { n, n_max }),
            _ => Ok(()),
        }
    }

    /// `x(j, n)`.
    pub fn reward(&self, j: usize, n: usize) -> Result<f64> {
        if j < 1 || j > n {
            return Err(Error::Domain(format!(
                "reward requires 1 <= j <= n, got j = {j}, n = {n}"
            )));
        }
        self.check_length(n)?;
        Ok(self.0.value(j, n))
    }

    /// Total payout `sum_j x(j, n)` on a path of length `n`.
    pub fn total_cost(&self, n: usize) -> Result<f64> {
        if n < 1 {
            return Err(Error::Domain("total_cost requires n >= 1".into()));
        }
        self.check_length(n)?;
        Ok((1..=n).map(|j| self.0.value(j, n)).sum())
    }

    /// Pays `x(j, n)` to the agent at position `j`. An identity that appears
    /// several times on the path (Sybil copies) receives the sum.
    pub fn allocate(&self, path: &WinningPath) -> Result<Allocation> {
        let n = path.len();
        if n == 0 {
            return Err(Error::Domain("cannot allocate on an empty path".into()));
        }
        self.check_length(n)?;
        let mut alloc = Allocation::default();
        for (idx, agent) in path.agents().iter().enumerate() {
            alloc.credit(*agent, self.0.value(idx + 1, n));
        }
        Ok(alloc)
    }

    /// Tabulates `x(j, n)` for `n <= n_max` as an explicit table.
    pub fn tabulate(&self, n_max: usize) -> Result<Table> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be positive".into()));
        }
        self.check_length(n_max)?;
        let rows = (1..=n_max)
            .map(|n| (1..=n).map(|j| self.0.value(j, n)).collect())
            .collect();
        Table::from_rows(rows)
    }
}
