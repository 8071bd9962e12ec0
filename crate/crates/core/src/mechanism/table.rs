use serde_json::{json, Value};

use super::RewardFunction;
use crate::error::{Error, Result};

/// Explicit lower-triangular reward table, `rows[n-1][j-1] = x(j, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("table needs at least one row".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(Error::InvalidParameter(format!(
                    "table row for n = {} must have {} entries, found {}",
                    i + 1,
                    i + 1,
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "table entry x({}, {}) is not finite",
                    j + 1,
                    i + 1
                )));
            }
        }
        Ok(Table { rows })
    }

    /// Builds a table by evaluating `f(j, n)` for all `j <= n <= n_max`.
    pub fn from_fn(n_max: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let rows = (1..=n_max)
            .map(|n| (1..=n).map(|j| f(j, n)).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, j: usize, n: usize) -> Option<f64> {
        if j < 1 || j > n {
            return None;
        }
        self.rows.get(n - 1).map(|row| row[j - 1])
    }

    pub fn set(&mut self, j: usize, n: usize, value: f64) {
        self.rows[n - 1][j - 1] = value;
    }
}

impl RewardFunction for Table {
    fn kind(&self) -> &'static str {
        "table"
    }

    fn value(&self, j: usize, n: usize) -> f64 {
        self.rows[n - 1][j - 1]
    }

    fn max_length(&self) -> Option<usize> {
        Some(self.rows.len())
    }

    fn spec(&self) -> Value {
        json!({ "type": "table", "n_max": self.rows.len(), "rows": self.rows })
    }

    fn label(&self) -> String {
        format!("table(n_max={})", self.rows.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_finiteness_validated() {
        assert!(Table::from_rows(vec![]).is_err());
        assert!(Table::from_rows(vec![vec![1.0], vec![0.5]]).is_err());
        assert!(Table::from_rows(vec![vec![f64::INFINITY]]).is_err());
        let t = Table::from_rows(vec![vec![1.0], vec![0.25, 0.75]]).unwrap();
        assert_eq!(t.get(2, 2), Some(0.75));
        assert_eq!(t.get(1, 3), None);
        assert_eq!(t.get(3, 2), None);
    }
}
