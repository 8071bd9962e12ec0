//! Constructive characterization results.
//!
//! * [`derive_unique_mechanism`] rebuilds the only mechanism compatible with
//!   the split identities, split security and the base condition
//!   `x(1,2) = rho x(2,2)`, row by row from `x(1,1) = delta`.
//! * [`classify_two_headed`] and [`verify_interior_zero`] reproduce the
//!   forcing argument behind the two-headed family.
//! * [`min_cost_search`] is a brute-force grid oracle for the minimum-cost
//!   time-critical mechanism.

use std::io::{self, Write};

use crate::checker::{check_lambda_cp, check_sp, CheckRange, PropertyReport, Witness};
use crate::error::{Error, Result};
use crate::mechanism::{DoubleGeometric, Mechanism, RewardFunction, Table};

/// Largest `n_max` accepted by [`min_cost_search`].
pub const MIN_COST_MAX_N: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct DerivationResult {
    pub table: Table,
    pub implied_alpha: f64,
    pub matches_dgm: bool,
    /// Largest `|table(j,n) - dgm(j,n)|` over the table.
    pub max_abs_deviation: f64,
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta must be positive and finite, got {delta}")))
    }
}

/// Builds the table forced by the base condition: every row keeps the
/// neighbour ratio `rho`, so `x(j, n+1) = rho/(1+rho) x(j, n)` and the new
/// winner entry is `x(n+1, n+1) = 1/(1+rho) x(n, n)`.
pub fn derive_unique_mechanism(rho: f64, delta: f64, n_max: usize) -> Result<DerivationResult> {
    check_open_unit("rho", rho)?;
    check_delta(delta)?;
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    let stay = rho / (1.0 + rho);
    let descend = 1.0 / (1.0 + rho);

    let mut rows: Vec<Vec<f64>> = vec![vec![delta]];
    while rows.len() < n_max {
        let prev = rows.last().expect("non-empty");
        let mut next: Vec<f64> = prev.iter().map(|x| stay * x).collect();
        next.push(descend * prev[prev.len() - 1]);
        rows.push(next);
    }
    let table = Table::from_rows(rows)?;

    let implied_alpha = stay;
    let dgm = DoubleGeometric::new(implied_alpha, delta)?;
    let max_abs_deviation = (1..=n_max)
        .flat_map(|n| (1..=n).map(move |j| (j, n)))
        .map(|(j, n)| (table.value(j, n) - dgm.value(j, n)).abs())
        .fold(0.0, f64::max);
    Ok(DerivationResult {
        table,
        implied_alpha,
        matches_dgm: max_abs_deviation <= 1e-12 * delta.max(1.0),
        max_abs_deviation,
    })
}

/// Returns `(a, b)` when the table is two-headed within `tolerance`:
/// `x(1,n) = a`, `x(n,n) = b` for `n >= 2`, interior entries zero and
/// `x(1,1) = a + b`.
pub fn classify_two_headed(table: &Table, tolerance: f64) -> Option<(f64, f64)> {
    if table.n_max() < 2 {
        return None;
    }
    let a = table.value(1, 2);
    let b = table.value(2, 2);
    let close = |x: f64, y: f64| (x - y).abs() <= tolerance * 1f64.max(x.abs()).max(y.abs());
    if !close(table.value(1, 1), a + b) {
        return None;
    }
    for n in 2..=table.n_max() {
        if !close(table.value(1, n), a) || !close(table.value(n, n), b) {
            return None;
        }
        if (2..n).any(|j| table.value(j, n).abs() > tolerance) {
            return None;
        }
    }
    Some((a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InteriorZero {
    /// The table fails SP or lambda-CP, so the forcing argument does not apply.
    Inapplicable { failed: PropertyReport },
    Checked(PropertyReport),
}

impl InteriorZero {
    pub fn holds(&self) -> Option<bool> {
        match self {
            InteriorZero::Inapplicable { .. } => None,
            InteriorZero::Checked(r) => Some(r.holds),
        }
    }
}

/// For a table that is SP and lambda-CP on `range`, checks that every entry
/// `x(j+k, n+lambda-1)`, `1 <= k <= lambda-2`, covered by the lambda-CP
/// sweep is zero, i.e. `|x| <= tolerance * max(1, |x(j, n)|)`.
pub fn verify_interior_zero(table: &Table, lambda: usize, range: &CheckRange) -> Result<InteriorZero> {
    if lambda < 3 {
        return Err(Error::InvalidParameter(format!(
            "interior-zero check needs lambda >= 3, got {lambda}"
        )));
    }
    let mech = Mechanism::new(table.clone());
    let sp = check_sp(&mech, range)?;
    if !sp.holds {
        return Ok(InteriorZero::Inapplicable { failed: sp });
    }
    let cp = check_lambda_cp(&mech, lambda, range)?;
    if !cp.holds {
        return Ok(InteriorZero::Inapplicable { failed: cp });
    }

    let range = range.effective_for(&mech)?;
    let longer = lambda - 1;
    let mut witness = None;
    let mut worst: f64 = 0.0;
    if range.n_max + 2 >= 2 * lambda {
        for j in 1..=(range.n_max + 2 - 2 * lambda) {
            for n in (j + lambda - 1)..=(range.n_max - longer) {
                let scale = 1f64.max(table.value(j, n).abs());
                for k in 1..=(lambda - 2) {
                    let v = table.value(j + k, n + longer).abs() / scale;
                    worst = worst.max(v);
                    if v > range.tolerance && witness.is_none() {
                        witness = Some(Witness::at(j + k, n + longer).with_lambda(lambda));
                    }
                }
            }
        }
    }
    Ok(InteriorZero::Checked(PropertyReport {
        property: format!("interior-zero@{lambda}"),
        holds: witness.is_none(),
        range,
        witness,
        margin: if worst == 0.0 { 0.0 } else { -worst },
    }))
}

/// `n delta / 2^(n-1)`, the least total any eligible mechanism can pay on a
/// path of length `n`.
pub fn cost_lower_bound(n: usize, delta: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("cost_lower_bound requires n >= 1".into()));
    }
    check_delta(delta)?;
    Ok(n as f64 * delta / 2f64.powi(n as i32 - 1))
}

/// Path totals `R_n`, `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCurve {
    totals: Vec<f64>,
}

impl CostCurve {
    pub fn of(mech: &Mechanism, n_max: usize) -> Result<Self> {
        let totals = (1..=n_max).map(|n| mech.total_cost(n)).collect::<Result<_>>()?;
        Ok(CostCurve { totals })
    }

    pub fn from_totals(totals: Vec<f64>) -> Self {
        CostCurve { totals }
    }

    /// `R_n` (1-based).
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.totals.get(i)).copied()
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    pub fn n_max(&self) -> usize {
        self.totals.len()
    }

    /// Header `n,R_n,lower_bound` and one row per `n`.
    pub fn write_csv<W: Write>(&self, out: &mut W, delta: f64) -> io::Result<()> {
        writeln!(out, "n,R_n,lower_bound")?;
        for (i, r) in self.totals.iter().enumerate() {
            let n = i + 1;
            let bound = n as f64 * delta / 2f64.powi(n as i32 - 1);
            writeln!(out, "{n},{r:?},{bound:?}")?;
        }
        Ok(())
    }
}

/// `2 R_{n+1} - R_n - x(1, n+1) - x(n+1, n+1)`, zero for every mechanism
/// satisfying the split identity with equality.
pub fn cost_recurrence_residual(mech: &Mechanism, n: usize) -> Result<f64> {
    Ok(2.0 * mech.total_cost(n + 1)?
        - mech.total_cost(n)?
        - mech.reward(1, n + 1)?
        - mech.reward(n + 1, n + 1)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCostResult {
    /// Minimizer of `R_{n_max}`; ties go to the lexicographically smallest
    /// ratio vector.
    pub table: Table,
    /// Per-`n` minimum of `R_n` over all feasible tables of depth `n`.
    pub curve: CostCurve,
    /// First-entry ratios `x(1,n)/x(2,n)` of `table`, rows `2..=n_max`.
    pub gammas: Vec<f64>,
    /// Feasible partial tables visited.
    pub visited: usize,
}

const RATIO_SLACK: f64 = 1e-12;

fn ratio_grid(rho: f64, step: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let g = rho + k as f64 * step;
        if g >= 1.0 - RATIO_SLACK {
            grid.push(1.0);
            break;
        }
        grid.push(g);
        k += 1;
    }
    grid
}

/// Next row from the previous one given its first ratio `gamma`, using the
/// split identities `x(j, n) = x(j, n+1) + x(j+1, n+1)` with equality.
/// Returns `None` unless every entry is positive and every neighbour ratio
/// lies in `[rho, 1]`.
fn extend_row(prev: &[f64], gamma: f64, rho: f64) -> Option<Vec<f64>> {
    let n = prev.len();
    let mut row = Vec::with_capacity(n + 1);
    let second = prev[0] / (1.0 + gamma);
    row.push(gamma * second);
    row.push(second);
    for k in 1..n {
        let next = prev[k] - row[k];
        row.push(next);
    }
    if row.iter().any(|x| !(*x > 0.0)) {
        return None;
    }
    let ok = row.windows(2).all(|w| {
        let r = w[0] / w[1];
        r >= rho - RATIO_SLACK && r <= 1.0 + RATIO_SLACK
    });
    ok.then_some(row)
}

struct Search {
    rho: f64,
    n_max: usize,
    grid: Vec<f64>,
    best: Vec<f64>,
    best_full: Option<(Vec<Vec<f64>>, Vec<f64>)>,
    visited: usize,
}

impl Search {
    fn descend(&mut self, rows: &mut Vec<Vec<f64>>, gammas: &mut Vec<f64>) {
        let n = rows.len();
        let total: f64 = rows[n - 1].iter().sum();
        self.visited += 1;
        if total < self.best[n - 1] {
            self.best[n - 1] = total;
        }
        if n == self.n_max {
            let better = match &self.best_full {
                None => true,
                Some((best_rows, _)) => total < best_rows[n - 1].iter().sum::<f64>(),
            };
            if better {
                self.best_full = Some((rows.clone(), gammas.clone()));
            }
            return;
        }
        for gi in 0..self.grid.len() {
            let gamma = self.grid[gi];
            if let Some(row) = extend_row(&rows[n - 1], gamma, self.rho) {
                rows.push(row);
                gammas.push(gamma);
                self.descend(rows, gammas);
                rows.pop();
                gammas.pop();
            }
        }
    }
}

/// Enumerates tables with `x(1,1) = delta` that satisfy the split
/// identities with equality, strict positivity, and neighbour ratios in
/// `[rho, 1]` (split security plus time-criticality). Each row is
/// parameterized by its first ratio on a uniform grid over `[rho, 1]`.
pub fn min_cost_search(rho: f64, delta: f64, n_max: usize, grid_step: f64) -> Result<MinCostResult> {
    check_open_unit("rho", rho)?;
    check_delta(delta)?;
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    if n_max > MIN_COST_MAX_N {
        return Err(Error::InvalidParameter(format!(
            "min_cost_search is a brute-force oracle limited to n_max <= {MIN_COST_MAX_N}, got {n_max}"
        )));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid_step must be positive, got {grid_step}")));
    }
    let mut search = Search {
        rho,
        n_max,
        grid: ratio_grid(rho, grid_step),
        best: vec![f64::INFINITY; n_max],
        best_full: None,
        visited: 0,
    };
    search.descend(&mut vec![vec![delta]], &mut Vec::new());
    let (rows, gammas) = search
        .best_full
        .ok_or_else(|| Error::Domain("no feasible table on the ratio grid".into()))?;
    Ok(MinCostResult {
        table: Table::from_rows(rows)?,
        curve: CostCurve::from_totals(search.best),
        gammas,
        visited: search.visited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{check_rho_ss, check_sir, check_lambda_cp};

    #[test]
    fn derive_examples() {
        let d = derive_unique_mechanism(0.5, 1.0, 2).unwrap();
        assert!((d.table.value(1, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.table.value(2, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.implied_alpha - 1.0 / 3.0).abs() < 1e-15);
        assert!(d.matches_dgm);
        let single = derive_unique_mechanism(0.3, 2.5, 1).unwrap();
        assert_eq!(single.table.rows(), &[vec![2.5]]);
        assert!(derive_unique_mechanism(1.0, 1.0, 3).is_err());
        assert!(derive_unique_mechanism(0.0, 1.0, 3).is_err());
        assert!(derive_unique_mechanism(0.5, 0.0, 3).is_err());
        assert!(derive_unique_mechanism(1.0 - 1e-9, 1.0, 3).is_ok());
    }

    #[test]
    fn derived_table_keeps_properties() {
        let range = CheckRange::default();
        for rho in [0.2, 0.5, 0.8] {
            let d = derive_unique_mechanism(rho, 1.0, 25).unwrap();
            let m = Mechanism::new(d.table);
            assert!(check_sp(&m, &range).unwrap().margin >= -1e-12);
            assert!(check_lambda_cp(&m, 2, &range).unwrap().margin >= -1e-12);
            assert!(check_sir(&m, &range).unwrap().holds);
            assert!(check_rho_ss(&m, rho, &range).unwrap().margin >= -1e-12);
            for n in 1..24 {
                assert!(cost_recurrence_residual(&m, n).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn classify_examples() {
        let t = Mechanism::two_headed(2.0, 3.0).unwrap().tabulate(20).unwrap();
        assert_eq!(classify_two_headed(&t, 1e-9), Some((2.0, 3.0)));
        let d = Mechanism::dgm(0.4, 1.0).unwrap().tabulate(20).unwrap();
        assert_eq!(classify_two_headed(&d, 1e-9), None);
        let z = Table::from_fn(20, |_, _| 0.0).unwrap();
        assert_eq!(classify_two_headed(&z, 1e-9), Some((0.0, 0.0)));
        let one = Table::from_rows(vec![vec![1.0]]).unwrap();
        assert_eq!(classify_two_headed(&one, 1e-9), None);
    }

    #[test]
    fn interior_zero_examples() {
        let range = CheckRange::new(20, 10, 1e-9).unwrap();
        let t = Mechanism::two_headed(1.0, 2.0).unwrap().tabulate(20).unwrap();
        assert_eq!(verify_interior_zero(&t, 3, &range).unwrap().holds(), Some(true));
        let d = Mechanism::dgm(1.0 / 3.0, 1.0).unwrap().tabulate(20).unwrap();
        assert!(matches!(
            verify_interior_zero(&d, 3, &range).unwrap(),
            InteriorZero::Inapplicable { .. }
        ));
        let z = Table::from_fn(20, |_, _| 0.0).unwrap();
        assert_eq!(verify_interior_zero(&z, 5, &range).unwrap().holds(), Some(true));
        assert!(verify_interior_zero(&z, 2, &range).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(cost_lower_bound(1, 1.0).unwrap(), 1.0);
        assert_eq!(cost_lower_bound(4, 1.0).unwrap(), 0.5);
        let half = Mechanism::dgm(0.5, 1.0).unwrap();
        for n in 1..=50 {
            let lb = cost_lower_bound(n, 1.0).unwrap();
            assert!((half.total_cost(n).unwrap() - lb).abs() <= 1e-12 * lb.max(1e-300));
        }
    }

    #[test]
    fn min_cost_near_uniform_rows_for_rho_close_to_one() {
        let r = min_cost_search(0.9, 1.0, 4, 0.01).unwrap();
        assert!((r.curve.get(2).unwrap() - 1.0).abs() < 1e-12);
        assert!((r.curve.get(3).unwrap() - 0.75).abs() < 0.02);
        assert!((r.curve.get(4).unwrap() - 0.5).abs() < 0.02);
        assert!(min_cost_search(0.9, 1.0, 7, 0.01).is_err());
        assert!(min_cost_search(0.9, 1.0, 4, 0.0).is_err());
        assert!(min_cost_search(1.0, 1.0, 4, 0.1).is_err());
    }

    #[test]
    fn min_cost_finds_tables_cheaper_than_uniform_rows() {
        // rho = 1/2: row 2 = (3/7, 4/7), row 3 = (1/7, 2/7, 2/7) is feasible
        // and pays 5/7 < 3/4 at n = 3
        let r = min_cost_search(0.5, 1.0, 3, 0.05).unwrap();
        assert!((r.curve.get(3).unwrap() - 5.0 / 7.0).abs() < 1e-12);
        assert_eq!(r.gammas, vec![0.75, 0.5]);
        let m = Mechanism::new(r.table.clone());
        let range = CheckRange::default();
        assert!(check_sp(&m, &range).unwrap().holds);
        assert!(check_lambda_cp(&m, 2, &range).unwrap().holds);
        assert!(check_sir(&m, &range).unwrap().holds);
        assert!(check_rho_ss(&m, 0.5, &range).unwrap().holds);
        assert!(crate::checker::check_time_critical(&m, &range).unwrap().holds);
        assert!(r.curve.get(3).unwrap() < cost_lower_bound(3, 1.0).unwrap());
    }

    #[test]
    fn ratio_grid_includes_endpoints() {
        let g = ratio_grid(0.9, 0.01);
        assert_eq!(g.first(), Some(&0.9));
        assert_eq!(g.last(), Some(&1.0));
        assert_eq!(g.len(), 11);
        let g = ratio_grid(0.5, 0.3);
        assert_eq!(g, vec![0.5, 0.8, 1.0]);
    }

    #[test]
    fn curve_csv() {
        let c = CostCurve::of(&Mechanism::dgm(0.5, 1.0).unwrap(), 3).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf, 1.0).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,R_n,lower_bound\n1,1.0,1.0\n2,1.0,1.0\n3,0.75,0.75\n");
    }
}
