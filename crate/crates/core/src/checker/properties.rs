use super::{check_rho, normalized_slack, CheckRange, PropertyReport, Sweep, Witness};
use crate::error::Result;
use crate::mechanism::Mechanism;

/// Visits `j <= n <= n_max` in lexicographic `(j, n)` order.
fn for_each_entry(
    range: &CheckRange,
    mut f: impl FnMut(usize, usize) -> Result<()>,
) -> Result<()> {
    for j in 1..=range.n_max {
        for n in j..=range.n_max {
            f(j, n)?;
        }
    }
    Ok(())
}

/// Individual rationality: `x(j, n) >= 0`.
pub fn check_ir(mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
    let range = range.effective_for(mech)?;
    let mut sweep = Sweep::new(range.tolerance);
    for_each_entry(&range, |j, n| {
        sweep.ge(mech.reward(j, n)?, 0.0, || Witness::at(j, n));
        Ok(())
    })?;
    Ok(sweep.finish("IR", range))
}

/// Strong individual rationality: every `x(j, n)` strictly positive. No
/// tolerance is applied: geometric mechanisms legitimately pay amounts far
/// below any fixed threshold at long path lengths. The margin is the
/// smallest entry.
pub fn check_sir(mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
    let range = range.effective_for(mech)?;
    let mut min = f64::INFINITY;
    let mut witness = None;
    for_each_entry(&range, |j, n| {
        let x = mech.reward(j, n)?;
        min = min.min(x);
        if !(x > 0.0) && witness.is_none() {
            witness = Some(Witness::at(j, n));
        }
        Ok(())
    })?;
    Ok(PropertyReport {
        property: "SIR".into(),
        holds: witness.is_none(),
        range,
        witness,
        margin: min,
    })
}

/// Local Sybil-proofness condition `x(j, n) >= x(j, n+1) + x(j+1, n+1)`,
/// which is equivalent to resisting chains of any length.
pub fn check_sp(mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
    let range = range.effective_for(mech)?;
    let mut sweep = Sweep::new(range.tolerance);
    for j in 1..range.n_max {
        for n in j..range.n_max {
            let lhs = mech.reward(j, n)?;
            let rhs = mech.reward(j, n + 1)? + mech.reward(j + 1, n + 1)?;
            sweep.ge(lhs, rhs, || Witness::at(j, n));
        }
    }
    Ok(sweep.finish("SP", range))
}

fn lambda_cp_sweep(
    mech: &Mechanism,
    lambda: usize,
    range: &CheckRange,
    name: String,
) -> Result<PropertyReport> {
    let range = range.effective_for(mech)?;
    let mut sweep = Sweep::new(range.tolerance);
    // group size 1 is vacuous
    for size in 2..=lambda {
        let longer = size - 1;
        if range.n_max + 2 < 2 * size {
            break;
        }
        for j in 1..=(range.n_max + 2 - 2 * size) {
            for n in (j + size - 1)..=(range.n_max - longer) {
                let separate: f64 =
                    (0..size).map(|k| mech.reward(j + k, n + longer)).sum::<Result<f64>>()?;
                let merged = mech.reward(j, n)?;
                sweep.ge(separate, merged, || Witness::at(j, n).with_lambda(size));
            }
        }
    }
    Ok(sweep.finish(name, range))
}

/// `x(j, n) <= sum_{k < lambda'} x(j+k, n+lambda'-1)` for every group size
/// `2 <= lambda' <= lambda` and `j <= n - lambda' + 1`.
pub fn check_lambda_cp(mech: &Mechanism, lambda: usize, range: &CheckRange) -> Result<PropertyReport> {
    if lambda < 2 {
        return Err(crate::Error::InvalidParameter(format!(
            "lambda-CP needs lambda >= 2, got {lambda}"
        )));
    }
    lambda_cp_sweep(mech, lambda, range, format!("{lambda}-CP"))
}

/// Collusion-proofness truncated to group sizes up to `m_max + 1`.
pub fn check_cp(mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
    lambda_cp_sweep(mech, range.m_max + 1, range, "CP".into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub report: PropertyReport,
    /// Largest `sum_j x(j, n)` seen; the empirical budget.
    pub max_total: f64,
    /// Path lengths attaining `max_total` within tolerance.
    pub maximizers: Vec<usize>,
}

/// Budget constraint. A finite sweep cannot refute the existence of a bound,
/// so the verdict only fails on non-finite totals or, for mechanisms that
/// promise a bound, when a total exceeds it.
pub fn check_bc(mech: &Mechanism, range: &CheckRange) -> Result<BudgetReport> {
    let range = range.effective_for(mech)?;
    let totals: Vec<f64> = (1..=range.n_max).map(|n| mech.total_cost(n)).collect::<Result<_>>()?;
    let max_total = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = 1f64.max(max_total.abs());
    let maximizers = totals
        .iter()
        .enumerate()
        .filter(|(_, t)| (max_total - **t) <= range.tolerance * scale)
        .map(|(i, _)| i + 1)
        .collect::<Vec<_>>();

    let mut report = match mech.budget_bound() {
        Some(bound) => {
            let mut sweep = Sweep::new(range.tolerance);
            for (i, t) in totals.iter().enumerate() {
                sweep.ge(bound, *t, || Witness { n: Some(i + 1), ..Default::default() });
            }
            sweep.finish("BC", range)
        }
        None => PropertyReport {
            property: "BC".into(),
            holds: true,
            range,
            witness: None,
            margin: 0.0,
        },
    };
    if let Some(i) = totals.iter().position(|t| !t.is_finite()) {
        report.holds = false;
        report.witness = Some(Witness { n: Some(i + 1), ..Default::default() });
        report.margin = f64::NEG_INFINITY;
    }
    Ok(BudgetReport { report, max_total, maximizers })
}

/// Split security: `x(j, n) >= rho * x(j+1, n)` for `j < n`.
pub fn check_rho_ss(mech: &Mechanism, rho: f64, range: &CheckRange) -> Result<PropertyReport> {
    check_rho(rho)?;
    let range = range.effective_for(mech)?;
    let mut sweep = Sweep::new(range.tolerance);
    for j in 1..range.n_max {
        for n in (j + 1)..=range.n_max {
            sweep.ge(mech.reward(j, n)?, rho * mech.reward(j + 1, n)?, || Witness::at(j, n));
        }
    }
    Ok(sweep.finish(format!("rho-SS@{rho}"), range))
}

/// The winner's reward is maximal on the path: `x(n, n) >= x(j, n)`.
pub fn check_time_critical(mech: &Mechanism, range: &CheckRange) -> Result<PropertyReport> {
    let range = range.effective_for(mech)?;
    let mut sweep = Sweep::new(range.tolerance);
    for j in 1..range.n_max {
        for n in (j + 1)..=range.n_max {
            sweep.ge(mech.reward(n, n)?, mech.reward(j, n)?, || Witness::at(j, n));
        }
    }
    Ok(sweep.finish("time-critical", range))
}

/// `x(1, 2) = rho * x(2, 2)`, i.e. `|x(1,2) - rho x(2,2)| <= tol * max(1, x(2,2))`.
pub fn check_base_condition(mech: &Mechanism, rho: f64, range: &CheckRange) -> Result<PropertyReport> {
    check_rho(rho)?;
    let range = range.effective_for(mech)?;
    let first = mech.reward(1, 2)?;
    let winner = mech.reward(2, 2)?;
    let margin = -(first - rho * winner).abs() / 1f64.max(winner.abs());
    let holds = margin >= -range.tolerance;
    Ok(PropertyReport {
        property: format!("base-condition@{rho}"),
        holds,
        range,
        witness: (!holds).then(|| Witness::at(1, 2)),
        margin: if margin == 0.0 { 0.0 } else { margin },
    })
}

/// Allowed collusion gain factor as a function of the merge size `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcpBound {
    /// `beta(m) = 2^m`.
    Exponential,
    /// `beta(m) = c`.
    Constant(f64),
}

impl AcpBound {
    pub fn factor(&self, m: usize) -> f64 {
        match self {
            AcpBound::Exponential => 2f64.powi(m as i32),
            AcpBound::Constant(c) => *c,
        }
    }

    pub fn name(&self) -> String {
        match self {
            AcpBound::Exponential => "2^m-ACP".into(),
            AcpBound::Constant(c) => format!("(1+eps)-ACP@{}", c - 1.0),
        }
    }
}

fn acp_slack(mech: &Mechanism, beta: f64, j: usize, n: usize, m: usize) -> Result<(f64, f64)> {
    let merged = mech.reward(j, n)?;
    let separate: f64 = (0..=m).map(|k| mech.reward(j + k, n + m)).sum::<Result<f64>>()?;
    let ratio = if separate > 0.0 { merged / separate } else { f64::INFINITY };
    Ok((normalized_slack(beta * separate, merged), ratio))
}

/// `x(j, n) <= beta(m) * sum_{k=0..m} x(j+k, n+m)` over `j <= n`,
/// `n + m <= n_max`, `m <= m_max`.
pub fn check_beta_acp(
    mech: &Mechanism,
    beta_of_m: impl Fn(usize) -> f64,
    name: impl Into<String>,
    range: &CheckRange,
) -> Result<PropertyReport> {
    let range = range.effective_for(mech)?;
    let mut sweep = Sweep::new(range.tolerance);
    for j in 1..range.n_max {
        for n in j..range.n_max {
            for m in 1..=range.m_max.min(range.n_max - n) {
                let (slack, _) = acp_slack(mech, beta_of_m(m), j, n, m)?;
                sweep.record(slack, || Witness::at(j, n).with_m(m));
            }
        }
    }
    Ok(sweep.finish(name, range))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcpViolation {
    pub m: usize,
    pub j: usize,
    pub n: usize,
    pub ratio: f64,
}

/// Smallest merge size `m <= m_max` at which some `(j, n)` has collusion
/// ratio above `1 + epsilon`; the lexicographically smallest `(j, n)` is used.
pub fn find_acp_violation(
    mech: &Mechanism,
    epsilon: f64,
    range: &CheckRange,
) -> Result<Option<AcpViolation>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(crate::Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let range = range.effective_for(mech)?;
    for m in 1..=range.m_max.min(range.n_max - 1) {
        for j in 1..=(range.n_max - m) {
            for n in j..=(range.n_max - m) {
                let (slack, ratio) = acp_slack(mech, 1.0 + epsilon, j, n, m)?;
                if slack < -range.tolerance {
                    return Ok(Some(AcpViolation { m, j, n, ratio }));
                }
            }
        }
    }
    Ok(None)
}

/// `(1 + epsilon)`-ACP as a report; holds iff [`find_acp_violation`] finds
/// nothing, and the witness is the violation it finds.
pub fn check_eps_acp(mech: &Mechanism, epsilon: f64, range: &CheckRange) -> Result<PropertyReport> {
    let bound = AcpBound::Constant(1.0 + epsilon);
    let mut report = check_beta_acp(mech, |m| bound.factor(m), format!("(1+eps)-ACP@{epsilon}"), range)?;
    let violation = find_acp_violation(mech, epsilon, range)?;
    report.holds = violation.is_none();
    report.witness = violation.map(|v| Witness::at(v.j, v.n).with_m(v.m));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{acp_ratio, sybil_gain};

    fn range() -> CheckRange {
        CheckRange::default()
    }

    #[test]
    fn ir_and_sir() {
        let d = Mechanism::dgm(0.4, 1.0).unwrap();
        assert!(check_sir(&d, &range()).unwrap().holds);
        let t = Mechanism::two_headed(1.0, 2.0).unwrap();
        let r = check_sir(&t, &range()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(Witness::at(2, 3)));
        assert!(check_ir(&t, &range()).unwrap().holds);
        let neg = Mechanism::table(vec![vec![1.0], vec![-0.5, 1.5]]).unwrap();
        let r = check_ir(&neg, &range()).unwrap();
        assert_eq!(r.witness, Some(Witness::at(1, 2)));
        assert!(r.margin < 0.0);
    }

    #[test]
    fn sp_examples() {
        let r = check_sp(&Mechanism::dgm(0.4, 1.0).unwrap(), &range()).unwrap();
        assert!(r.holds);
        assert!(r.margin.abs() < 1e-12);
        let r = check_sp(&Mechanism::uniform_split(1.0).unwrap(), &range()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(Witness::at(1, 2)));
        assert!((r.margin + 1.0 / 6.0).abs() < 1e-15);
        let r = check_sp(&Mechanism::two_headed(2.0, 3.0).unwrap(), &range()).unwrap();
        assert!(r.holds);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn lambda_cp_examples() {
        for alpha in [0.2, 0.4, 0.6] {
            let r = check_lambda_cp(&Mechanism::dgm(alpha, 1.0).unwrap(), 2, &range()).unwrap();
            assert!(r.holds);
            assert!(r.margin.abs() < 1e-12);
        }
        let third = Mechanism::dgm(1.0 / 3.0, 1.0).unwrap();
        let r = check_lambda_cp(&third, 3, &range()).unwrap();
        assert!(!r.holds);
        let w = r.witness.unwrap();
        assert_eq!(w, Witness::at(1, 3).with_lambda(3));
        // deficit x(j, n) - sum equals x(j+1, n+2)
        let sum: f64 = (0..3).map(|k| third.reward(1 + k, 5).unwrap()).sum();
        let deficit = third.reward(1, 3).unwrap() - sum;
        assert!((deficit - third.reward(2, 5).unwrap()).abs() < 1e-15);
        assert!(deficit > 0.0);
        assert!(check_lambda_cp(&third, 1, &range()).is_err());
        for lambda in 2..8 {
            let t = Mechanism::two_headed(2.0, 3.0).unwrap();
            assert!(check_lambda_cp(&t, lambda, &range()).unwrap().holds);
        }
    }

    #[test]
    fn cp_examples() {
        let r = check_cp(&Mechanism::dgm(0.4, 1.0).unwrap(), &range()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness.unwrap().lambda, Some(3));
        assert!(check_cp(&Mechanism::two_headed(2.0, 3.0).unwrap(), &range()).unwrap().holds);
        let t = Mechanism::new(Mechanism::two_headed(1.0, 1.0).unwrap().tabulate(9).unwrap());
        let r = check_cp(&t, &range()).unwrap();
        assert!(r.holds);
        assert_eq!(r.range.n_max, 9);
    }

    #[test]
    fn bc_examples() {
        let b = check_bc(&Mechanism::dgm(0.4, 1.0).unwrap(), &range()).unwrap();
        assert!(b.report.holds);
        assert!((b.max_total - 1.0).abs() < 1e-15);
        assert_eq!(b.maximizers, vec![1, 2]);
        let b = check_bc(&Mechanism::two_headed(2.0, 3.0).unwrap(), &range()).unwrap();
        assert_eq!(b.max_total, 5.0);
        assert!(b.report.holds);
        let b = check_bc(&Mechanism::uniform_split(1.0).unwrap(), &range()).unwrap();
        assert!((b.max_total - 1.0).abs() < 1e-12);
        // the budget bound also holds above one half
        let b = check_bc(&Mechanism::dgm(0.7, 2.0).unwrap(), &range()).unwrap();
        assert!(b.report.holds);
    }

    #[test]
    fn rho_ss_examples() {
        for rho in [0.2, 0.5, 0.9] {
            let d = Mechanism::dgm(rho / (1.0 + rho), 1.0).unwrap();
            let r = check_rho_ss(&d, rho, &range()).unwrap();
            assert!(r.holds);
            assert!(r.margin.abs() < 1e-12);
        }
        let r = check_rho_ss(&Mechanism::dgm(0.4, 1.0).unwrap(), 0.8, &range()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(Witness::at(1, 2)));
        let r = check_rho_ss(&Mechanism::two_headed(1.0, 1.0).unwrap(), 0.3, &range()).unwrap();
        assert_eq!(r.witness, Some(Witness::at(2, 3)));
        assert!(check_rho_ss(&Mechanism::dgm(0.4, 1.0).unwrap(), 1.0, &range()).is_err());
    }

    #[test]
    fn time_critical_examples() {
        assert!(check_time_critical(&Mechanism::dgm(0.3, 1.0).unwrap(), &range()).unwrap().holds);
        let r = check_time_critical(&Mechanism::dgm(0.6, 1.0).unwrap(), &range()).unwrap();
        assert_eq!(r.witness, Some(Witness::at(1, 2)));
        assert!(check_time_critical(&Mechanism::uniform_split(1.0).unwrap(), &range()).unwrap().holds);
    }

    #[test]
    fn base_condition_examples() {
        let rho = 0.6;
        let d = Mechanism::dgm(rho / (1.0 + rho), 1.0).unwrap();
        assert!(check_base_condition(&d, rho, &range()).unwrap().holds);
        let r = check_base_condition(&Mechanism::dgm(0.5, 1.0).unwrap(), 0.5, &range()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(Witness::at(1, 2)));
        let t = Mechanism::two_headed(rho * 2.0, 2.0).unwrap();
        assert!(check_base_condition(&t, rho, &range()).unwrap().holds);
    }

    #[test]
    fn acp_examples() {
        let r = check_beta_acp(
            &Mechanism::dgm(0.4, 1.0).unwrap(),
            |m| AcpBound::Exponential.factor(m),
            "2^m-ACP",
            &range(),
        )
        .unwrap();
        assert!(r.holds);
        // m = 3: (0.6)^4 - (0.4)^4 = 0.104 >= 0.2 / 8
        let lhs = 0.6f64.powi(4) - 0.4f64.powi(4);
        assert!((lhs - 0.104).abs() < 1e-15 && lhs >= 0.2 / 8.0);

        let third = Mechanism::dgm(1.0 / 3.0, 1.0).unwrap();
        let v = find_acp_violation(&third, 0.1, &range()).unwrap().unwrap();
        assert_eq!((v.m, v.j, v.n), (2, 1, 1));
        assert!((v.ratio - 9.0 / 7.0).abs() < 1e-12);
        let r = check_eps_acp(&third, 0.1, &range()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(Witness::at(1, 1).with_m(2)));
        // two-headed mechanisms are exactly collusion-proof
        let t = Mechanism::two_headed(1.0, 1.0).unwrap();
        assert!(find_acp_violation(&t, 0.01, &range()).unwrap().is_none());
        assert!((acp_ratio(&third, 3, 7, 2).unwrap() - 9.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn zero_denominator_is_a_violation() {
        let t = Mechanism::table(vec![vec![1.0], vec![0.0, 0.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let r = check_beta_acp(&t, |m| AcpBound::Exponential.factor(m), "2^m-ACP", &range()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(Witness::at(1, 1).with_m(1)));
        assert_eq!(acp_ratio(&t, 1, 1, 1).unwrap(), f64::INFINITY);
    }

    #[test]
    fn sp_failure_matches_brute_force() {
        let u = Mechanism::uniform_split(1.0).unwrap();
        assert!(sybil_gain(&u, 1, 2, 1).unwrap() > 1e-9);
    }
}
