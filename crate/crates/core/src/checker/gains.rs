use crate::error::{Error, Result};
use crate::mechanism::Mechanism;

fn segment_sum(mech: &Mechanism, j: usize, n: usize, m: usize) -> Result<f64> {
    (0..=m).map(|k| mech.reward(j + k, n)).sum()
}

/// Gain of agent `i_j` on a length-`n` path from posing as `m + 1` chained
/// identities: `sum_{k=0..m} x(j+k, n+m) - x(j, n)`.
pub fn sybil_gain(mech: &Mechanism, j: usize, n: usize, m: usize) -> Result<f64> {
    if j < 1 || j > n || m < 1 {
        return Err(Error::Domain(format!(
            "sybil_gain requires 1 <= j <= n and m >= 1, got j = {j}, n = {n}, m = {m}"
        )));
    }
    Ok(segment_sum(mech, j, n + m, m)? - mech.reward(j, n)?)
}

/// Gain of the `m + 1` consecutive agents at positions `j..=j+m` of a
/// length-`n` path from merging into one: `x(j, n-m) - sum_{k=0..m} x(j+k, n)`.
pub fn collusion_gain(mech: &Mechanism, j: usize, n: usize, m: usize) -> Result<f64> {
    if j < 1 || m < 1 || j + m > n {
        return Err(Error::Domain(format!(
            "collusion_gain requires j >= 1, m >= 1 and j + m <= n, got j = {j}, n = {n}, m = {m}"
        )));
    }
    Ok(mech.reward(j, n - m)? - segment_sum(mech, j, n, m)?)
}

/// `x(j, n) / sum_{k=0..m} x(j+k, n+m)`; a non-positive denominator yields
/// `+inf`.
pub fn acp_ratio(mech: &Mechanism, j: usize, n: usize, m: usize) -> Result<f64> {
    if j < 1 || j > n || m < 1 {
        return Err(Error::Domain(format!(
            "acp_ratio requires 1 <= j <= n and m >= 1, got j = {j}, n = {n}, m = {m}"
        )));
    }
    let denom = segment_sum(mech, j, n + m, m)?;
    if denom <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(mech.reward(j, n)? / denom)
}
