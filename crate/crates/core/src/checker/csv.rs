use std::io::{self, Write};

use super::PropertyReport;

pub const REPORT_HEADER: &str =
    "property,holds,n_max,m_max,tolerance,witness_j,witness_n,witness_m,witness_lambda,margin";

fn opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the header row and one row per report. Witness fields are empty
/// when the property holds.
pub fn write_reports<W: Write>(out: &mut W, reports: &[PropertyReport]) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        let w = if r.holds { None } else { r.witness };
        writeln!(
            out,
            "{},{},{},{},{:?},{},{},{},{},{:?}",
            r.property,
            r.holds,
            r.range.n_max,
            r.range.m_max,
            r.range.tolerance,
            opt(w.and_then(|w| w.j)),
            opt(w.and_then(|w| w.n)),
            opt(w.and_then(|w| w.m)),
            opt(w.and_then(|w| w.lambda)),
            r.margin,
        )?;
    }
    Ok(())
}
