//! Strategic manipulations and the empirical audit.
//!
//! Sybil chains and collusion merges transform the truthful winning path;
//! withholding and delayed answers re-run propagation on the same network
//! with the same tie-break stream, so every comparison is counterfactually
//! paired. Deviation families are pluggable through [`DeviationClass`].

mod audit;
mod classes;
mod deviation;

pub use audit::{audit, write_audit_csv, AuditLimits, AuditRecord, AuditReport, ClassSummary, AUDIT_HEADER, PROFIT_TOLERANCE};
pub use classes::{
    DelayedAnswers, DeviationClass, DeviationRegistry, Enumeration, EpisodeContext, SybilChains,
    ColludingSegments, WithheldPropagation,
};
pub use deviation::{apply_collusion, apply_sybil, evaluate_against, evaluate_deviation, Deviation, DeviationOutcome};
