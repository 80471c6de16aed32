//! The verification engine: queries, the zone-based symbolic checker, the
//! explicit-time reference interpreter, and random test-case generation.

pub mod check;
pub mod oracle;
pub mod query;
pub mod testgen;

pub use check::{
    check, reachable_keys, CheckError, CheckLimits, CheckOutcome, DiagnosticTrace, TraceStep,
    Verdict,
};
pub use oracle::{explicit_check, explicit_reachable_keys};
pub use query::{parse_query, Query, QueryKind};
