//! Verification toolkit for black-box digital twins of a burner/boiler plant.

pub mod automata;
pub mod contracts;
pub mod plant;
pub mod trace;
pub mod twin;
pub mod verify;

pub use automata::{Expr, Network, SymState, Zone};
pub use contracts::{Contract, ContractId, ContractOutcome, ContractParams, ViolationRecord};
pub use trace::{Signal, SignalFrame, Trace, TraceRow};
pub use twin::{FaultKind, FaultSpec, Surrogate};
pub use verify::{CheckLimits, Query, Verdict};
