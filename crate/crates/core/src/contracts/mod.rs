//! The contract suite for the burner–boiler twin.
//!
//! A contract is a property of one predicted (or observed) trace. Checking
//! one goes through four stages:
//!
//! 1. [`prepare::PreparedTrace::from_trace`] stabilises the numeric
//!    signals over a sliding window and lines every signal up on the
//!    evaluated row range;
//! 2. [`build_contract`] compiles the contract and the prepared data into
//!    a timed-automata network plus an invariance query and its
//!    reachability dual;
//! 3. [`verify_contract`] runs the zone-based checker and, for a violated
//!    contract, decodes the first violating trace row from the
//!    counterexample;
//! 4. [`direct_oracle`] recomputes the same verdict row by row without
//!    automata, for cross-checking.

pub mod params;
pub mod prepare;
pub mod stabilize;
pub mod testgen;

mod build;
mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{BuildError, Network, ParseError, TemplateId, VarId};
use crate::verify::{check, CheckError, CheckLimits, CheckOutcome, Verdict};

pub use oracle::direct_oracle;
pub use params::ContractParams;
pub use prepare::PreparedTrace;
pub use stabilize::{componentwise_leq, stabilize, StabilizeError};

use crate::verify::Query;

/// Identifier of one contract in the suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ContractId {
    Mc1,
    Mc2,
    Mc3,
    Fc1,
    Fc2,
    Fc3,
    Fc4,
    Fc5,
    Fc6,
    Fc7,
    Fc8,
    Fc9,
    Fc10,
    Ic1,
}

impl ContractId {
    /// Every contract, in reporting order.
    pub const ALL: [ContractId; 14] = [
        ContractId::Mc1,
        ContractId::Mc2,
        ContractId::Mc3,
        ContractId::Fc1,
        ContractId::Fc2,
        ContractId::Fc3,
        ContractId::Fc4,
        ContractId::Fc5,
        ContractId::Fc6,
        ContractId::Fc7,
        ContractId::Fc8,
        ContractId::Fc9,
        ContractId::Fc10,
        ContractId::Ic1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContractId::Mc1 => "MC1",
            ContractId::Mc2 => "MC2",
            ContractId::Mc3 => "MC3",
            ContractId::Fc1 => "FC1",
            ContractId::Fc2 => "FC2",
            ContractId::Fc3 => "FC3",
            ContractId::Fc4 => "FC4",
            ContractId::Fc5 => "FC5",
            ContractId::Fc6 => "FC6",
            ContractId::Fc7 => "FC7",
            ContractId::Fc8 => "FC8",
            ContractId::Fc9 => "FC9",
            ContractId::Fc10 => "FC10",
            ContractId::Ic1 => "IC1",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ContractId::Mc1 => {
                "below boiling, the burner temperature trend drives the boiler temperature trend"
            }
            ContractId::Mc2 => {
                "while water remains, the boiler temperature never exceeds the boiling plateau"
            }
            ContractId::Mc3 => {
                "while burning, the wood consumption trend drives the burner temperature trend"
            }
            ContractId::Fc1 => "low wood raises a wood request",
            ContractId::Fc2 => {
                "a wood request overdue past the delivery window with wood still low raises the \
                 shut-off alarm"
            }
            ContractId::Fc3 => "requests and deliveries stop once wood is replenished",
            ContractId::Fc4 => {
                "after reaching the ideal band, the burner temperature stays there absent a \
                 critical alarm"
            }
            ContractId::Fc5 => "the shut-off alarm forces the burner off",
            ContractId::Fc6 => "the burner never runs out of wood while ample water remains",
            ContractId::Fc7 => {
                "once boiling, the boiler temperature holds the plateau while water lasts"
            }
            ContractId::Fc8 => "low water raises the shut-off alarm and turns the burner off",
            ContractId::Fc9 => {
                "while water is above its minimum, no sustained alarm or burner shut-off occurs"
            }
            ContractId::Fc10 => "with the burner off, temperatures never drop below ambient",
            ContractId::Ic1 => "a critical alarm held past the grace period shuts the burner off",
        }
    }

    pub fn from_name(name: &str) -> Option<ContractId> {
        let upper = name.to_ascii_uppercase();
        ContractId::ALL.into_iter().find(|c| c.name() == upper)
    }
}

impl std::fmt::Display for ContractId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ContractError {
    #[error("trace too short: stabilisation needs at least {need} rows, got {got}")]
    TraceTooShort { need: usize, got: usize },
    #[error("invalid contract parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Stabilize(#[from] StabilizeError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// A contract compiled against one prepared trace.
pub struct Contract {
    pub id: ContractId,
    pub network: Network,
    pub driver: TemplateId,
    pub assumption: Option<TemplateId>,
    pub guarantees: Vec<TemplateId>,
    /// `[0]` the primary invariance query, `[1]` its reachability dual.
    pub queries: [Query; 2],
    /// Global variable holding the index of the next row to process.
    pub step_var: VarId,
    /// First evaluated original row index.
    pub offset: usize,
    /// Timestamps of the evaluated rows.
    pub eval_t: Vec<i64>,
}

/// Verdict for one contract on one trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractOutcome {
    pub id: ContractId,
    pub verdict: Verdict,
    pub violation: Option<ViolationRecord>,
    pub states_explored: usize,
}

/// Where a violated contract first failed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub contract: ContractId,
    /// Original trace row index of the first violation.
    pub row: usize,
    /// Timestamp of that row.
    pub t: i64,
    /// Template locations at the settling state of the counterexample.
    pub locations: Vec<String>,
}

pub fn build_contract(
    id: ContractId,
    prep: &PreparedTrace,
    params: &ContractParams,
) -> Result<Contract, ContractError> {
    let compiled = build::compile(id, prep, params)?;
    Ok(Contract {
        id,
        network: compiled.network,
        driver: compiled.driver,
        assumption: compiled.assumption,
        guarantees: compiled.guarantees,
        queries: compiled.queries,
        step_var: compiled.step_var,
        offset: prep.offset,
        eval_t: prep.t.clone(),
    })
}

pub fn build_all(
    prep: &PreparedTrace,
    params: &ContractParams,
) -> Result<Vec<Contract>, ContractError> {
    ContractId::ALL
        .into_iter()
        .map(|id| build_contract(id, prep, params))
        .collect()
}

/// Run the primary query and decode the first-violation row from the
/// counterexample when the contract does not hold.
pub fn verify_contract(
    contract: &Contract,
    limits: &CheckLimits,
) -> Result<ContractOutcome, ContractError> {
    let outcome = check(&contract.network, &contract.queries[0], limits)?;
    let violation = match (outcome.verdict, &outcome.trace) {
        (Verdict::Violated, Some(trace)) => {
            let last = trace
                .steps
                .last()
                .expect("a counterexample has at least its initial state");
            let step_value = last.values[contract.step_var.0];
            let row = (step_value - 1) as usize;
            Some(ViolationRecord {
                contract: contract.id,
                row,
                t: contract.eval_t[row - contract.offset],
                locations: last.locations.clone(),
            })
        }
        _ => None,
    };
    Ok(ContractOutcome {
        id: contract.id,
        verdict: outcome.verdict,
        violation,
        states_explored: outcome.states_explored,
    })
}

/// Run the reachability dual of the primary query.
pub fn check_dual(
    contract: &Contract,
    limits: &CheckLimits,
) -> Result<CheckOutcome, ContractError> {
    Ok(check(&contract.network, &contract.queries[1], limits)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Signal, SignalFrame, Trace, TraceRow};

    /// A trace whose rows are produced by a closure over the row index,
    /// with predictions equal to truth.
    fn synthetic_trace(len: usize, fill: impl Fn(usize, &mut TraceRow)) -> Trace {
        let rows = (0..len)
            .map(|i| {
                // Benign defaults: burning steadily at ideal temperatures,
                // plenty of wood and water.
                let mut f = SignalFrame::default();
                f.set(Signal::BT, 14_000);
                f.set(Signal::BoT, 9_000);
                f.set(Signal::WM, 5_000);
                f.set(Signal::WoM, 4_000);
                let mut row = TraceRow {
                    t: i as i64,
                    truth: f,
                    pred: None,
                    burner_on: true,
                    critical_alarm: false,
                    t_env: 1_800,
                };
                fill(i, &mut row);
                row.pred = Some(row.truth);
                row
            })
            .collect();
        Trace { rows }
    }

    fn prep(trace: &Trace, params: &ContractParams) -> PreparedTrace {
        PreparedTrace::from_trace(trace, params).expect("prepared")
    }

    #[test]
    fn names_round_trip() {
        for id in ContractId::ALL {
            assert_eq!(ContractId::from_name(id.name()), Some(id));
            assert_eq!(ContractId::from_name(&id.name().to_lowercase()), Some(id));
            assert!(!id.description().is_empty());
        }
        assert_eq!(ContractId::from_name("XC9"), None);
        assert_eq!(
            serde_json::to_string(&ContractId::Fc10).unwrap(),
            "\"FC10\""
        );
    }

    #[test]
    fn every_contract_compiles_with_expected_template_names() {
        let params = ContractParams::default();
        let trace = synthetic_trace(12, |_, _| {});
        let prepared = prep(&trace, &params);
        for id in ContractId::ALL {
            let c = build_contract(id, &prepared, &params).expect("compiles");
            assert!(
                c.network.find_template("UpdateV").is_some(),
                "{id}: driver exists"
            );
            for g in &c.guarantees {
                let _ = g;
            }
            match id {
                ContractId::Mc1 => {
                    let a = c.network.find_template("A_MC1").expect("assumption");
                    assert!(c.network.find_location(a, "Boiling").is_some());
                    let g = c.network.find_template("G_MC1").expect("guarantee");
                    assert!(c.network.find_location(g, "Violation").is_some());
                }
                ContractId::Mc3 => {
                    let a = c.network.find_template("A_MC3").expect("assumption");
                    assert!(c.network.find_location(a, "NotBurning").is_some());
                }
                ContractId::Fc9 => {
                    let a = c.network.find_template("A_FC9").expect("classifier");
                    assert!(c.network.find_location(a, "AboveW_min").is_some());
                    assert!(c.network.find_location(a, "BelowW_min").is_some());
                    let g1 = c.network.find_template("G1_FC9").expect("alarm classifier");
                    assert!(c.network.find_location(g1, "Alarm").is_some());
                    let g2 = c.network.find_template("G2_FC9").expect("burner classifier");
                    assert!(c.network.find_location(g2, "B_off_true").is_some());
                    assert_eq!(
                        c.queries[0].text,
                        "A[] A_FC9.AboveW_min imply (not (G1_FC9.Alarm || G2_FC9.B_off_true))"
                    );
                    assert_eq!(
                        c.queries[1].text,
                        "E<> A_FC9.AboveW_min && (G1_FC9.Alarm || G2_FC9.B_off_true)"
                    );
                }
                _ => {
                    let name = format!("G_{}", id.name());
                    let g = c.network.find_template(&name).expect("guarantee");
                    assert!(c.network.find_location(g, "Violation").is_some());
                }
            }
        }
    }

    #[test]
    fn benign_trace_satisfies_the_whole_suite() {
        let params = ContractParams::default();
        let trace = synthetic_trace(20, |_, _| {});
        let prepared = prep(&trace, &params);
        for id in ContractId::ALL {
            let c = build_contract(id, &prepared, &params).unwrap();
            let out = verify_contract(&c, &CheckLimits::default()).unwrap();
            assert_eq!(out.verdict, Verdict::Satisfied, "{id}");
            assert!(out.violation.is_none());
            assert_eq!(direct_oracle(id, &prepared, &params), None, "{id} oracle");
            let dual = check_dual(&c, &CheckLimits::default()).unwrap();
            assert_eq!(dual.verdict, Verdict::Violated, "{id} dual unreachable");
        }
    }

    #[test]
    fn sustained_alarm_while_burning_violates_fc5_at_the_oracle_row() {
        let params = ContractParams::default();
        // Alarm on from row 8 while the burner stays on: the third
        // consecutive bad row (10) is the violation.
        let trace = synthetic_trace(20, |i, r| {
            if i >= 8 {
                r.truth.set(Signal::WA, 1);
            }
        });
        let prepared = prep(&trace, &params);
        let c = build_contract(ContractId::Fc5, &prepared, &params).unwrap();
        let out = verify_contract(&c, &CheckLimits::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Violated);
        let v = out.violation.expect("violation record");
        assert_eq!(Some(v.row), direct_oracle(ContractId::Fc5, &prepared, &params));
        assert_eq!(v.row, 10);
        assert_eq!(v.t, prepared.t[v.row - prepared.offset]);
        assert!(v.locations.iter().any(|l| l == "G_FC5.Violation"));
        let dual = check_dual(&c, &CheckLimits::default()).unwrap();
        assert_eq!(dual.verdict, Verdict::Satisfied);
    }

    #[test]
    fn fc9_pair_query_can_hit_between_classifier_updates() {
        let params = ContractParams::default();
        // The burner is off for rows 3..=12 (the shut-off flag holds from
        // row 6, one row past the averaging window) and back on from row
        // 13; the stabilised water level first rises above its minimum
        // exactly at row 13. The only hit pairs row 13's water level with
        // row 12's still-held shut-off flag, between the two classifier
        // updates of row 13.
        let trace = synthetic_trace(24, |i, r| {
            if (3..=12).contains(&i) {
                r.burner_on = false;
            }
            r.truth.set(Signal::WM, if i <= 11 { 600 } else { 5_000 });
        });
        let prepared = prep(&trace, &params);
        let c = build_contract(ContractId::Fc9, &prepared, &params).unwrap();
        let out = verify_contract(&c, &CheckLimits::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Violated);
        let v = out.violation.unwrap();
        assert_eq!(v.row, 13);
        assert_eq!(Some(v.row), direct_oracle(ContractId::Fc9, &prepared, &params));
        let dual = check_dual(&c, &CheckLimits::default()).unwrap();
        assert_eq!(dual.verdict, Verdict::Satisfied);
    }

    #[test]
    fn boiler_trend_defying_burner_trend_violates_mc1() {
        let params = ContractParams::default();
        // Burner heats steadily below boiling while the boiler cools:
        // assumption increasing, guarantee decreasing.
        let trace = synthetic_trace(20, |i, r| {
            r.truth.set(Signal::BT, 10_000 + 200 * i as i64);
            r.truth.set(Signal::BoT, 9_000 - 200 * i as i64);
        });
        let prepared = prep(&trace, &params);
        let c = build_contract(ContractId::Mc1, &prepared, &params).unwrap();
        let out = verify_contract(&c, &CheckLimits::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Violated);
        assert_eq!(
            out.violation.map(|v| v.row),
            direct_oracle(ContractId::Mc1, &prepared, &params)
        );
    }

    #[test]
    fn gated_assumption_never_binds_mc1() {
        let params = ContractParams::default();
        // Same divergence but above boiling: the assumption is parked.
        let trace = synthetic_trace(20, |i, r| {
            r.truth.set(Signal::BT, 12_000 + 200 * i as i64);
            r.truth.set(Signal::BoT, 24_000 - 200 * i as i64); // stays above boil
        });
        let prepared = prep(&trace, &params);
        let c = build_contract(ContractId::Mc1, &prepared, &params).unwrap();
        let out = verify_contract(&c, &CheckLimits::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
        assert_eq!(direct_oracle(ContractId::Mc1, &prepared, &params), None);
    }
}
