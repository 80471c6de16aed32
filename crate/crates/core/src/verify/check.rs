//! Zone-based reachability checker with inclusion subsumption.
//!
//! Exploration is breadth-first over symbolic states and fully deterministic:
//! successors are generated in declaration order, so verdicts, state counts
//! and diagnostic traces are reproducible across runs.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::automata::{
    eval_pred, initial_state_with, successors_with, LocId, Network, SemanticsError, StepAction,
    StepOptions, SymState, Zone,
};

use super::query::{Query, QueryKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckLimits {
    /// Maximum number of symbolic states examined before giving up.
    pub max_states: usize,
    /// Cap on total elapsed model time. `None` explores without a deadline;
    /// `Some(0)` examines only the initial state.
    pub horizon: Option<i64>,
    /// Store every distinct zone instead of discarding subsumed ones.
    /// Slower; exists to cross-check that subsumption never changes verdicts.
    pub disable_subsumption: bool,
}

impl Default for CheckLimits {
    fn default() -> CheckLimits {
        CheckLimits {
            max_states: 1_000_000,
            horizon: None,
            disable_subsumption: false,
        }
    }
}

impl CheckLimits {
    pub fn with_horizon(horizon: i64) -> CheckLimits {
        CheckLimits {
            horizon: Some(horizon),
            ..CheckLimits::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    Satisfied,
    Violated,
}

impl Verdict {
    pub fn is_satisfied(self) -> bool {
        self == Verdict::Satisfied
    }
}

/// One step of a diagnostic run, already rendered against the network.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TraceStep {
    pub action: String,
    pub locations: Vec<String>,
    /// Variables whose value differs from the previous step, as `name=value`.
    pub changes: Vec<String>,
    /// Full variable valuation at this step, in declaration order.
    pub values: Vec<i64>,
}

/// A run from the initial state to the state that settled the query:
/// a counterexample for a violated invariance, a witness for a satisfied
/// reachability.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DiagnosticTrace {
    pub steps: Vec<TraceStep>,
}

impl DiagnosticTrace {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!("  {i:>3}. [{}] ({})", s.action, s.locations.join(", ")));
            if !s.changes.is_empty() {
                out.push_str(&format!("  {}", s.changes.join(" ")));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub states_explored: usize,
    /// Present when a single state settled the verdict (invariance violated
    /// or reachability satisfied).
    pub trace: Option<DiagnosticTrace>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("exploration exhausted the state budget: {states_explored} states examined, {frontier} still waiting (raise max_states or add a horizon)")]
    Inconclusive {
        states_explored: usize,
        frontier: usize,
    },
}

struct Node {
    parent: Option<usize>,
    action: StepAction,
    state: SymState,
}

type Key = (Vec<LocId>, Vec<i64>);

/// Model-check one query. Determinism: given the same network, query and
/// limits, the outcome (including the diagnostic trace) is identical.
pub fn check(net: &Network, query: &Query, limits: &CheckLimits) -> Result<CheckOutcome, CheckError> {
    let opts = StepOptions {
        horizon: limits.horizon,
    };
    let init = initial_state_with(net, opts)?;

    let mut nodes: Vec<Node> = Vec::new();
    let mut passed: HashMap<Key, Vec<Zone>> = HashMap::new();
    let mut waiting: VecDeque<usize> = VecDeque::new();
    let mut explored = 0usize;

    let goal = |s: &SymState| -> Result<bool, SemanticsError> {
        let holds = eval_pred(s, &query.predicate)?;
        Ok(match query.kind {
            QueryKind::Invariance => !holds,
            QueryKind::Reachability => holds,
        })
    };

    macro_rules! settle {
        ($idx:expr) => {{
            let verdict = match query.kind {
                QueryKind::Invariance => Verdict::Violated,
                QueryKind::Reachability => Verdict::Satisfied,
            };
            return Ok(CheckOutcome {
                verdict,
                states_explored: explored,
                trace: Some(build_trace(net, &nodes, $idx)),
            });
        }};
    }

    nodes.push(Node {
        parent: None,
        action: StepAction::Initial,
        state: init,
    });
    explored += 1;
    if goal(&nodes[0].state)? {
        settle!(0);
    }

    if limits.horizon == Some(0) {
        // A zero horizon pins the run to its start: only the initial state
        // is examined.
        return Ok(finished(query.kind, explored));
    }

    remember(&mut passed, &nodes[0].state, limits.disable_subsumption);
    waiting.push_back(0);

    while let Some(idx) = waiting.pop_front() {
        let succ = {
            let state = &nodes[idx].state;
            successors_with(net, state, opts)?
        };
        for (action, next) in succ {
            if explored >= limits.max_states {
                return Err(CheckError::Inconclusive {
                    states_explored: explored,
                    frontier: waiting.len() + 1,
                });
            }
            if is_covered(&passed, &next, limits.disable_subsumption) {
                continue;
            }
            explored += 1;
            let next_idx = nodes.len();
            nodes.push(Node {
                parent: Some(idx),
                action,
                state: next,
            });
            if goal(&nodes[next_idx].state)? {
                settle!(next_idx);
            }
            remember(&mut passed, &nodes[next_idx].state, limits.disable_subsumption);
            waiting.push_back(next_idx);
        }
    }

    Ok(finished(query.kind, explored))
}

/// The discrete projections (locations + variable valuation) of every state
/// reached during a full exploration. Used by tests to compare the symbolic
/// semantics against the explicit-time interpreter.
pub fn reachable_keys(net: &Network, limits: &CheckLimits) -> Result<BTreeSet<Key>, CheckError> {
    let opts = StepOptions {
        horizon: limits.horizon,
    };
    let init = initial_state_with(net, opts)?;
    let mut keys = BTreeSet::new();
    let mut passed: HashMap<Key, Vec<Zone>> = HashMap::new();
    let mut waiting: VecDeque<SymState> = VecDeque::new();
    let mut explored = 1usize;

    keys.insert(init.key());
    if limits.horizon == Some(0) {
        return Ok(keys);
    }
    remember(&mut passed, &init, limits.disable_subsumption);
    waiting.push_back(init);

    while let Some(state) = waiting.pop_front() {
        for (_, next) in successors_with(net, &state, opts)? {
            if explored >= limits.max_states {
                return Err(CheckError::Inconclusive {
                    states_explored: explored,
                    frontier: waiting.len() + 1,
                });
            }
            if is_covered(&passed, &next, limits.disable_subsumption) {
                continue;
            }
            explored += 1;
            keys.insert(next.key());
            remember(&mut passed, &next, limits.disable_subsumption);
            waiting.push_back(next);
        }
    }
    Ok(keys)
}

fn finished(kind: QueryKind, explored: usize) -> CheckOutcome {
    // Exploration finished without hitting the goal predicate.
    let verdict = match kind {
        QueryKind::Invariance => Verdict::Satisfied,
        QueryKind::Reachability => Verdict::Violated,
    };
    CheckOutcome {
        verdict,
        states_explored: explored,
        trace: None,
    }
}

fn is_covered(passed: &HashMap<Key, Vec<Zone>>, s: &SymState, exact: bool) -> bool {
    match passed.get(&s.key()) {
        None => false,
        Some(zones) if exact => zones.iter().any(|z| *z == s.zone),
        Some(zones) => zones.iter().any(|z| s.zone.is_subset_of(z)),
    }
}

fn remember(passed: &mut HashMap<Key, Vec<Zone>>, s: &SymState, exact: bool) {
    match passed.entry(s.key()) {
        Entry::Vacant(e) => {
            e.insert(vec![s.zone.clone()]);
        }
        Entry::Occupied(mut e) => {
            if !exact {
                // Drop zones the new one subsumes to keep the list short.
                e.get_mut().retain(|z| !z.is_subset_of(&s.zone));
            }
            e.get_mut().push(s.zone.clone());
        }
    }
}

fn build_trace(net: &Network, nodes: &[Node], last: usize) -> DiagnosticTrace {
    let mut chain = Vec::new();
    let mut at = Some(last);
    while let Some(i) = at {
        chain.push(i);
        at = nodes[i].parent;
    }
    chain.reverse();

    let mut steps = Vec::with_capacity(chain.len());
    let mut prev_valuation: Option<&[i64]> = None;
    for &i in &chain {
        let node = &nodes[i];
        let locations = node
            .state
            .locations
            .iter()
            .enumerate()
            .map(|(ti, &l)| {
                let t = &net.templates()[ti];
                format!("{}.{}", t.name, t.location(l).name)
            })
            .collect();
        let changes = node
            .state
            .valuation
            .iter()
            .enumerate()
            .filter(|(vi, value)| match prev_valuation {
                Some(prev) => prev[*vi] != **value,
                None => **value != 0,
            })
            .map(|(vi, value)| format!("{}={}", net.vars()[vi].name, value))
            .collect();
        steps.push(TraceStep {
            action: node.action.describe(net),
            locations,
            changes,
            values: node.state.valuation.clone(),
        });
        prev_valuation = Some(&node.state.valuation);
    }
    DiagnosticTrace { steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures;
    use crate::verify::query::parse_query;

    fn lamp_check(text: &str) -> CheckOutcome {
        let net = fixtures::lamp();
        let q = parse_query(text, &net).unwrap();
        check(&net, &q, &CheckLimits::default()).unwrap()
    }

    #[test]
    fn lamp_safety_holds() {
        let out = lamp_check("A[] Lamp.off || Lamp.low || Lamp.bright");
        assert_eq!(out.verdict, Verdict::Satisfied);
        assert!(out.trace.is_none());
        // off, low, bright, and the wrap back to off are all subsumed.
        assert!(out.states_explored <= 6, "{}", out.states_explored);
    }

    #[test]
    fn lamp_bright_is_reachable_with_witness() {
        let out = lamp_check("E<> Lamp.bright");
        assert_eq!(out.verdict, Verdict::Satisfied);
        let trace = out.trace.unwrap();
        assert_eq!(trace.steps.len(), 3); // initial, press, press
        assert_eq!(trace.steps[0].action, "initial");
        assert!(trace.steps[2].locations.contains(&"Lamp.bright".to_string()));
    }

    #[test]
    fn lamp_never_bright_is_violated_with_counterexample() {
        let out = lamp_check("A[] !Lamp.bright");
        assert_eq!(out.verdict, Verdict::Violated);
        let trace = out.trace.unwrap();
        assert_eq!(trace.steps.len(), 3);
        assert!(trace.render().contains("Lamp.bright"));
    }

    #[test]
    fn unreachable_predicate_is_violated_reachability() {
        let net = fixtures::lamp();
        let q = parse_query("E<> Lamp.bright && Lamp.off", &net).unwrap();
        let out = check(&net, &q, &CheckLimits::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Violated);
        assert!(out.trace.is_none());
    }

    #[test]
    fn zero_horizon_examines_only_the_initial_state() {
        let net = fixtures::lamp();
        let q = parse_query("E<> Lamp.low", &net).unwrap();
        let out = check(&net, &q, &CheckLimits::with_horizon(0)).unwrap();
        assert_eq!(out.verdict, Verdict::Violated);
        assert_eq!(out.states_explored, 1);

        let q = parse_query("A[] Lamp.off", &net).unwrap();
        let out = check(&net, &q, &CheckLimits::with_horizon(0)).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
    }

    #[test]
    fn state_budget_exhaustion_is_inconclusive_not_a_verdict() {
        let net = fixtures::lamp();
        let q = parse_query("A[] !Lamp.bright", &net).unwrap();
        let limits = CheckLimits {
            max_states: 1,
            ..CheckLimits::default()
        };
        let err = check(&net, &q, &limits).unwrap_err();
        assert!(matches!(err, CheckError::Inconclusive { .. }));
        assert!(err.to_string().contains("raise max_states"));
    }

    #[test]
    fn subsumption_does_not_change_verdicts_on_the_lamp() {
        let net = fixtures::lamp();
        for text in [
            "A[] !Lamp.bright",
            "E<> Lamp.bright",
            "A[] Lamp.off || Lamp.low || Lamp.bright",
            "E<> Lamp.bright && Lamp.off",
        ] {
            let q = parse_query(text, &net).unwrap();
            let with = check(&net, &q, &CheckLimits::default()).unwrap();
            let without = check(
                &net,
                &q,
                &CheckLimits {
                    disable_subsumption: true,
                    ..CheckLimits::default()
                },
            )
            .unwrap();
            assert_eq!(with.verdict, without.verdict, "{text}");
        }
    }

    #[test]
    fn duality_on_the_lamp() {
        let net = fixtures::lamp();
        for text in ["A[] !Lamp.bright", "A[] Lamp.off", "A[] !(Lamp.low && User.idle)"] {
            let q = parse_query(text, &net).unwrap();
            let a = check(&net, &q, &CheckLimits::default()).unwrap();
            let d = check(&net, &q.dual(&net), &CheckLimits::default()).unwrap();
            assert_ne!(a.verdict.is_satisfied(), d.verdict.is_satisfied(), "{text}");
        }
    }

    #[test]
    fn horizon_restricts_reachability() {
        // The second press must wait 5 time units to reach `off` again
        // via the slow branch; bright needs none.
        let net = fixtures::lamp();
        let q = parse_query("E<> Lamp.bright", &net).unwrap();
        let out = check(&net, &q, &CheckLimits::with_horizon(1)).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);

        // Exhaustive small-horizon exploration still terminates.
        let q = parse_query("A[] !(Lamp.off && !User.idle)", &net).unwrap();
        let out = check(&net, &q, &CheckLimits::with_horizon(7)).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
    }
}
