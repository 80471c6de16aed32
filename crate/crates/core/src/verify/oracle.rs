//! Explicit-time reference interpreter.
//!
//! Clocks take concrete integer values and time advances in unit ticks, so
//! the reachable set is finite whenever a horizon is given. This is an
//! independent implementation of the network semantics — no zones — used to
//! cross-check the symbolic engine. For networks whose clock constraints are
//! all non-strict (closed), integer ticks are exhaustive: both engines must
//! agree on every clock-free query up to the same horizon.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::automata::{
    Bound, ChannelId, ClockConstraint, Expr, EvalError, LocId, Network, SemanticsError, SyncDir,
    TemplateId, Update,
};

use super::check::{CheckError, CheckOutcome, Verdict};
use super::query::{Query, QueryKind};

#[derive(Clone, PartialEq, Eq, Hash)]
struct ConcreteState {
    locations: Vec<LocId>,
    valuation: Vec<i64>,
    /// Concrete clock values, indexed by `ClockId - 1`.
    clocks: Vec<i64>,
    elapsed: i64,
}

/// Check a clock-free query by explicit unit-tick exploration up to
/// `horizon` total time units. A zero horizon examines only the initial
/// state, mirroring the symbolic checker.
pub fn explicit_check(
    net: &Network,
    query: &Query,
    horizon: i64,
    max_states: usize,
) -> Result<CheckOutcome, CheckError> {
    let mut holds_somewhere = false;
    let mut violated_somewhere = false;
    let mut explored = 0usize;

    visit_reachable(net, horizon, max_states, |state| {
        explored += 1;
        let holds = eval_predicate(net, state, &query.predicate)?;
        if holds {
            holds_somewhere = true;
        } else {
            violated_somewhere = true;
        }
        // Stop early once the verdict is settled.
        Ok(match query.kind {
            QueryKind::Invariance => !violated_somewhere,
            QueryKind::Reachability => !holds_somewhere,
        })
    })?;

    let verdict = match query.kind {
        QueryKind::Invariance => {
            if violated_somewhere {
                Verdict::Violated
            } else {
                Verdict::Satisfied
            }
        }
        QueryKind::Reachability => {
            if holds_somewhere {
                Verdict::Satisfied
            } else {
                Verdict::Violated
            }
        }
    };
    Ok(CheckOutcome {
        verdict,
        states_explored: explored,
        trace: None,
    })
}

/// The discrete projections (locations + variable valuation) of every
/// concrete state reachable within the horizon.
pub fn explicit_reachable_keys(
    net: &Network,
    horizon: i64,
    max_states: usize,
) -> Result<BTreeSet<(Vec<LocId>, Vec<i64>)>, CheckError> {
    let mut keys = BTreeSet::new();
    visit_reachable(net, horizon, max_states, |state| {
        keys.insert((state.locations.clone(), state.valuation.clone()));
        Ok(true)
    })?;
    Ok(keys)
}

/// Breadth-first walk over concrete states; the callback returns `false` to
/// stop early.
fn visit_reachable(
    net: &Network,
    horizon: i64,
    max_states: usize,
    mut visit: impl FnMut(&ConcreteState) -> Result<bool, CheckError>,
) -> Result<(), CheckError> {
    let init = ConcreteState {
        locations: net.templates().iter().map(|t| t.init).collect(),
        valuation: net.initial_valuation(),
        clocks: vec![0; net.num_clocks()],
        elapsed: 0,
    };
    if !invariants_hold(net, &init.locations, &init.clocks) {
        return Err(CheckError::Semantics(SemanticsError::VacuousModel));
    }

    let mut seen: HashSet<ConcreteState> = HashSet::new();
    let mut waiting: VecDeque<ConcreteState> = VecDeque::new();

    if !visit(&init)? {
        return Ok(());
    }
    if horizon == 0 {
        return Ok(());
    }
    seen.insert(init.clone());
    waiting.push_back(init);

    while let Some(state) = waiting.pop_front() {
        for next in concrete_successors(net, &state, horizon)? {
            if seen.contains(&next) {
                continue;
            }
            if seen.len() >= max_states {
                return Err(CheckError::Inconclusive {
                    states_explored: seen.len(),
                    frontier: waiting.len() + 1,
                });
            }
            if !visit(&next)? {
                return Ok(());
            }
            seen.insert(next.clone());
            waiting.push_back(next);
        }
    }
    Ok(())
}

fn concrete_successors(
    net: &Network,
    s: &ConcreteState,
    horizon: i64,
) -> Result<Vec<ConcreteState>, CheckError> {
    let committed_active = s
        .locations
        .iter()
        .enumerate()
        .any(|(ti, &l)| net.templates()[ti].location(l).committed);
    let mut out = Vec::new();

    // Internal edges.
    for (ti, tpl) in net.templates().iter().enumerate() {
        if committed_active && !tpl.location(s.locations[ti]).committed {
            continue;
        }
        for &ei in &tpl.edges_from[s.locations[ti].0] {
            let edge = &tpl.edges[ei];
            if edge.sync.is_some() {
                continue;
            }
            if let Some(next) = fire_concrete(net, s, &[(TemplateId(ti), ei)])? {
                out.push(next);
            }
        }
    }

    // Binary synchronisations.
    for ch in 0..net.channel_names().len() {
        let ch = ChannelId(ch);
        for (si, stpl) in net.templates().iter().enumerate() {
            for &sei in &stpl.edges_from[s.locations[si].0] {
                if stpl.edges[sei].sync != Some((ch, SyncDir::Send)) {
                    continue;
                }
                for (ri, rtpl) in net.templates().iter().enumerate() {
                    if ri == si {
                        continue;
                    }
                    if committed_active
                        && !stpl.location(s.locations[si]).committed
                        && !rtpl.location(s.locations[ri]).committed
                    {
                        continue;
                    }
                    for &rei in &rtpl.edges_from[s.locations[ri].0] {
                        if rtpl.edges[rei].sync != Some((ch, SyncDir::Recv)) {
                            continue;
                        }
                        if let Some(next) =
                            fire_concrete(net, s, &[(TemplateId(si), sei), (TemplateId(ri), rei)])?
                        {
                            out.push(next);
                        }
                    }
                }
            }
        }
    }

    // Unit tick: no committed location, time budget left, and invariants
    // still satisfied after advancing every clock by one.
    if !committed_active && s.elapsed < horizon {
        let ticked: Vec<i64> = s.clocks.iter().map(|c| c + 1).collect();
        if invariants_hold(net, &s.locations, &ticked) {
            out.push(ConcreteState {
                locations: s.locations.clone(),
                valuation: s.valuation.clone(),
                clocks: ticked,
                elapsed: s.elapsed + 1,
            });
        }
    }

    Ok(out)
}

fn fire_concrete(
    net: &Network,
    s: &ConcreteState,
    parts: &[(TemplateId, usize)],
) -> Result<Option<ConcreteState>, CheckError> {
    for &(tid, ei) in parts {
        let edge = &net.template(tid).edges[ei];
        let data_ok = edge
            .guard_data
            .eval_data(&s.valuation)
            .map_err(|e| eval_err(net, tid, ei, e))?;
        if data_ok == 0 {
            return Ok(None);
        }
        for c in &edge.guard_clocks {
            if !constraint_holds(c, &s.clocks) {
                return Ok(None);
            }
        }
    }

    let mut valuation = s.valuation.clone();
    let mut clocks = s.clocks.clone();
    for &(tid, ei) in parts {
        let edge = &net.template(tid).edges[ei];
        for u in &edge.updates {
            match u {
                Update::Assign(var, e) => {
                    let value = e
                        .eval_data(&valuation)
                        .map_err(|err| eval_err(net, tid, ei, err))?;
                    let decl = net.var(*var);
                    let (lo, hi) = decl.range();
                    if value < lo || value > hi {
                        return Err(CheckError::Semantics(SemanticsError::AssignOutOfRange {
                            template: net.template(tid).name.clone(),
                            edge: ei,
                            var: decl.name.clone(),
                            value,
                            lo,
                            hi,
                        }));
                    }
                    valuation[var.0] = value;
                }
                Update::Reset(c) => clocks[c.0 - 1] = 0,
            }
        }
    }

    let mut locations = s.locations.clone();
    for &(tid, ei) in parts {
        locations[tid.0] = net.template(tid).edges[ei].target;
    }
    if !invariants_hold(net, &locations, &clocks) {
        return Ok(None);
    }
    Ok(Some(ConcreteState {
        locations,
        valuation,
        clocks,
        elapsed: s.elapsed,
    }))
}

fn invariants_hold(net: &Network, locations: &[LocId], clocks: &[i64]) -> bool {
    locations.iter().enumerate().all(|(ti, &l)| {
        net.templates()[ti]
            .location(l)
            .invariant
            .iter()
            .all(|c| constraint_holds(c, clocks))
    })
}

fn constraint_holds(c: &ClockConstraint, clocks: &[i64]) -> bool {
    let val = |i: usize| if i == 0 { 0 } else { clocks[i - 1] };
    let diff = val(c.i) - val(c.j);
    if c.bound == Bound::INF {
        return true;
    }
    if c.bound.is_weak() {
        diff <= c.bound.value()
    } else {
        diff < c.bound.value()
    }
}

fn eval_predicate(net: &Network, s: &ConcreteState, p: &Expr) -> Result<bool, CheckError> {
    let locations = &s.locations;
    let v = p
        .eval_with(
            &s.valuation,
            &mut |t: TemplateId, l: LocId| Ok(locations[t.0] == l),
            &mut |_| Err(EvalError::ClockInPredicate),
        )
        .map_err(|e| CheckError::Semantics(SemanticsError::Predicate(e)))?;
    let _ = net;
    Ok(v != 0)
}

fn eval_err(net: &Network, tid: TemplateId, ei: usize, e: EvalError) -> CheckError {
    CheckError::Semantics(SemanticsError::Eval {
        template: net.template(tid).name.clone(),
        edge: ei,
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures;
    use crate::verify::check::{check, reachable_keys, CheckLimits};
    use crate::verify::query::parse_query;

    #[test]
    fn lamp_agrees_with_the_symbolic_checker() {
        let net = fixtures::lamp();
        for text in [
            "E<> Lamp.bright",
            "A[] !Lamp.bright",
            "A[] Lamp.off || Lamp.low || Lamp.bright",
            "E<> Lamp.bright && Lamp.off",
        ] {
            let q = parse_query(text, &net).unwrap();
            for horizon in [0, 1, 4, 5, 6, 12] {
                let symbolic = check(&net, &q, &CheckLimits::with_horizon(horizon)).unwrap();
                let concrete = explicit_check(&net, &q, horizon, 1_000_000).unwrap();
                assert_eq!(symbolic.verdict, concrete.verdict, "{text} @ horizon {horizon}");
            }
        }
    }

    #[test]
    fn lamp_reachable_keys_agree() {
        let net = fixtures::lamp();
        for horizon in [0, 1, 5, 9] {
            let symbolic = reachable_keys(&net, &CheckLimits::with_horizon(horizon)).unwrap();
            let concrete = explicit_reachable_keys(&net, horizon, 1_000_000).unwrap();
            assert_eq!(symbolic, concrete, "horizon {horizon}");
        }
    }

    #[test]
    fn tick_respects_invariants() {
        use crate::automata::{CmpOp, EdgeDef, Expr};
        let mut b = Network::builder("inv");
        let c = b.clock("c");
        let n = b.global_int("n", 0, 10, 0);
        let t = b.template("T");
        let l0 = b.location(t, "l0");
        b.invariant(t, l0, Expr::ClockCmp(c, CmpOp::Le, 3));
        b.edge(
            t,
            EdgeDef::new(l0, l0)
                .guard(Expr::ClockCmp(c, CmpOp::Ge, 3))
                .assign(n, Expr::add(Expr::var(n), Expr::Const(1)))
                .reset(c),
        );
        let net = b.build().unwrap();
        // n counts firings at c == 3 exactly; horizon 10 admits three
        // firings (t = 3, 6, 9) and a fourth would need t = 12.
        let q = parse_query("E<> n == 3", &net).unwrap();
        assert_eq!(
            explicit_check(&net, &q, 10, 100_000).unwrap().verdict,
            Verdict::Satisfied
        );
        let q = parse_query("E<> n == 4", &net).unwrap();
        assert_eq!(
            explicit_check(&net, &q, 10, 100_000).unwrap().verdict,
            Verdict::Violated
        );
        // The symbolic engine sees exactly the same counts.
        let q = parse_query("E<> n == 3", &net).unwrap();
        assert_eq!(
            check(&net, &q, &CheckLimits::with_horizon(10)).unwrap().verdict,
            Verdict::Satisfied
        );
        let q = parse_query("E<> n == 4", &net).unwrap();
        assert_eq!(
            check(&net, &q, &CheckLimits::with_horizon(10)).unwrap().verdict,
            Verdict::Violated
        );
    }
}
