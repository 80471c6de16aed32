//! Symbolic semantics: states pair discrete data (locations + variable
//! valuation) with a clock zone, and the successor relation folds the time
//! delay into each discrete step.
//!
//! A state's zone is always delay-closed under the active invariants, so a
//! stored state stands for "fired the step, then waited any admissible
//! amount of time". Committed locations suppress both the delay closure and
//! any move that does not involve a committed template.

use thiserror::Error;

use super::expr::{Expr, EvalError};
use super::network::{
    ChannelId, Edge, LocId, Network, SyncDir, TemplateId, Update, VarId,
};
use super::zone::{Bound, ClockConstraint, Zone};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymState {
    pub locations: Vec<LocId>,
    pub valuation: Vec<i64>,
    pub zone: Zone,
}

impl SymState {
    /// Discrete part of the state, used as a dedup key during exploration.
    pub fn key(&self) -> (Vec<LocId>, Vec<i64>) {
        (self.locations.clone(), self.valuation.clone())
    }
}

/// How a successor was produced; indices refer to declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepAction {
    Initial,
    /// Delay-only successor emitted when no edge is enabled.
    Delay,
    Internal {
        template: TemplateId,
        edge: usize,
    },
    Sync {
        channel: ChannelId,
        sender: (TemplateId, usize),
        receiver: (TemplateId, usize),
    },
}

impl StepAction {
    pub fn describe(&self, net: &Network) -> String {
        match self {
            StepAction::Initial => "initial".to_string(),
            StepAction::Delay => "delay".to_string(),
            StepAction::Internal { template, edge } => {
                let t = net.template(*template);
                let e = &t.edges[*edge];
                format!(
                    "{}: {} -> {}",
                    t.name,
                    t.location(e.source).name,
                    t.location(e.target).name
                )
            }
            StepAction::Sync {
                channel,
                sender,
                receiver,
            } => {
                let ts = net.template(sender.0);
                let tr = net.template(receiver.0);
                let es = &ts.edges[sender.1];
                let er = &tr.edges[receiver.1];
                format!(
                    "{}! {}: {} -> {} / {}: {} -> {}",
                    net.channel_name(*channel),
                    ts.name,
                    ts.location(es.source).name,
                    ts.location(es.target).name,
                    tr.name,
                    tr.location(er.source).name,
                    tr.location(er.target).name
                )
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("vacuous model: initial invariant is unsatisfiable")]
    VacuousModel,
    #[error("template `{template}`, edge {edge}: assignment to `{var}` value {value} outside [{lo}, {hi}]")]
    AssignOutOfRange {
        template: String,
        edge: usize,
        var: String,
        value: i64,
        lo: i64,
        hi: i64,
    },
    #[error("template `{template}`, edge {edge}: {source}")]
    Eval {
        template: String,
        edge: usize,
        source: EvalError,
    },
    #[error("query predicate: {0}")]
    Predicate(EvalError),
}

/// Exploration options shared by `initial_state_with` / `successors_with`.
///
/// With a `horizon`, zones carry one extra never-reset clock tracking total
/// elapsed time, constrained to stay `<= horizon` after every delay closure.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepOptions {
    pub horizon: Option<i64>,
}

impl StepOptions {
    pub(crate) fn zone_dim(&self, net: &Network) -> usize {
        net.num_clocks() + 1 + usize::from(self.horizon.is_some())
    }

    fn elapsed_index(&self, net: &Network) -> Option<usize> {
        self.horizon.map(|_| net.num_clocks() + 1)
    }
}

pub fn initial_state(net: &Network) -> Result<SymState, SemanticsError> {
    initial_state_with(net, StepOptions::default())
}

pub fn initial_state_with(net: &Network, opts: StepOptions) -> Result<SymState, SemanticsError> {
    let locations: Vec<LocId> = net.templates().iter().map(|t| t.init).collect();
    let valuation = net.initial_valuation();
    let mut zone = Zone::zero(opts.zone_dim(net));
    if !apply_invariants(net, &locations, &mut zone) {
        return Err(SemanticsError::VacuousModel);
    }
    if !any_committed(net, &locations) {
        delay_close(net, &locations, &mut zone, &opts);
        if zone.is_empty() {
            return Err(SemanticsError::VacuousModel);
        }
    }
    Ok(SymState {
        locations,
        valuation,
        zone,
    })
}

pub fn successors(net: &Network, s: &SymState) -> Result<Vec<(StepAction, SymState)>, SemanticsError> {
    successors_with(net, s, StepOptions::default())
}

/// All discrete successors of `s`, each delay-closed under the target
/// invariants, in deterministic declaration order: internal edges by
/// (template, edge), then synchronisations by (channel, sender, receiver).
///
/// When nothing is enabled, a non-committed state yields its own delay
/// closure; a committed state yields nothing.
pub fn successors_with(
    net: &Network,
    s: &SymState,
    opts: StepOptions,
) -> Result<Vec<(StepAction, SymState)>, SemanticsError> {
    debug_assert_eq!(s.zone.dim(), opts.zone_dim(net));
    let committed_active = any_committed(net, &s.locations);
    let mut out = Vec::new();

    // Internal (non-synchronising) edges.
    for (ti, tpl) in net.templates().iter().enumerate() {
        let tid = TemplateId(ti);
        if committed_active && !tpl.location(s.locations[ti]).committed {
            continue;
        }
        for &ei in &tpl.edges_from[s.locations[ti].0] {
            let edge = &tpl.edges[ei];
            if edge.sync.is_some() {
                continue;
            }
            if let Some(next) = fire(net, s, &[(tid, ei)], &opts)? {
                out.push((
                    StepAction::Internal {
                        template: tid,
                        edge: ei,
                    },
                    next,
                ));
            }
        }
    }

    // Binary synchronisation pairs: one sender, one receiver, distinct templates.
    for ch in 0..net.channel_names().len() {
        let ch = ChannelId(ch);
        for (si, stpl) in net.templates().iter().enumerate() {
            let sid = TemplateId(si);
            for &sei in &stpl.edges_from[s.locations[si].0] {
                let sedge = &stpl.edges[sei];
                if sedge.sync != Some((ch, SyncDir::Send)) {
                    continue;
                }
                for (ri, rtpl) in net.templates().iter().enumerate() {
                    if ri == si {
                        continue;
                    }
                    let rid = TemplateId(ri);
                    if committed_active
                        && !stpl.location(s.locations[si]).committed
                        && !rtpl.location(s.locations[ri]).committed
                    {
                        continue;
                    }
                    for &rei in &rtpl.edges_from[s.locations[ri].0] {
                        let redge = &rtpl.edges[rei];
                        if redge.sync != Some((ch, SyncDir::Recv)) {
                            continue;
                        }
                        if let Some(next) = fire(net, s, &[(sid, sei), (rid, rei)], &opts)? {
                            out.push((
                                StepAction::Sync {
                                    channel: ch,
                                    sender: (sid, sei),
                                    receiver: (rid, rei),
                                },
                                next,
                            ));
                        }
                    }
                }
            }
        }
    }

    if out.is_empty() && !committed_active {
        let mut zone = s.zone.clone();
        delay_close(net, &s.locations, &mut zone, &opts);
        if !zone.is_empty() {
            out.push((
                StepAction::Delay,
                SymState {
                    locations: s.locations.clone(),
                    valuation: s.valuation.clone(),
                    zone,
                },
            ));
        }
    }

    Ok(out)
}

/// Evaluate a clock-free predicate on a symbolic state.
pub fn eval_pred(s: &SymState, p: &Expr) -> Result<bool, SemanticsError> {
    let locations = &s.locations;
    let v = p
        .eval_with(
            &s.valuation,
            &mut |t: TemplateId, l: LocId| Ok(locations[t.0] == l),
            &mut |_| Err(EvalError::ClockInPredicate),
        )
        .map_err(SemanticsError::Predicate)?;
    Ok(v != 0)
}

fn any_committed(net: &Network, locations: &[LocId]) -> bool {
    locations
        .iter()
        .enumerate()
        .any(|(ti, &l)| net.templates()[ti].location(l).committed)
}

fn apply_invariants(net: &Network, locations: &[LocId], zone: &mut Zone) -> bool {
    for (ti, &l) in locations.iter().enumerate() {
        for c in &net.templates()[ti].location(l).invariant {
            if !zone.constrain(*c) {
                return false;
            }
        }
    }
    true
}

/// Delay, re-apply invariants, and cap total elapsed time when configured.
fn delay_close(net: &Network, locations: &[LocId], zone: &mut Zone, opts: &StepOptions) {
    zone.delay();
    if let (Some(h), Some(idx)) = (opts.horizon, opts.elapsed_index(net)) {
        zone.constrain(ClockConstraint {
            i: idx,
            j: 0,
            bound: Bound::le(h),
        });
    }
    apply_invariants(net, locations, zone);
}

/// Attempt to fire the given edges (one internal, or sender then receiver).
/// Returns `None` when a guard or invariant rules the step out.
fn fire(
    net: &Network,
    s: &SymState,
    parts: &[(TemplateId, usize)],
    opts: &StepOptions,
) -> Result<Option<SymState>, SemanticsError> {
    // Data guards first: cheap rejection without touching the zone.
    for &(tid, ei) in parts {
        let edge = &net.template(tid).edges[ei];
        if !eval_guard_data(net, tid, ei, edge, &s.valuation)? {
            return Ok(None);
        }
    }

    let mut zone = s.zone.clone();
    for &(tid, ei) in parts {
        for c in &net.template(tid).edges[ei].guard_clocks {
            if !zone.constrain(*c) {
                return Ok(None);
            }
        }
    }

    // Updates in order: sender's list before receiver's, each list in
    // declaration order, with intermediate values visible.
    let mut valuation = s.valuation.clone();
    let mut resets: Vec<usize> = Vec::new();
    for &(tid, ei) in parts {
        let edge = &net.template(tid).edges[ei];
        for u in &edge.updates {
            match u {
                Update::Assign(var, e) => {
                    apply_assign(net, tid, ei, *var, e, &mut valuation)?;
                }
                Update::Reset(c) => resets.push(c.0),
            }
        }
    }
    if !resets.is_empty() {
        zone.reset(&resets);
    }

    let mut locations = s.locations.clone();
    for &(tid, ei) in parts {
        locations[tid.0] = net.template(tid).edges[ei].target;
    }

    if !apply_invariants(net, &locations, &mut zone) {
        return Ok(None);
    }
    if !any_committed(net, &locations) {
        delay_close(net, &locations, &mut zone, opts);
        if zone.is_empty() {
            return Ok(None);
        }
    }

    Ok(Some(SymState {
        locations,
        valuation,
        zone,
    }))
}

fn eval_guard_data(
    net: &Network,
    tid: TemplateId,
    ei: usize,
    edge: &Edge,
    valuation: &[i64],
) -> Result<bool, SemanticsError> {
    match edge.guard_data.eval_data(valuation) {
        Ok(v) => Ok(v != 0),
        Err(e) => Err(SemanticsError::Eval {
            template: net.template(tid).name.clone(),
            edge: ei,
            source: e,
        }),
    }
}

fn apply_assign(
    net: &Network,
    tid: TemplateId,
    ei: usize,
    var: VarId,
    e: &Expr,
    valuation: &mut [i64],
) -> Result<(), SemanticsError> {
    let value = e.eval_data(valuation).map_err(|err| SemanticsError::Eval {
        template: net.template(tid).name.clone(),
        edge: ei,
        source: err,
    })?;
    let decl = net.var(var);
    let (lo, hi) = decl.range();
    if value < lo || value > hi {
        return Err(SemanticsError::AssignOutOfRange {
            template: net.template(tid).name.clone(),
            edge: ei,
            var: decl.name.clone(),
            value,
            lo,
            hi,
        });
    }
    valuation[var.0] = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::expr::CmpOp;
    use crate::automata::fixtures;
    use crate::automata::network::EdgeDef;

    fn loc_names(net: &Network, s: &SymState) -> Vec<String> {
        s.locations
            .iter()
            .enumerate()
            .map(|(ti, &l)| net.templates()[ti].location(l).name.clone())
            .collect()
    }

    #[test]
    fn lamp_initial_and_first_press() {
        let net = fixtures::lamp();
        let s0 = initial_state(&net).unwrap();
        assert_eq!(loc_names(&net, &s0), ["off", "idle"]);
        // Delay-closed: y can be anything >= 0.
        assert!(s0.zone.contains_point(&[0]));
        assert!(s0.zone.contains_point(&[100]));

        let succ = successors(&net, &s0).unwrap();
        assert_eq!(succ.len(), 1);
        let (action, s1) = &succ[0];
        assert!(matches!(action, StepAction::Sync { .. }));
        assert_eq!(loc_names(&net, s1), ["low", "idle"]);
        // y was reset then delayed.
        assert!(s1.zone.contains_point(&[0]));
        assert!(s1.zone.contains_point(&[7]));
    }

    #[test]
    fn lamp_second_press_splits_on_the_clock() {
        let net = fixtures::lamp();
        let s0 = initial_state(&net).unwrap();
        let s1 = successors(&net, &s0).unwrap().remove(0).1;
        let succ = successors(&net, &s1).unwrap();
        // Both guarded edges are enabled somewhere in the delay-closed zone.
        assert_eq!(succ.len(), 2);
        let names: Vec<Vec<String>> = succ.iter().map(|(_, s)| loc_names(&net, s)).collect();
        assert!(names.contains(&vec!["bright".into(), "idle".into()]));
        assert!(names.contains(&vec!["off".into(), "idle".into()]));
        // The bright branch fired with y < 5; after delay, y is unbounded
        // above but carries no memory of the press moment.
        let bright = &succ
            .iter()
            .find(|(_, s)| loc_names(&net, s)[0] == "bright")
            .unwrap()
            .1;
        assert!(bright.zone.contains_point(&[0]));
    }

    #[test]
    fn action_descriptions_name_edges() {
        let net = fixtures::lamp();
        let s0 = initial_state(&net).unwrap();
        let succ = successors(&net, &s0).unwrap();
        let desc = succ[0].0.describe(&net);
        assert_eq!(desc, "press! User: idle -> idle / Lamp: off -> low");
    }

    #[test]
    fn committed_location_preempts_other_templates_and_delay() {
        let mut b = Network::builder("committed");
        let flag = b.global_int("flag", 0, 10, 0);
        let other = b.global_int("other", 0, 10, 0);

        let a = b.template("A");
        let a0 = b.location(a, "a0");
        let a1 = b.committed_location(a, "a1");
        let a2 = b.location(a, "a2");
        b.edge(a, EdgeDef::new(a0, a1));
        b.edge(a, EdgeDef::new(a1, a2).assign(flag, Expr::Const(1)));

        let t = b.template("B");
        let b0 = b.location(t, "b0");
        let b1 = b.location(t, "b1");
        b.edge(t, EdgeDef::new(b0, b1).assign(other, Expr::Const(1)));
        let net = b.build().unwrap();

        let s0 = initial_state(&net).unwrap();
        let succ = successors(&net, &s0).unwrap();
        // Both templates can move from the initial (non-committed) state.
        assert_eq!(succ.len(), 2);
        let via_a = succ
            .iter()
            .find(|(action, _)| {
                matches!(action, StepAction::Internal { template, .. } if template.0 == 0)
            })
            .unwrap();
        // A is now committed: B's edge is suppressed, only A may continue.
        let succ2 = successors(&net, &via_a.1).unwrap();
        assert_eq!(succ2.len(), 1);
        let (_, s2) = &succ2[0];
        assert_eq!(s2.valuation[flag.0], 1);
        assert_eq!(s2.valuation[other.0], 0);
    }

    #[test]
    fn committed_dead_end_has_no_successors() {
        let mut b = Network::builder("stuck");
        let t = b.template("T");
        let l0 = b.location(t, "l0");
        let l1 = b.committed_location(t, "l1");
        b.edge(t, EdgeDef::new(l0, l1));
        let net = b.build().unwrap();

        let s0 = initial_state(&net).unwrap();
        let s1 = successors(&net, &s0).unwrap().remove(0).1;
        assert!(successors(&net, &s1).unwrap().is_empty());
    }

    #[test]
    fn non_committed_dead_end_yields_delay_successor() {
        let mut b = Network::builder("idle");
        let t = b.template("T");
        let _l0 = b.location(t, "l0");
        let net = b.build().unwrap();

        let s0 = initial_state(&net).unwrap();
        let succ = successors(&net, &s0).unwrap();
        assert_eq!(succ.len(), 1);
        assert!(matches!(succ[0].0, StepAction::Delay));
    }

    #[test]
    fn invariant_bounds_delay() {
        let mut b = Network::builder("inv");
        let c = b.clock("c");
        let t = b.template("T");
        let l0 = b.location(t, "l0");
        b.invariant(t, l0, Expr::ClockCmp(c, CmpOp::Le, 4));
        let l1 = b.location(t, "l1");
        b.edge(
            t,
            EdgeDef::new(l0, l1).guard(Expr::ClockCmp(c, CmpOp::Ge, 2)),
        );
        let net = b.build().unwrap();

        let s0 = initial_state(&net).unwrap();
        assert!(s0.zone.contains_point(&[4]));
        assert!(!s0.zone.contains_point(&[5]));
        let s1 = successors(&net, &s0).unwrap().remove(0).1;
        // Fired with c in [2,4]; l1 has no invariant so c is unbounded after.
        assert!(s1.zone.contains_point(&[2]));
        assert!(!s1.zone.contains_point(&[1]));
        assert!(s1.zone.contains_point(&[100]));
    }

    #[test]
    fn unsatisfiable_initial_invariant_is_reported() {
        let mut b = Network::builder("vacuous");
        let c = b.clock("c");
        let t = b.template("T");
        let l0 = b.location(t, "l0");
        b.invariant(t, l0, Expr::ClockCmp(c, CmpOp::Lt, 0));
        let net = b.build().unwrap();
        assert_eq!(initial_state(&net), Err(SemanticsError::VacuousModel));
    }

    #[test]
    fn horizon_blocks_late_guards() {
        let mut b = Network::builder("late");
        let c = b.clock("c");
        let t = b.template("T");
        let l0 = b.location(t, "l0");
        let l1 = b.location(t, "l1");
        b.edge(
            t,
            EdgeDef::new(l0, l1).guard(Expr::ClockCmp(c, CmpOp::Ge, 5)),
        );
        let net = b.build().unwrap();

        let tight = StepOptions { horizon: Some(3) };
        let s0 = initial_state_with(&net, tight).unwrap();
        let succ = successors_with(&net, &s0, tight).unwrap();
        assert_eq!(succ.len(), 1);
        assert!(matches!(succ[0].0, StepAction::Delay));

        let loose = StepOptions { horizon: Some(10) };
        let s0 = initial_state_with(&net, loose).unwrap();
        let succ = successors_with(&net, &s0, loose).unwrap();
        assert_eq!(succ.len(), 1);
        assert!(matches!(succ[0].0, StepAction::Internal { .. }));
    }

    #[test]
    fn horizon_caps_time_even_after_resets() {
        // A self-loop resetting its clock cannot dodge the elapsed-time cap.
        let mut b = Network::builder("loop");
        let c = b.clock("c");
        let n = b.global_int("n", 0, 100, 0);
        let t = b.template("T");
        let l0 = b.location(t, "l0");
        b.edge(
            t,
            EdgeDef::new(l0, l0)
                .guard(Expr::ClockCmp(c, CmpOp::Ge, 2))
                .assign(n, Expr::add(Expr::var(n), Expr::Const(1)))
                .reset(c),
        );
        let net = b.build().unwrap();

        let opts = StepOptions { horizon: Some(5) };
        let mut s = initial_state_with(&net, opts).unwrap();
        let mut fired = 0;
        loop {
            let succ = successors_with(&net, &s, opts).unwrap();
            let Some((action, next)) = succ.into_iter().next() else { break };
            if matches!(action, StepAction::Delay) {
                break;
            }
            s = next;
            fired += 1;
            assert!(fired < 10, "horizon failed to stop the loop");
        }
        // Two firings fit in 5 time units (at t=2 and t=4); a third needs t>=6.
        assert_eq!(fired, 2);
        assert_eq!(s.valuation[n.0], 2);
    }

    #[test]
    fn sender_updates_run_before_receiver_updates() {
        let mut b = Network::builder("order");
        let ch = b.channel("go");
        let x = b.global_int("x", 0, 100, 0);
        let seen = b.global_int("seen", 0, 100, 0);

        let s = b.template("S");
        let s0 = b.location(s, "s0");
        let s1 = b.location(s, "s1");
        b.edge(
            s,
            EdgeDef::new(s0, s1)
                .sync(ch, SyncDir::Send)
                .assign(x, Expr::Const(7)),
        );

        let r = b.template("R");
        let r0 = b.location(r, "r0");
        let r1 = b.location(r, "r1");
        b.edge(
            r,
            EdgeDef::new(r0, r1)
                .sync(ch, SyncDir::Recv)
                .assign(seen, Expr::var(x)),
        );
        let net = b.build().unwrap();

        let s0 = initial_state(&net).unwrap();
        let succ = successors(&net, &s0).unwrap();
        assert_eq!(succ.len(), 1);
        // The receiver observed the sender's write within the same step.
        assert_eq!(succ[0].1.valuation[seen.0], 7);
    }

    #[test]
    fn out_of_range_assignment_is_an_error_not_a_clamp() {
        let mut b = Network::builder("range");
        let x = b.global_int("x", 0, 3, 3);
        let t = b.template("T");
        let l0 = b.location(t, "l0");
        b.edge(
            t,
            EdgeDef::new(l0, l0).assign(x, Expr::add(Expr::var(x), Expr::Const(1))),
        );
        let net = b.build().unwrap();
        let s0 = initial_state(&net).unwrap();
        let err = successors(&net, &s0).unwrap_err();
        assert!(matches!(err, SemanticsError::AssignOutOfRange { value: 4, .. }));
    }

    #[test]
    fn eval_pred_sees_locations_and_variables() {
        let net = fixtures::lamp();
        let s0 = initial_state(&net).unwrap();
        let lamp = net.find_template("Lamp").unwrap();
        let off = net.find_location(lamp, "off").unwrap();
        let low = net.find_location(lamp, "low").unwrap();
        assert!(eval_pred(&s0, &Expr::Loc(lamp, off)).unwrap());
        assert!(!eval_pred(&s0, &Expr::Loc(lamp, low)).unwrap());
        let y = net.find_clock("y").unwrap();
        assert_eq!(
            eval_pred(&s0, &Expr::ClockCmp(y, CmpOp::Le, 1)),
            Err(SemanticsError::Predicate(EvalError::ClockInPredicate))
        );
    }
}
