//! Compilation of contracts into timed-automata networks.
//!
//! Every contract becomes one network with the same shape:
//!
//! * a driver template `UpdateV` that replays the prepared trace one row
//!   per period — each row edge loads that row's signal values into shared
//!   variables, then a committed chain emits one tick channel per monitor
//!   template (assumption first, guarantees after), so within a row all
//!   monitors classify the same data in a fixed order and no time passes
//!   in between;
//! * optionally an assumption template that classifies the current row and
//!   publishes its class in the global `a_state`
//!   (0 increasing, 1 decreasing, 2 stable, 3 gated off);
//! * guarantee templates that watch for bad rows and walk an
//!   `Ok -> Pending... -> Violation` chain, entering the absorbing
//!   `Violation` location exactly on the `lag + 1`-th consecutive bad row.
//!
//! The primary query is the invariance that `Violation` is never reached;
//! FC9 instead keeps its location-pair form over classifier templates. The
//! second query is always the reachability dual. The global `step` holds
//! the index of the *next* row to process, so the row on which a query
//! settles is `step - 1`.

use crate::automata::{
    ChannelId, CmpOp, EdgeDef, Expr, LocId, Network, NetworkBuilder, SyncDir, TemplateId, VarId,
};
use crate::verify::{parse_query, Query};

use super::params::ContractParams;
use super::prepare::PreparedTrace;
use super::{ContractError, ContractId};

/// Bounds for trace-fed signal variables (fixed-point, scaled by 100).
const SIG_LO: i64 = -2_000_000;
const SIG_HI: i64 = 2_000_000;

pub(super) struct Compiled {
    pub network: Network,
    pub driver: TemplateId,
    pub assumption: Option<TemplateId>,
    pub guarantees: Vec<TemplateId>,
    /// `[0]` primary (invariance), `[1]` its reachability dual.
    pub queries: [Query; 2],
    pub step_var: VarId,
}

fn v(x: VarId) -> Expr {
    Expr::var(x)
}

fn k(n: i64) -> Expr {
    Expr::c(n)
}

fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
    Expr::cmp(op, a, b)
}

fn eq(a: Expr, b: Expr) -> Expr {
    cmp(CmpOp::Eq, a, b)
}

enum FeedSeries<'a> {
    Num(&'a [i64]),
    Bool(&'a [bool]),
}

impl FeedSeries<'_> {
    fn at(&self, i: usize) -> i64 {
        match self {
            FeedSeries::Num(s) => s[i],
            FeedSeries::Bool(s) => s[i] as i64,
        }
    }
}

struct Feed<'a> {
    cur: VarId,
    /// Shadow variable receiving the previous row's value (first row
    /// repeats itself, making the first step flat).
    prev: Option<VarId>,
    series: FeedSeries<'a>,
}

/// Declare a numeric signal variable initialised to the first row.
fn num_var<'a>(b: &mut NetworkBuilder, name: &str, series: &'a [i64]) -> (VarId, Feed<'a>) {
    let cur = b.global_int(name, SIG_LO, SIG_HI, series[0]);
    (
        cur,
        Feed {
            cur,
            prev: None,
            series: FeedSeries::Num(series),
        },
    )
}

/// Declare a numeric signal with its previous-row shadow `<name>1`.
fn num_var_with_prev<'a>(
    b: &mut NetworkBuilder,
    name: &str,
    series: &'a [i64],
) -> (VarId, VarId, Feed<'a>) {
    let cur = b.global_int(name, SIG_LO, SIG_HI, series[0]);
    let prev = b.global_int(&format!("{name}1"), SIG_LO, SIG_HI, series[0]);
    (
        cur,
        prev,
        Feed {
            cur,
            prev: Some(prev),
            series: FeedSeries::Num(series),
        },
    )
}

fn bool_var<'a>(b: &mut NetworkBuilder, name: &str, series: &'a [bool]) -> (VarId, Feed<'a>) {
    let cur = b.global_bool(name, series[0]);
    (
        cur,
        Feed {
            cur,
            prev: None,
            series: FeedSeries::Bool(series),
        },
    )
}

/// The trace-replay driver. One edge per evaluated row fires at the row's
/// period boundary, loads the row into the signal variables and advances
/// `step`; a committed hop chain then emits each tick once. After the last
/// row the driver parks in `Done`.
fn build_driver(
    b: &mut NetworkBuilder,
    prep: &PreparedTrace,
    params: &ContractParams,
    feeds: &[Feed],
    ticks: &[ChannelId],
) -> (TemplateId, VarId) {
    assert!(!ticks.is_empty(), "a contract has at least one monitor");
    let len = prep.eval_len();
    let offset = prep.offset as i64;
    let last = offset + len as i64;
    let step = b.global_int("step", offset, last, offset);
    let c = b.clock("c");
    let t = b.template("UpdateV");
    let run = b.location(t, "Run");
    b.invariant(t, run, Expr::ClockCmp(c, CmpOp::Le, params.period));
    let done = b.location(t, "Done");
    let hops: Vec<LocId> = (0..ticks.len())
        .map(|i| b.committed_location(t, &format!("Sync{i}")))
        .collect();

    for row in 0..len {
        let r = offset + row as i64;
        let mut def = EdgeDef::new(run, hops[0])
            .guard(Expr::and(
                Expr::ClockCmp(c, CmpOp::Eq, params.period),
                eq(v(step), k(r)),
            ))
            .assign(step, k(r + 1));
        for f in feeds {
            if let Some(prev) = f.prev {
                def = def.assign(prev, k(f.series.at(row.saturating_sub(1))));
            }
            def = def.assign(f.cur, k(f.series.at(row)));
        }
        def = def.reset(c);
        b.edge(t, def);
    }
    for (i, &ch) in ticks.iter().enumerate() {
        let to = if i + 1 < hops.len() { hops[i + 1] } else { run };
        b.edge(t, EdgeDef::new(hops[i], to).sync(ch, SyncDir::Send));
    }
    b.edge(
        t,
        EdgeDef::new(run, done).guard(Expr::and(
            Expr::ClockCmp(c, CmpOp::Eq, params.period),
            eq(v(step), k(last)),
        )),
    );
    (t, step)
}

/// Trend of `cur - prev` against the dead band: guards for class indices
/// 0 (increasing), 1 (decreasing), 2 (stable). The three partition ℤ.
fn trend_guards(cur: VarId, prev: VarId, eps: i64) -> [Expr; 3] {
    let d = || Expr::sub(v(cur), v(prev));
    [
        cmp(CmpOp::Gt, d(), k(eps)),
        cmp(CmpOp::Lt, d(), k(-eps)),
        Expr::and(cmp(CmpOp::Ge, d(), k(-eps)), cmp(CmpOp::Le, d(), k(eps))),
    ]
}

/// An assumption template: on each tick it classifies the current row and
/// stores the class in `a_state`. With a gate, the gate condition wins and
/// parks the template in its dedicated location with `a_state = 3`.
fn trend_classifier(
    b: &mut NetworkBuilder,
    name: &str,
    tick: ChannelId,
    cur: VarId,
    prev: VarId,
    eps: i64,
    gate: Option<(Expr, &str)>,
    a_state: VarId,
) -> TemplateId {
    let t = b.template(name);
    let inc = b.location(t, "Increasing");
    let dec = b.location(t, "Decreasing");
    let stb = b.location(t, "Stable");
    let gate_loc = gate.as_ref().map(|(_, n)| b.location(t, n));
    b.set_init(t, stb);

    let mut sources = vec![inc, dec, stb];
    sources.extend(gate_loc);
    let classes = trend_guards(cur, prev, eps);
    for &src in &sources {
        for (idx, (target, class)) in [inc, dec, stb].iter().zip(&classes).enumerate() {
            let guard = match &gate {
                Some((g, _)) => Expr::and(Expr::not(g.clone()), class.clone()),
                None => class.clone(),
            };
            b.edge(
                t,
                EdgeDef::new(src, *target)
                    .guard(guard)
                    .sync(tick, SyncDir::Recv)
                    .assign(a_state, k(idx as i64)),
            );
        }
        if let (Some((g, _)), Some(gl)) = (&gate, gate_loc) {
            b.edge(
                t,
                EdgeDef::new(src, gl)
                    .guard(g.clone())
                    .sync(tick, SyncDir::Recv)
                    .assign(a_state, k(3)),
            );
        }
    }
    t
}

/// A guarantee template tracking the trend of its own signal against the
/// published assumption class. When the assumption is increasing or
/// decreasing the guarantee must match it; `lag` consecutive mismatches
/// are forgiven via the local `miss` counter, one more is a violation. A
/// stable or gated-off assumption imposes nothing.
fn trend_monitor(
    b: &mut NetworkBuilder,
    name: &str,
    tick: ChannelId,
    lag: usize,
    cur: VarId,
    prev: VarId,
    eps: i64,
    a_state: VarId,
) -> TemplateId {
    let t = b.template(name);
    let inc = b.location(t, "Increasing");
    let dec = b.location(t, "Decreasing");
    let stb = b.location(t, "Stable");
    let vio = b.location(t, "Violation");
    b.set_init(t, stb);
    let lag = lag as i64;
    let miss = b.local_int(t, "miss", 0, lag, 0);

    let classes = trend_guards(cur, prev, eps);
    for &src in &[inc, dec, stb] {
        for (idx, (target, class)) in [inc, dec, stb].iter().zip(&classes).enumerate() {
            let matched = Expr::or_all(vec![
                eq(v(a_state), k(2)),
                eq(v(a_state), k(3)),
                eq(v(a_state), k(idx as i64)),
            ]);
            b.edge(
                t,
                EdgeDef::new(src, *target)
                    .guard(Expr::and(class.clone(), matched.clone()))
                    .sync(tick, SyncDir::Recv)
                    .assign(miss, k(0)),
            );
            let mism = Expr::not(matched);
            b.edge(
                t,
                EdgeDef::new(src, *target)
                    .guard(Expr::and_all(vec![
                        class.clone(),
                        mism.clone(),
                        cmp(CmpOp::Lt, v(miss), k(lag)),
                    ]))
                    .sync(tick, SyncDir::Recv)
                    .assign(miss, Expr::add(v(miss), k(1))),
            );
            b.edge(
                t,
                EdgeDef::new(src, vio)
                    .guard(Expr::and_all(vec![
                        class.clone(),
                        mism,
                        cmp(CmpOp::Ge, v(miss), k(lag)),
                    ]))
                    .sync(tick, SyncDir::Recv),
            );
        }
    }
    b.edge(t, EdgeDef::new(vio, vio).sync(tick, SyncDir::Recv));
    t
}

/// A guarantee template for row conditions: bad rows advance an
/// `Ok -> Pending1.. -> Violation` chain and any good row resets it.
/// The template may own one latch (`var |= cond` each row) and one
/// saturating run-length counter, both usable in the bad condition with
/// their pre-update values.
fn chain_monitor(
    b: &mut NetworkBuilder,
    name: &str,
    tick: ChannelId,
    lag: usize,
    latch: Option<(&str, Expr)>,
    runlen: Option<(&str, Expr, i64)>,
    bad_of: impl FnOnce(Option<VarId>, Option<VarId>) -> Expr,
) -> TemplateId {
    let t = b.template(name);
    let ok = b.location(t, "Ok");
    let mut chain = vec![ok];
    for i in 1..=lag {
        chain.push(b.location(t, &format!("Pending{i}")));
    }
    let vio = b.location(t, "Violation");

    let latch_var = latch.as_ref().map(|(n, _)| b.local_bool(t, n, false));
    let run_var = runlen.as_ref().map(|(n, _, cap)| b.local_int(t, n, 0, *cap, 0));
    let bad = bad_of(latch_var, run_var);

    // Each tick edge partitions on the run-length counter phase so the
    // saturating update stays within the variable's bounds.
    let variants: Vec<(Expr, Option<(VarId, Expr)>)> = match (&runlen, run_var) {
        (Some((_, cond, cap)), Some(var)) => vec![
            (
                Expr::and(cond.clone(), cmp(CmpOp::Lt, v(var), k(*cap))),
                Some((var, Expr::add(v(var), k(1)))),
            ),
            (
                Expr::and(cond.clone(), cmp(CmpOp::Ge, v(var), k(*cap))),
                None,
            ),
            (Expr::not(cond.clone()), Some((var, k(0)))),
        ],
        _ => vec![(Expr::tt(), None)],
    };

    for (i, &src) in chain.iter().enumerate() {
        let on_bad = if i == lag { vio } else { chain[i + 1] };
        for (extra_guard, extra_update) in &variants {
            for (target, step_guard) in [(on_bad, bad.clone()), (ok, Expr::not(bad.clone()))] {
                let mut def = EdgeDef::new(src, target)
                    .guard(Expr::and(step_guard, extra_guard.clone()))
                    .sync(tick, SyncDir::Recv);
                if let (Some(var), Some((_, cond))) = (latch_var, &latch) {
                    def = def.assign(var, Expr::or(v(var), cond.clone()));
                }
                if let Some((var, e)) = extra_update {
                    def = def.assign(*var, e.clone());
                }
                b.edge(t, def);
            }
        }
    }
    b.edge(t, EdgeDef::new(vio, vio).sync(tick, SyncDir::Recv));
    t
}

/// A two-location classifier entering its flagged location once `cond`
/// has held for `lag + 1` consecutive rows.
fn held_classifier(
    b: &mut NetworkBuilder,
    name: &str,
    tick: ChannelId,
    lag: usize,
    cond: Expr,
    idle_name: &str,
    held_name: &str,
) -> TemplateId {
    let t = b.template(name);
    let idle = b.location(t, idle_name);
    let held = b.location(t, held_name);
    let lag = lag as i64;
    let run = b.local_int(t, "run", 0, lag, 0);
    for &src in &[idle, held] {
        b.edge(
            t,
            EdgeDef::new(src, idle)
                .guard(Expr::and(cond.clone(), cmp(CmpOp::Lt, v(run), k(lag))))
                .sync(tick, SyncDir::Recv)
                .assign(run, Expr::add(v(run), k(1))),
        );
        b.edge(
            t,
            EdgeDef::new(src, held)
                .guard(Expr::and(cond.clone(), cmp(CmpOp::Ge, v(run), k(lag))))
                .sync(tick, SyncDir::Recv),
        );
        b.edge(
            t,
            EdgeDef::new(src, idle)
                .guard(Expr::not(cond.clone()))
                .sync(tick, SyncDir::Recv)
                .assign(run, k(0)),
        );
    }
    t
}

/// A two-location level classifier: in `high_name` after any row where
/// `cond` held, in `low_name` otherwise.
fn level_classifier(
    b: &mut NetworkBuilder,
    name: &str,
    tick: ChannelId,
    cond: Expr,
    high_name: &str,
    low_name: &str,
) -> TemplateId {
    let t = b.template(name);
    let high = b.location(t, high_name);
    let low = b.location(t, low_name);
    for &src in &[high, low] {
        b.edge(
            t,
            EdgeDef::new(src, high)
                .guard(cond.clone())
                .sync(tick, SyncDir::Recv),
        );
        b.edge(
            t,
            EdgeDef::new(src, low)
                .guard(Expr::not(cond.clone()))
                .sync(tick, SyncDir::Recv),
        );
    }
    t
}

struct Parts {
    driver: TemplateId,
    step: VarId,
    assumption: Option<TemplateId>,
    guarantees: Vec<TemplateId>,
    primary: String,
    dual: String,
}

fn monitor_parts(driver: TemplateId, step: VarId, g_name: &str, g: TemplateId) -> Parts {
    Parts {
        driver,
        step,
        assumption: None,
        guarantees: vec![g],
        primary: format!("A[] not {g_name}.Violation"),
        dual: format!("E<> {g_name}.Violation"),
    }
}

pub(super) fn compile(
    id: ContractId,
    prep: &PreparedTrace,
    params: &ContractParams,
) -> Result<Compiled, ContractError> {
    params.validate()?;
    let p = *params;
    let lag = p.lag;
    let mut b = Network::builder(&format!("contract_{}", id.name()));

    let parts: Parts = match id {
        ContractId::Mc1 => {
            let tick_a = b.channel("tick_a");
            let tick_g = b.channel("tick_g");
            let (bt, bt1, f_bt) = num_var_with_prev(&mut b, "B_T", &prep.b_t);
            let (bo, bo1, f_bo) = num_var_with_prev(&mut b, "Bo_T", &prep.bo_t);
            let a_state = b.global_int("a_state", 0, 3, 2);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_bt, f_bo], &[tick_a, tick_g]);
            let a = trend_classifier(
                &mut b,
                "A_MC1",
                tick_a,
                bt,
                bt1,
                p.epsilon,
                Some((cmp(CmpOp::Ge, v(bo), k(p.t_boil)), "Boiling")),
                a_state,
            );
            let g = trend_monitor(&mut b, "G_MC1", tick_g, lag, bo, bo1, p.epsilon, a_state);
            Parts {
                assumption: Some(a),
                ..monitor_parts(driver, step, "G_MC1", g)
            }
        }
        ContractId::Mc2 => {
            let tick_g = b.channel("tick_g");
            let (bo, f_bo) = num_var(&mut b, "Bo_T", &prep.bo_t);
            let (wm, f_wm) = num_var(&mut b, "W_M", &prep.w_m);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_bo, f_wm], &[tick_g]);
            let bad = Expr::and(
                cmp(CmpOp::Gt, v(wm), k(0)),
                cmp(CmpOp::Gt, v(bo), k(p.t_boil + p.epsilon)),
            );
            let g = chain_monitor(&mut b, "G_MC2", tick_g, lag, None, None, |_, _| bad);
            monitor_parts(driver, step, "G_MC2", g)
        }
        ContractId::Mc3 => {
            let tick_a = b.channel("tick_a");
            let tick_g = b.channel("tick_g");
            let (wo, wo1, f_wo) = num_var_with_prev(&mut b, "Wo_M", &prep.wo_m);
            let (bt, bt1, f_bt) = num_var_with_prev(&mut b, "B_T", &prep.b_t);
            let (burner, f_on) = bool_var(&mut b, "burner_on", &prep.burner_on);
            let a_state = b.global_int("a_state", 0, 3, 2);
            let (driver, step) =
                build_driver(&mut b, prep, &p, &[f_wo, f_bt, f_on], &[tick_a, tick_g]);
            let a = trend_classifier(
                &mut b,
                "A_MC3",
                tick_a,
                wo,
                wo1,
                p.epsilon,
                Some((Expr::not(v(burner)), "NotBurning")),
                a_state,
            );
            let g = trend_monitor(&mut b, "G_MC3", tick_g, lag, bt, bt1, p.epsilon, a_state);
            Parts {
                assumption: Some(a),
                ..monitor_parts(driver, step, "G_MC3", g)
            }
        }
        ContractId::Fc1 => {
            let tick_g = b.channel("tick_g");
            let (wo, f_wo) = num_var(&mut b, "Wo_M", &prep.wo_m);
            let (wor, f_wor) = bool_var(&mut b, "Wo_R", &prep.wo_r);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_wo, f_wor], &[tick_g]);
            let bad = Expr::and(cmp(CmpOp::Lt, v(wo), k(p.wo_m_min)), Expr::not(v(wor)));
            let g = chain_monitor(&mut b, "G_FC1", tick_g, lag, None, None, |_, _| bad);
            monitor_parts(driver, step, "G_FC1", g)
        }
        ContractId::Fc2 => {
            let tick_g = b.channel("tick_g");
            let (wo, f_wo) = num_var(&mut b, "Wo_M", &prep.wo_m);
            let (wor, f_wor) = bool_var(&mut b, "Wo_R", &prep.wo_r);
            let (wod, f_wod) = bool_var(&mut b, "Wo_D", &prep.wo_d);
            let (wa, f_wa) = bool_var(&mut b, "W_A", &prep.w_a);
            let (driver, step) =
                build_driver(&mut b, prep, &p, &[f_wo, f_wor, f_wod, f_wa], &[tick_g]);
            let pending = Expr::and(v(wor), Expr::not(v(wod)));
            let g = chain_monitor(
                &mut b,
                "G_FC2",
                tick_g,
                lag,
                None,
                Some(("wait", pending.clone(), p.wood_wait + 1)),
                |_, wait| {
                    Expr::and_all(vec![
                        pending,
                        cmp(CmpOp::Ge, v(wait.unwrap()), k(p.wood_wait)),
                        cmp(CmpOp::Lt, v(wo), k(p.wo_m_min)),
                        Expr::not(v(wa)),
                    ])
                },
            );
            monitor_parts(driver, step, "G_FC2", g)
        }
        ContractId::Fc3 => {
            let tick_g = b.channel("tick_g");
            let (wo, f_wo) = num_var(&mut b, "Wo_M", &prep.wo_m);
            let (wor, f_wor) = bool_var(&mut b, "Wo_R", &prep.wo_r);
            let (wod, f_wod) = bool_var(&mut b, "Wo_D", &prep.wo_d);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_wo, f_wor, f_wod], &[tick_g]);
            let bad = Expr::and(
                cmp(CmpOp::Gt, v(wo), k(p.wo_m_min)),
                Expr::or(v(wor), v(wod)),
            );
            let g = chain_monitor(&mut b, "G_FC3", tick_g, lag, None, None, |_, _| bad);
            monitor_parts(driver, step, "G_FC3", g)
        }
        ContractId::Fc4 => {
            let tick_g = b.channel("tick_g");
            let (bt, f_bt) = num_var(&mut b, "B_T", &prep.b_t);
            let (crit, f_crit) = bool_var(&mut b, "critical_alarm", &prep.critical_alarm);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_bt, f_crit], &[tick_g]);
            let (lo, hi) = p.ideal_range;
            let in_range = Expr::and(cmp(CmpOp::Ge, v(bt), k(lo)), cmp(CmpOp::Le, v(bt), k(hi)));
            let out_of_range = Expr::or(cmp(CmpOp::Lt, v(bt), k(lo)), cmp(CmpOp::Gt, v(bt), k(hi)));
            let g = chain_monitor(
                &mut b,
                "G_FC4",
                tick_g,
                lag,
                Some(("reached_ideal", in_range)),
                None,
                |latch, _| {
                    Expr::and_all(vec![v(latch.unwrap()), out_of_range, Expr::not(v(crit))])
                },
            );
            monitor_parts(driver, step, "G_FC4", g)
        }
        ContractId::Fc5 => {
            let tick_g = b.channel("tick_g");
            let (wa, f_wa) = bool_var(&mut b, "W_A", &prep.w_a);
            let (burner, f_on) = bool_var(&mut b, "burner_on", &prep.burner_on);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_wa, f_on], &[tick_g]);
            let bad = Expr::and(v(wa), v(burner));
            let g = chain_monitor(&mut b, "G_FC5", tick_g, lag, None, None, |_, _| bad);
            monitor_parts(driver, step, "G_FC5", g)
        }
        ContractId::Fc6 => {
            let tick_g = b.channel("tick_g");
            let (wm, f_wm) = num_var(&mut b, "W_M", &prep.w_m);
            let (wo, f_wo) = num_var(&mut b, "Wo_M", &prep.wo_m);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_wm, f_wo], &[tick_g]);
            let bad = Expr::and(
                cmp(CmpOp::Gt, v(wm), k(p.w_m_min)),
                cmp(CmpOp::Le, v(wo), k(0)),
            );
            let g = chain_monitor(&mut b, "G_FC6", tick_g, lag, None, None, |_, _| bad);
            monitor_parts(driver, step, "G_FC6", g)
        }
        ContractId::Fc7 => {
            let tick_g = b.channel("tick_g");
            let (bo, f_bo) = num_var(&mut b, "Bo_T", &prep.bo_t);
            let (wm, f_wm) = num_var(&mut b, "W_M", &prep.w_m);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_bo, f_wm], &[tick_g]);
            let reached = cmp(CmpOp::Ge, v(bo), k(p.t_boil));
            let off_plateau = Expr::or(
                cmp(CmpOp::Lt, v(bo), k(p.t_boil - p.epsilon)),
                cmp(CmpOp::Gt, v(bo), k(p.t_boil + p.epsilon)),
            );
            let g = chain_monitor(
                &mut b,
                "G_FC7",
                tick_g,
                lag,
                Some(("reached_boiling", reached)),
                None,
                |latch, _| {
                    Expr::and_all(vec![
                        v(latch.unwrap()),
                        cmp(CmpOp::Gt, v(wm), k(p.w_m_min)),
                        off_plateau,
                    ])
                },
            );
            monitor_parts(driver, step, "G_FC7", g)
        }
        ContractId::Fc8 => {
            let tick_g = b.channel("tick_g");
            let (wm, f_wm) = num_var(&mut b, "W_M", &prep.w_m);
            let (wa, f_wa) = bool_var(&mut b, "W_A", &prep.w_a);
            let (burner, f_on) = bool_var(&mut b, "burner_on", &prep.burner_on);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_wm, f_wa, f_on], &[tick_g]);
            let bad = Expr::and(
                cmp(CmpOp::Lt, v(wm), k(p.w_m_min)),
                Expr::or(Expr::not(v(wa)), v(burner)),
            );
            let g = chain_monitor(&mut b, "G_FC8", tick_g, lag, None, None, |_, _| bad);
            monitor_parts(driver, step, "G_FC8", g)
        }
        ContractId::Fc9 => {
            let tick_a = b.channel("tick_a");
            let tick_g = b.channel("tick_g");
            let tick_g2 = b.channel("tick_g2");
            let (wm, f_wm) = num_var(&mut b, "W_M", &prep.w_m);
            let (wa, f_wa) = bool_var(&mut b, "W_A", &prep.w_a);
            let (burner, f_on) = bool_var(&mut b, "burner_on", &prep.burner_on);
            let (driver, step) = build_driver(
                &mut b,
                prep,
                &p,
                &[f_wm, f_wa, f_on],
                &[tick_a, tick_g, tick_g2],
            );
            let a = level_classifier(
                &mut b,
                "A_FC9",
                tick_a,
                cmp(CmpOp::Gt, v(wm), k(p.w_m_min)),
                "AboveW_min",
                "BelowW_min",
            );
            // Hold one row past the averaging window (not just past the
            // lag): the gate's W_M is a trailing average, so at a genuine
            // low-water crossing the alarm can precede the averaged level
            // falling through the threshold by up to `window` rows.
            let hold = p.held_lag();
            let g1 = held_classifier(&mut b, "G1_FC9", tick_g, hold, v(wa), "NotAlarm", "Alarm");
            let g2 = held_classifier(
                &mut b,
                "G2_FC9",
                tick_g2,
                hold,
                Expr::not(v(burner)),
                "B_off_false",
                "B_off_true",
            );
            Parts {
                driver,
                step,
                assumption: Some(a),
                guarantees: vec![g1, g2],
                primary: "A[] A_FC9.AboveW_min imply (not (G1_FC9.Alarm || G2_FC9.B_off_true))"
                    .into(),
                dual: "E<> A_FC9.AboveW_min && (G1_FC9.Alarm || G2_FC9.B_off_true)".into(),
            }
        }
        ContractId::Fc10 => {
            let tick_g = b.channel("tick_g");
            let (burner, f_on) = bool_var(&mut b, "burner_on", &prep.burner_on);
            let (bt, f_bt) = num_var(&mut b, "B_T", &prep.b_t);
            let (bo, f_bo) = num_var(&mut b, "Bo_T", &prep.bo_t);
            let (tenv, f_env) = num_var(&mut b, "T_env", &prep.t_env);
            let (driver, step) =
                build_driver(&mut b, prep, &p, &[f_on, f_bt, f_bo, f_env], &[tick_g]);
            let bad = Expr::and(
                Expr::not(v(burner)),
                Expr::or(
                    cmp(CmpOp::Lt, v(bt), v(tenv)),
                    cmp(CmpOp::Lt, v(bo), v(tenv)),
                ),
            );
            let g = chain_monitor(&mut b, "G_FC10", tick_g, lag, None, None, |_, _| bad);
            monitor_parts(driver, step, "G_FC10", g)
        }
        ContractId::Ic1 => {
            let tick_g = b.channel("tick_g");
            let (crit, f_crit) = bool_var(&mut b, "critical_alarm", &prep.critical_alarm);
            let (burner, f_on) = bool_var(&mut b, "burner_on", &prep.burner_on);
            let (driver, step) = build_driver(&mut b, prep, &p, &[f_crit, f_on], &[tick_g]);
            let g = chain_monitor(
                &mut b,
                "G_IC1",
                tick_g,
                lag,
                None,
                Some(("run", v(crit), p.alarm_hold + 1)),
                |_, run| {
                    Expr::and_all(vec![
                        v(crit),
                        cmp(CmpOp::Ge, v(run.unwrap()), k(p.alarm_hold)),
                        v(burner),
                    ])
                },
            );
            monitor_parts(driver, step, "G_IC1", g)
        }
    };

    let network = b.build()?;
    let primary = parse_query(&parts.primary, &network)?;
    let dual = parse_query(&parts.dual, &network)?;
    Ok(Compiled {
        network,
        driver: parts.driver,
        assumption: parts.assumption,
        guarantees: parts.guarantees,
        queries: [primary, dual],
        step_var: parts.step,
    })
}
