//! Seeded generation of small random networks and queries.
//!
//! Generated networks are *closed*: every clock comparison is non-strict
//! (`<=`, `>=`, `==`). On closed networks the unit-tick interpreter in
//! [`super::oracle`] explores exhaustively, so the symbolic checker must
//! agree with it on every query — the backbone of the engine's
//! cross-validation tests.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::automata::{CmpOp, EdgeDef, Expr, LocId, Network, SyncDir, TemplateId, VarId};

use super::query::{Query, QueryKind};

pub struct GeneratedCase {
    pub net: Network,
    pub query: Query,
    pub horizon: i64,
}

/// Deterministically generate one network + query pair from a seed.
pub fn random_case(seed: u64) -> GeneratedCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_closed_network(&mut rng);
    let query = random_query(&mut rng, &net);
    let horizon = rng.gen_range(5..=20);
    GeneratedCase { net, query, horizon }
}

fn random_closed_network(rng: &mut ChaCha8Rng) -> Network {
    let mut b = Network::builder("generated");

    let n_channels = rng.gen_range(0..=2);
    let channels: Vec<_> = (0..n_channels).map(|i| b.channel(&format!("ch{i}"))).collect();

    let n_clocks = rng.gen_range(0..=2);
    let clocks: Vec<_> = (0..n_clocks).map(|i| b.clock(&format!("x{i}"))).collect();

    let n_vars = rng.gen_range(1..=3);
    let vars: Vec<VarId> = (0..n_vars)
        .map(|i| {
            let init = rng.gen_range(0..=5);
            b.global_int(&format!("v{i}"), 0, 5, init)
        })
        .collect();

    // Per channel and direction, (template, source, target) candidates used
    // to guarantee every channel has at least one send and one receive.
    let mut sync_uses = vec![[false, false]; channels.len()];
    let mut template_locs: Vec<(crate::automata::TemplateId, Vec<LocId>)> = Vec::new();

    let n_templates = rng.gen_range(1..=3);
    for ti in 0..n_templates {
        let t = b.template(&format!("T{ti}"));
        let n_locs = rng.gen_range(2..=4);
        let locs: Vec<LocId> = (0..n_locs)
            .map(|li| {
                let name = format!("l{li}");
                if rng.gen_bool(0.15) {
                    b.committed_location(t, &name)
                } else {
                    b.location(t, &name)
                }
            })
            .collect();
        for &l in &locs {
            if !clocks.is_empty() && rng.gen_bool(0.3) {
                let c = clocks[rng.gen_range(0..clocks.len())];
                let k = rng.gen_range(1..=5);
                b.invariant(t, l, Expr::ClockCmp(c, CmpOp::Le, k));
            }
        }

        // Backbone: a cycle through the locations, so every location has a
        // way out and the discrete state space is actually walked.
        let n_extra = rng.gen_range(0..=2);
        let backbone = (0..locs.len()).map(|li| (locs[li], locs[(li + 1) % locs.len()], true));
        let extras = (0..n_extra).map(|_| {
            (
                locs[rng.gen_range(0..locs.len())],
                locs[rng.gen_range(0..locs.len())],
                false,
            )
        });
        for (from, to, on_backbone) in backbone.chain(extras.collect::<Vec<_>>()) {
            let mut def = EdgeDef::new(from, to);

            // Backbone edges get light guards to keep progress likely.
            let max_atoms = if on_backbone { 1 } else { 2 };
            let guard_p = if on_backbone { 0.4 } else { 0.7 };
            let mut guard_atoms = Vec::new();
            for _ in 0..max_atoms {
                if !rng.gen_bool(guard_p) {
                    continue;
                }
                if !clocks.is_empty() && rng.gen_bool(0.5) {
                    let c = clocks[rng.gen_range(0..clocks.len())];
                    let op = *[CmpOp::Le, CmpOp::Ge, CmpOp::Eq].choose(rng).unwrap();
                    let k = if op == CmpOp::Le { rng.gen_range(1..=5) } else { rng.gen_range(0..=3) };
                    guard_atoms.push(Expr::ClockCmp(c, op, k));
                } else {
                    let v = vars[rng.gen_range(0..vars.len())];
                    let op = *[CmpOp::Le, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne].choose(rng).unwrap();
                    guard_atoms.push(Expr::cmp(op, Expr::var(v), Expr::Const(rng.gen_range(0..=5))));
                }
            }
            if !guard_atoms.is_empty() {
                def = def.guard(Expr::and_all(guard_atoms));
            }

            if !channels.is_empty() && n_templates > 1 && rng.gen_bool(0.25) {
                let ci = rng.gen_range(0..channels.len());
                let dir = if rng.gen_bool(0.5) { SyncDir::Send } else { SyncDir::Recv };
                sync_uses[ci][(dir == SyncDir::Recv) as usize] = true;
                def = def.sync(channels[ci], dir);
            }

            for _ in 0..rng.gen_range(0..=2) {
                if !clocks.is_empty() && rng.gen_bool(0.4) {
                    def = def.reset(clocks[rng.gen_range(0..clocks.len())]);
                } else {
                    let v = vars[rng.gen_range(0..vars.len())];
                    def = def.assign(v, Expr::Const(rng.gen_range(0..=5)));
                }
            }

            b.edge(t, def);
        }
        template_locs.push((t, locs));
    }

    // Complete half-used channels with a matching self-loop in some other
    // template, so synchronisations can actually fire.
    if n_templates > 1 {
        for (ci, uses) in sync_uses.iter().enumerate() {
            for (need_idx, dir) in [(1, SyncDir::Recv), (0, SyncDir::Send)] {
                if uses[1 - need_idx] && !uses[need_idx] {
                    let (t, locs) = &template_locs[rng.gen_range(0..template_locs.len())];
                    let l = locs[rng.gen_range(0..locs.len())];
                    b.edge(*t, EdgeDef::new(l, l).sync(channels[ci], dir));
                }
            }
        }
    }

    b.build().expect("generated networks are well-formed by construction")
}

fn random_query(rng: &mut ChaCha8Rng, net: &Network) -> Query {
    let n_atoms = rng.gen_range(1..=3);
    let mut atoms = Vec::new();
    for _ in 0..n_atoms {
        let atom = if rng.gen_bool(0.5) {
            let ti = rng.gen_range(0..net.templates().len());
            let tpl = &net.templates()[ti];
            let li = rng.gen_range(0..tpl.locations.len());
            Expr::Loc(TemplateId(ti), LocId(li))
        } else {
            let vi = rng.gen_range(0..net.vars().len());
            let op = *[CmpOp::Le, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne].choose(rng).unwrap();
            Expr::cmp(op, Expr::var(VarId(vi)), Expr::Const(rng.gen_range(0..=5)))
        };
        let atom = if rng.gen_bool(0.3) { Expr::not(atom) } else { atom };
        atoms.push(atom);
    }
    let predicate = if rng.gen_bool(0.5) {
        Expr::and_all(atoms)
    } else {
        Expr::or_all(atoms)
    };
    let kind = if rng.gen_bool(0.5) {
        QueryKind::Invariance
    } else {
        QueryKind::Reachability
    };
    Query::new(kind, predicate, net)
}
