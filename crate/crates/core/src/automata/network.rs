//! Networks of timed-automaton templates with shared variables, global
//! clocks and binary synchronisation channels.
//!
//! A [`Network`] is immutable once built. Construction goes through
//! [`NetworkBuilder`], which hands out typed ids eagerly so guards and
//! updates can be written as resolved [`Expr`] trees, and validates the
//! whole network at [`NetworkBuilder::build`].

use std::collections::HashSet;

use thiserror::Error;

use super::expr::{CmpOp, Expr};
use super::zone::{Bound, ClockConstraint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Clock ids are 1-based: index 0 in zones is the constant-zero reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemplateId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SyncDir {
    Send,
    Recv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarKind {
    Bool,
    Int { lo: i64, hi: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    /// Display name; locals are prefixed as `Template.name`.
    pub name: String,
    pub kind: VarKind,
    pub init: i64,
    /// Owning template for locals, `None` for globals.
    pub owner: Option<TemplateId>,
}

impl VarDecl {
    pub fn range(&self) -> (i64, i64) {
        match self.kind {
            VarKind::Bool => (0, 1),
            VarKind::Int { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub committed: bool,
    /// Conjunction of upper bounds on clocks (downward closed in time).
    pub invariant: Vec<ClockConstraint>,
    /// Original invariant expression, kept for round-trip serialisation.
    pub invariant_expr: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Update {
    Assign(VarId, Expr),
    Reset(ClockId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: LocId,
    pub target: LocId,
    /// Original guard, kept for display and serialisation.
    pub guard: Expr,
    /// Clock-free part of the guard, evaluated on the variable valuation.
    pub guard_data: Expr,
    /// Clock conjuncts of the guard as difference constraints.
    pub guard_clocks: Vec<ClockConstraint>,
    pub sync: Option<(ChannelId, SyncDir)>,
    pub updates: Vec<Update>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UtaTemplate {
    pub name: String,
    pub locations: Vec<Location>,
    pub init: LocId,
    pub edges: Vec<Edge>,
    /// Edge indices grouped by source location, in declaration order.
    pub edges_from: Vec<Vec<usize>>,
}

impl UtaTemplate {
    pub fn location(&self, l: LocId) -> &Location {
        &self.locations[l.0]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    pub name: String,
    templates: Vec<UtaTemplate>,
    vars: Vec<VarDecl>,
    clock_names: Vec<String>,
    channel_names: Vec<String>,
}

impl Network {
    pub fn builder(name: &str) -> NetworkBuilder {
        NetworkBuilder::new(name)
    }

    pub fn templates(&self) -> &[UtaTemplate] {
        &self.templates
    }

    pub fn template(&self, t: TemplateId) -> &UtaTemplate {
        &self.templates[t.0]
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &VarDecl {
        &self.vars[v.0]
    }

    /// Number of real clocks (excluding the zone reference clock).
    pub fn num_clocks(&self) -> usize {
        self.clock_names.len()
    }

    pub fn clock_name(&self, c: ClockId) -> &str {
        &self.clock_names[c.0 - 1]
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channel_name(&self, c: ChannelId) -> &str {
        &self.channel_names[c.0]
    }

    pub fn initial_valuation(&self) -> Vec<i64> {
        self.vars.iter().map(|v| v.init).collect()
    }

    pub fn find_template(&self, name: &str) -> Option<TemplateId> {
        self.templates.iter().position(|t| t.name == name).map(TemplateId)
    }

    pub fn find_location(&self, t: TemplateId, name: &str) -> Option<LocId> {
        self.templates[t.0]
            .locations
            .iter()
            .position(|l| l.name == name)
            .map(LocId)
    }

    /// Resolve a variable by display name (`x` for globals,
    /// `Template.x` for locals).
    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn find_clock(&self, name: &str) -> Option<ClockId> {
        self.clock_names.iter().position(|c| c == name).map(|i| ClockId(i + 1))
    }

    pub fn find_channel(&self, name: &str) -> Option<ChannelId> {
        self.channel_names.iter().position(|c| c == name).map(ChannelId)
    }

    /// Render an expression with declared names (inverse of the text parser).
    pub fn expr_to_string(&self, e: &Expr) -> String {
        let mut s = String::new();
        self.fmt_expr(e, 0, &mut s);
        s
    }

    fn fmt_expr(&self, e: &Expr, parent_prec: u8, out: &mut String) {
        // Precedence: imply 1, or 2, and 3, cmp 4, add/sub 5, mul 6, unary 7.
        use super::expr::BinOp;
        let prec = match e {
            Expr::Imply(..) => 1,
            Expr::Or(..) => 2,
            Expr::And(..) => 3,
            Expr::Cmp(..) | Expr::ClockCmp(..) | Expr::ClockDiff(..) => 4,
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 5,
            Expr::Bin(BinOp::Mul, ..) => 6,
            Expr::Not(..) => 7,
            _ => 8,
        };
        let need_parens = prec < parent_prec;
        if need_parens {
            out.push('(');
        }
        match e {
            Expr::Const(v) => out.push_str(&v.to_string()),
            Expr::Var(v) => out.push_str(&self.vars[v.0].name),
            Expr::Loc(t, l) => {
                out.push_str(&self.templates[t.0].name);
                out.push('.');
                out.push_str(&self.templates[t.0].locations[l.0].name);
            }
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    super::expr::BinOp::Add => " + ",
                    super::expr::BinOp::Sub => " - ",
                    super::expr::BinOp::Mul => " * ",
                };
                self.fmt_expr(a, prec, out);
                out.push_str(sym);
                self.fmt_expr(b, prec + 1, out);
            }
            Expr::Cmp(op, a, b) => {
                self.fmt_expr(a, prec + 1, out);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                self.fmt_expr(b, prec + 1, out);
            }
            Expr::Not(a) => {
                out.push('!');
                self.fmt_expr(a, prec, out);
            }
            Expr::And(a, b) => {
                self.fmt_expr(a, prec, out);
                out.push_str(" && ");
                self.fmt_expr(b, prec + 1, out);
            }
            Expr::Or(a, b) => {
                self.fmt_expr(a, prec, out);
                out.push_str(" || ");
                self.fmt_expr(b, prec + 1, out);
            }
            Expr::Imply(a, b) => {
                self.fmt_expr(a, prec + 1, out);
                out.push_str(" imply ");
                self.fmt_expr(b, prec, out);
            }
            Expr::ClockCmp(c, op, k) => {
                out.push_str(self.clock_name(*c));
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                out.push_str(&k.to_string());
            }
            Expr::ClockDiff(a, b, op, k) => {
                out.push_str(self.clock_name(*a));
                out.push_str(" - ");
                out.push_str(self.clock_name(*b));
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                out.push_str(&k.to_string());
            }
        }
        if need_parens {
            out.push(')');
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("template `{template}` has no locations")]
    EmptyTemplate { template: String },
    #[error("template `{template}`: initial value {init} of `{var}` outside [{lo}, {hi}]")]
    InitOutOfRange {
        template: String,
        var: String,
        init: i64,
        lo: i64,
        hi: i64,
    },
    #[error("variable `{var}`: range [{lo}, {hi}] is empty")]
    EmptyRange { var: String, lo: i64, hi: i64 },
    #[error("template `{template}`, location `{location}`: invariants must be conjunctions of upper-bound clock constraints")]
    InvariantNotUpperBound { template: String, location: String },
    #[error("template `{template}`, edge {edge}: clock constraints in guards must be conjunctive and compare clocks against integer constants")]
    GuardClockForm { template: String, edge: usize },
    #[error("template `{template}`, edge {edge}: `!=` over clocks is not convex")]
    NonConvexClockConstraint { template: String, edge: usize },
    #[error("template `{template}`, edge {edge}: location atoms are only allowed in query predicates")]
    LocationAtomInGuard { template: String, edge: usize },
    #[error("template `{template}`, edge {edge}: update of `{var}` may not read clocks")]
    ClockInUpdate { template: String, edge: usize, var: String },
}

struct TemplateProto {
    name: String,
    locations: Vec<Location>,
    init: Option<LocId>,
    edges: Vec<Edge>,
    raw_invariants: Vec<(LocId, Expr)>,
}

pub struct EdgeDef {
    pub from: LocId,
    pub to: LocId,
    pub guard: Expr,
    pub sync: Option<(ChannelId, SyncDir)>,
    pub updates: Vec<Update>,
}

impl EdgeDef {
    pub fn new(from: LocId, to: LocId) -> EdgeDef {
        EdgeDef {
            from,
            to,
            guard: Expr::tt(),
            sync: None,
            updates: Vec::new(),
        }
    }

    pub fn guard(mut self, g: Expr) -> EdgeDef {
        self.guard = g;
        self
    }

    pub fn sync(mut self, ch: ChannelId, dir: SyncDir) -> EdgeDef {
        self.sync = Some((ch, dir));
        self
    }

    pub fn update(mut self, u: Update) -> EdgeDef {
        self.updates.push(u);
        self
    }

    pub fn assign(mut self, var: VarId, e: Expr) -> EdgeDef {
        self.updates.push(Update::Assign(var, e));
        self
    }

    pub fn reset(mut self, c: ClockId) -> EdgeDef {
        self.updates.push(Update::Reset(c));
        self
    }
}

pub struct NetworkBuilder {
    name: String,
    vars: Vec<VarDecl>,
    clock_names: Vec<String>,
    channel_names: Vec<String>,
    templates: Vec<TemplateProto>,
}

impl NetworkBuilder {
    fn new(name: &str) -> NetworkBuilder {
        NetworkBuilder {
            name: name.to_string(),
            vars: Vec::new(),
            clock_names: Vec::new(),
            channel_names: Vec::new(),
            templates: Vec::new(),
        }
    }

    pub fn channel(&mut self, name: &str) -> ChannelId {
        self.channel_names.push(name.to_string());
        ChannelId(self.channel_names.len() - 1)
    }

    pub fn global_int(&mut self, name: &str, lo: i64, hi: i64, init: i64) -> VarId {
        self.vars.push(VarDecl {
            name: name.to_string(),
            kind: VarKind::Int { lo, hi },
            init,
            owner: None,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn global_bool(&mut self, name: &str, init: bool) -> VarId {
        self.vars.push(VarDecl {
            name: name.to_string(),
            kind: VarKind::Bool,
            init: init as i64,
            owner: None,
        });
        VarId(self.vars.len() - 1)
    }

    /// Clocks share one global namespace; a clock declared here may be
    /// referenced from any template's guards.
    pub fn clock(&mut self, name: &str) -> ClockId {
        self.clock_names.push(name.to_string());
        ClockId(self.clock_names.len())
    }

    pub fn template(&mut self, name: &str) -> TemplateId {
        self.templates.push(TemplateProto {
            name: name.to_string(),
            locations: Vec::new(),
            init: None,
            edges: Vec::new(),
            raw_invariants: Vec::new(),
        });
        TemplateId(self.templates.len() - 1)
    }

    pub fn local_int(&mut self, t: TemplateId, name: &str, lo: i64, hi: i64, init: i64) -> VarId {
        let full = format!("{}.{}", self.templates[t.0].name, name);
        self.vars.push(VarDecl {
            name: full,
            kind: VarKind::Int { lo, hi },
            init,
            owner: Some(t),
        });
        VarId(self.vars.len() - 1)
    }

    pub fn local_bool(&mut self, t: TemplateId, name: &str, init: bool) -> VarId {
        let full = format!("{}.{}", self.templates[t.0].name, name);
        self.vars.push(VarDecl {
            name: full,
            kind: VarKind::Bool,
            init: init as i64,
            owner: Some(t),
        });
        VarId(self.vars.len() - 1)
    }

    pub fn location(&mut self, t: TemplateId, name: &str) -> LocId {
        let tpl = &mut self.templates[t.0];
        tpl.locations.push(Location {
            name: name.to_string(),
            committed: false,
            invariant: Vec::new(),
            invariant_expr: None,
        });
        let id = LocId(tpl.locations.len() - 1);
        if tpl.init.is_none() {
            tpl.init = Some(id);
        }
        id
    }

    pub fn committed_location(&mut self, t: TemplateId, name: &str) -> LocId {
        let id = self.location(t, name);
        self.templates[t.0].locations[id.0].committed = true;
        id
    }

    /// First declared location is initial by default; this overrides it.
    pub fn set_init(&mut self, t: TemplateId, l: LocId) {
        self.templates[t.0].init = Some(l);
    }

    pub fn invariant(&mut self, t: TemplateId, l: LocId, e: Expr) {
        self.templates[t.0].raw_invariants.push((l, e));
    }

    pub fn edge(&mut self, t: TemplateId, def: EdgeDef) {
        self.templates[t.0].edges.push(Edge {
            source: def.from,
            target: def.to,
            guard: def.guard.clone(),
            guard_data: Expr::tt(), // compiled in build()
            guard_clocks: Vec::new(),
            sync: def.sync,
            updates: def.updates,
        });
    }

    pub fn build(self) -> Result<Network, BuildError> {
        let NetworkBuilder {
            name,
            vars,
            clock_names,
            channel_names,
            mut templates,
        } = self;

        check_unique("variable", vars.iter().map(|v| v.name.as_str()))?;
        check_unique("clock", clock_names.iter().map(|s| s.as_str()))?;
        check_unique("channel", channel_names.iter().map(|s| s.as_str()))?;
        check_unique("template", templates.iter().map(|t| t.name.as_str()))?;

        for v in &vars {
            let (lo, hi) = v.range();
            if lo > hi {
                return Err(BuildError::EmptyRange {
                    var: v.name.clone(),
                    lo,
                    hi,
                });
            }
            if v.init < lo || v.init > hi {
                return Err(BuildError::InitOutOfRange {
                    template: v
                        .owner
                        .map(|t| templates[t.0].name.clone())
                        .unwrap_or_else(|| "<global>".into()),
                    var: v.name.clone(),
                    init: v.init,
                    lo,
                    hi,
                });
            }
        }

        let mut built = Vec::with_capacity(templates.len());
        for proto in templates.iter_mut() {
            if proto.locations.is_empty() {
                return Err(BuildError::EmptyTemplate {
                    template: proto.name.clone(),
                });
            }
            check_unique("location", proto.locations.iter().map(|l| l.name.as_str()))?;

            // Compile invariants: upper-bound clock conjunctions only.
            for (loc, e) in std::mem::take(&mut proto.raw_invariants) {
                let mut constraints = Vec::new();
                for atom in e.split_conjuncts() {
                    match atom {
                        Expr::ClockCmp(c, CmpOp::Le, k) => constraints.push(ClockConstraint {
                            i: c.0,
                            j: 0,
                            bound: Bound::le(*k),
                        }),
                        Expr::ClockCmp(c, CmpOp::Lt, k) => constraints.push(ClockConstraint {
                            i: c.0,
                            j: 0,
                            bound: Bound::lt(*k),
                        }),
                        _ => {
                            return Err(BuildError::InvariantNotUpperBound {
                                template: proto.name.clone(),
                                location: proto.locations[loc.0].name.clone(),
                            })
                        }
                    }
                }
                let l = &mut proto.locations[loc.0];
                l.invariant.extend(constraints);
                l.invariant_expr = Some(match l.invariant_expr.take() {
                    None => e,
                    Some(prev) => Expr::and(prev, e),
                });
            }

            // Compile guards into data part + clock constraints.
            for (ei, edge) in proto.edges.iter_mut().enumerate() {
                let (data, clocks) =
                    compile_guard(&edge.guard).map_err(|kind| match kind {
                        GuardErr::Form => BuildError::GuardClockForm {
                            template: proto.name.clone(),
                            edge: ei,
                        },
                        GuardErr::NonConvex => BuildError::NonConvexClockConstraint {
                            template: proto.name.clone(),
                            edge: ei,
                        },
                    })?;
                if data.mentions_location() {
                    return Err(BuildError::LocationAtomInGuard {
                        template: proto.name.clone(),
                        edge: ei,
                    });
                }
                for u in &edge.updates {
                    if let Update::Assign(v, e) = u {
                        if e.mentions_clock() {
                            return Err(BuildError::ClockInUpdate {
                                template: proto.name.clone(),
                                edge: ei,
                                var: vars[v.0].name.clone(),
                            });
                        }
                    }
                }
                edge.guard_data = data;
                edge.guard_clocks = clocks;
            }

            let mut edges_from = vec![Vec::new(); proto.locations.len()];
            for (i, e) in proto.edges.iter().enumerate() {
                edges_from[e.source.0].push(i);
            }

            built.push(UtaTemplate {
                name: proto.name.clone(),
                locations: std::mem::take(&mut proto.locations),
                init: proto.init.expect("non-empty template has an init location"),
                edges: std::mem::take(&mut proto.edges),
                edges_from,
            });
        }

        Ok(Network {
            name,
            templates: built,
            vars,
            clock_names,
            channel_names,
        })
    }
}

enum GuardErr {
    Form,
    NonConvex,
}

/// Split a guard into (clock-free data expression, clock constraints).
/// Clock atoms must be top-level conjuncts.
fn compile_guard(guard: &Expr) -> Result<(Expr, Vec<ClockConstraint>), GuardErr> {
    let mut data = Vec::new();
    let mut clocks = Vec::new();
    for atom in guard.split_conjuncts() {
        match atom {
            Expr::ClockCmp(c, op, k) => {
                push_clock_cmp(&mut clocks, c.0, 0, *op, *k)?;
            }
            Expr::ClockDiff(a, b, op, k) => {
                push_clock_cmp(&mut clocks, a.0, b.0, *op, *k)?;
            }
            other => {
                if other.mentions_clock() {
                    return Err(GuardErr::Form);
                }
                data.push(other.clone());
            }
        }
    }
    Ok((Expr::and_all(data), clocks))
}

fn push_clock_cmp(
    out: &mut Vec<ClockConstraint>,
    i: usize,
    j: usize,
    op: CmpOp,
    k: i64,
) -> Result<(), GuardErr> {
    match op {
        CmpOp::Lt => out.push(ClockConstraint { i, j, bound: Bound::lt(k) }),
        CmpOp::Le => out.push(ClockConstraint { i, j, bound: Bound::le(k) }),
        CmpOp::Gt => out.push(ClockConstraint { i: j, j: i, bound: Bound::lt(-k) }),
        CmpOp::Ge => out.push(ClockConstraint { i: j, j: i, bound: Bound::le(-k) }),
        CmpOp::Eq => {
            out.push(ClockConstraint { i, j, bound: Bound::le(k) });
            out.push(ClockConstraint { i: j, j: i, bound: Bound::le(-k) });
        }
        CmpOp::Ne => return Err(GuardErr::NonConvex),
    }
    Ok(())
}

fn check_unique<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a str>,
) -> Result<(), BuildError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(BuildError::DuplicateName {
                kind,
                name: n.to_string(),
            });
        }
    }
    Ok(())
}
