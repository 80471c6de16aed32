//! Text serialisation of networks and parsing of query predicates.
//!
//! The format is line-oriented only by convention; braces and keywords carry
//! all structure. See `docs/formats.md` at the repository root for the
//! grammar. `serialize_network` followed by `parse_network` reproduces the
//! network whenever declarations appear in serialisation order (globals
//! before templates); `parse_network` followed by `serialize_network` is a
//! fixpoint.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::expr::{BinOp, CmpOp, Expr};
use super::network::{
    ChannelId, ClockId, EdgeDef, LocId, Network, SyncDir, TemplateId, Update, VarId, VarKind,
};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

impl ParseError {
    fn new(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: u32,
    col: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Arrow,  // ->
    Assign, // :=
    Eq,     // =
    Lt,
    Le,
    EqEq,
    Ne,
    Ge,
    Gt,
    AndAnd,
    OrOr,
    Bang,
    Question,
    Plus,
    Minus,
    Star,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        let pos = Pos { line, col };
        let Some(&c) = chars.peek() else { break };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), pos));
            }
            '0'..='9' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                let v: i64 = s
                    .parse()
                    .map_err(|_| ParseError::new(pos, format!("integer literal `{s}` out of range")))?;
                out.push((Tok::Int(v), pos));
            }
            _ => {
                bump!();
                let two = |chars: &mut std::iter::Peekable<std::str::Chars>, want: char| {
                    if chars.peek() == Some(&want) {
                        true
                    } else {
                        false
                    }
                };
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '.' => Tok::Dot,
                    '+' => Tok::Plus,
                    '*' => Tok::Star,
                    '?' => Tok::Question,
                    '-' => {
                        if two(&mut chars, '>') {
                            bump!();
                            Tok::Arrow
                        } else {
                            Tok::Minus
                        }
                    }
                    ':' => {
                        if two(&mut chars, '=') {
                            bump!();
                            Tok::Assign
                        } else {
                            return Err(ParseError::new(pos, "expected `:=`"));
                        }
                    }
                    '=' => {
                        if two(&mut chars, '=') {
                            bump!();
                            Tok::EqEq
                        } else {
                            Tok::Eq
                        }
                    }
                    '<' => {
                        if two(&mut chars, '=') {
                            bump!();
                            Tok::Le
                        } else {
                            Tok::Lt
                        }
                    }
                    '>' => {
                        if two(&mut chars, '=') {
                            bump!();
                            Tok::Ge
                        } else {
                            Tok::Gt
                        }
                    }
                    '!' => {
                        if two(&mut chars, '=') {
                            bump!();
                            Tok::Ne
                        } else {
                            Tok::Bang
                        }
                    }
                    '&' => {
                        if two(&mut chars, '&') {
                            bump!();
                            Tok::AndAnd
                        } else {
                            return Err(ParseError::new(pos, "expected `&&`"));
                        }
                    }
                    '|' => {
                        if two(&mut chars, '|') {
                            bump!();
                            Tok::OrOr
                        } else {
                            return Err(ParseError::new(pos, "expected `||`"));
                        }
                    }
                    other => {
                        return Err(ParseError::new(pos, format!("unexpected character `{other}`")))
                    }
                };
                out.push((tok, pos));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parse trees (names unresolved).

#[derive(Clone, Debug)]
enum PExpr {
    Int(i64, Pos),
    Bool(bool, Pos),
    Ident(String, Pos),
    Dotted(String, String, Pos),
    Neg(Box<PExpr>, Pos),
    Not(Box<PExpr>, Pos),
    Bin(BinOp, Box<PExpr>, Box<PExpr>, Pos),
    Cmp(CmpOp, Box<PExpr>, Box<PExpr>, Pos),
    And(Box<PExpr>, Box<PExpr>, Pos),
    Or(Box<PExpr>, Box<PExpr>, Pos),
    Imply(Box<PExpr>, Box<PExpr>, Pos),
}

impl PExpr {
    fn pos(&self) -> Pos {
        match self {
            PExpr::Int(_, p)
            | PExpr::Bool(_, p)
            | PExpr::Ident(_, p)
            | PExpr::Dotted(_, _, p)
            | PExpr::Neg(_, p)
            | PExpr::Not(_, p)
            | PExpr::Bin(_, _, _, p)
            | PExpr::Cmp(_, _, _, p)
            | PExpr::And(_, _, p)
            | PExpr::Or(_, _, p)
            | PExpr::Imply(_, _, p) => *p,
        }
    }
}

struct PVar {
    kind: VarKind,
    name: String,
    init: i64,
}

struct PLocation {
    name: String,
    committed: bool,
    invariant: Option<PExpr>,
    pos: Pos,
}

struct PEdge {
    from: (String, Pos),
    to: (String, Pos),
    guard: Option<PExpr>,
    sync: Option<(String, SyncDir, Pos)>,
    updates: Vec<(String, Pos, PExpr)>,
}

struct PTemplate {
    name: String,
    clocks: Vec<String>,
    locals: Vec<PVar>,
    locations: Vec<PLocation>,
    init: Option<(String, Pos)>,
    edges: Vec<PEdge>,
}

struct PNetwork {
    name: String,
    channels: Vec<String>,
    clocks: Vec<String>,
    globals: Vec<PVar>,
    templates: Vec<PTemplate>,
}

// ---------------------------------------------------------------------------
// Token-stream parser.

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks
            .get(self.at)
            .or_else(|| self.toks.last())
            .map(|(_, p)| *p)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Pos, ParseError> {
        match self.next() {
            Some((t, p)) if t == want => Ok(p),
            Some((t, p)) => Err(ParseError::new(p, format!("expected {what}, found {t:?}"))),
            None => Err(ParseError::new(self.pos(), format!("expected {what}, found end of input"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.next() {
            Some((Tok::Ident(s), p)) => Ok((s, p)),
            Some((t, p)) => Err(ParseError::new(p, format!("expected {what}, found {t:?}"))),
            None => Err(ParseError::new(self.pos(), format!("expected {what}, found end of input"))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        let (s, p) = self.expect_ident(&format!("`{kw}`"))?;
        if s == kw {
            Ok(p)
        } else {
            Err(ParseError::new(p, format!("expected `{kw}`, found `{s}`")))
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == kw {
                self.at += 1;
                return true;
            }
        }
        false
    }

    fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    /// Signed integer literal (declarations only).
    fn parse_int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat(&Tok::Minus);
        match self.next() {
            Some((Tok::Int(v), _)) => Ok(if neg { -v } else { v }),
            Some((Tok::Ident(s), _)) if s == "true" => Ok(1),
            Some((Tok::Ident(s), _)) if s == "false" => Ok(0),
            Some((t, p)) => Err(ParseError::new(p, format!("expected integer, found {t:?}"))),
            None => Err(ParseError::new(self.pos(), "expected integer, found end of input")),
        }
    }

    // Expression precedence: imply < or < and < cmp < add/sub < mul < unary.
    fn parse_expr(&mut self) -> Result<PExpr, ParseError> {
        self.parse_imply()
    }

    fn parse_imply(&mut self) -> Result<PExpr, ParseError> {
        let lhs = self.parse_or()?;
        if self.eat_keyword("imply") {
            let pos = lhs.pos();
            let rhs = self.parse_imply()?;
            Ok(PExpr::Imply(Box::new(lhs), Box::new(rhs), pos))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.parse_and()?;
        loop {
            if self.eat(&Tok::OrOr) || self.eat_keyword("or") {
                let pos = lhs.pos();
                let rhs = self.parse_and()?;
                lhs = PExpr::Or(Box::new(lhs), Box::new(rhs), pos);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_and(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.parse_cmp()?;
        loop {
            if self.eat(&Tok::AndAnd) || self.eat_keyword("and") {
                let pos = lhs.pos();
                let rhs = self.parse_cmp()?;
                lhs = PExpr::And(Box::new(lhs), Box::new(rhs), pos);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_cmp(&mut self) -> Result<PExpr, ParseError> {
        let lhs = self.parse_addsub()?;
        let op = match self.peek() {
            Some(Tok::Lt) => Some(CmpOp::Lt),
            Some(Tok::Le) => Some(CmpOp::Le),
            Some(Tok::EqEq) => Some(CmpOp::Eq),
            Some(Tok::Ne) => Some(CmpOp::Ne),
            Some(Tok::Ge) => Some(CmpOp::Ge),
            Some(Tok::Gt) => Some(CmpOp::Gt),
            _ => None,
        };
        if let Some(op) = op {
            self.at += 1;
            let pos = lhs.pos();
            let rhs = self.parse_addsub()?;
            Ok(PExpr::Cmp(op, Box::new(lhs), Box::new(rhs), pos))
        } else {
            Ok(lhs)
        }
    }

    fn parse_addsub(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.parse_mul()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => Some(BinOp::Add),
                Some(Tok::Minus) => Some(BinOp::Sub),
                _ => None,
            };
            let Some(op) = op else { return Ok(lhs) };
            self.at += 1;
            let pos = lhs.pos();
            let rhs = self.parse_mul()?;
            lhs = PExpr::Bin(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn parse_mul(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.parse_unary()?;
        while self.eat(&Tok::Star) {
            let pos = lhs.pos();
            let rhs = self.parse_unary()?;
            lhs = PExpr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<PExpr, ParseError> {
        let pos = self.pos();
        if self.eat(&Tok::Bang) || self.eat_keyword("not") {
            let e = self.parse_unary()?;
            return Ok(PExpr::Not(Box::new(e), pos));
        }
        if self.eat(&Tok::Minus) {
            let e = self.parse_unary()?;
            return Ok(PExpr::Neg(Box::new(e), pos));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<PExpr, ParseError> {
        match self.next() {
            Some((Tok::Int(v), p)) => Ok(PExpr::Int(v, p)),
            Some((Tok::LParen, _)) => {
                let e = self.parse_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some((Tok::Ident(s), p)) => match s.as_str() {
                "true" => Ok(PExpr::Bool(true, p)),
                "false" => Ok(PExpr::Bool(false, p)),
                _ => {
                    if self.eat(&Tok::Dot) {
                        let (field, _) = self.expect_ident("identifier after `.`")?;
                        Ok(PExpr::Dotted(s, field, p))
                    } else {
                        Ok(PExpr::Ident(s, p))
                    }
                }
            },
            Some((t, p)) => Err(ParseError::new(p, format!("expected expression, found {t:?}"))),
            None => Err(ParseError::new(self.pos(), "expected expression, found end of input")),
        }
    }

    // -- network structure ---------------------------------------------------

    fn parse_network_file(&mut self) -> Result<PNetwork, ParseError> {
        self.expect_keyword("network")?;
        let (name, _) = self.expect_ident("network name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut net = PNetwork {
            name,
            channels: Vec::new(),
            clocks: Vec::new(),
            globals: Vec::new(),
            templates: Vec::new(),
        };
        loop {
            if self.eat(&Tok::RBrace) {
                break;
            }
            let (kw, p) = self.expect_ident("declaration")?;
            match kw.as_str() {
                "channel" => {
                    let (n, _) = self.expect_ident("channel name")?;
                    net.channels.push(n);
                }
                "clock" => {
                    let (n, _) = self.expect_ident("clock name")?;
                    net.clocks.push(n);
                }
                "global" => net.globals.push(self.parse_var_decl()?),
                "template" => net.templates.push(self.parse_template()?),
                other => {
                    return Err(ParseError::new(
                        p,
                        format!("expected `channel`, `clock`, `global` or `template`, found `{other}`"),
                    ))
                }
            }
        }
        if !self.at_end() {
            return Err(ParseError::new(self.pos(), "trailing input after network"));
        }
        Ok(net)
    }

    fn parse_var_decl(&mut self) -> Result<PVar, ParseError> {
        let (kind_name, p) = self.expect_ident("`int` or `bool`")?;
        match kind_name.as_str() {
            "int" => {
                let (name, _) = self.expect_ident("variable name")?;
                self.expect(Tok::LBracket, "`[`")?;
                let lo = self.parse_int()?;
                self.expect(Tok::Comma, "`,`")?;
                let hi = self.parse_int()?;
                self.expect(Tok::RBracket, "`]`")?;
                self.expect(Tok::Eq, "`=`")?;
                let init = self.parse_int()?;
                Ok(PVar {
                    kind: VarKind::Int { lo, hi },
                    name,
                    init,
                })
            }
            "bool" => {
                let (name, _) = self.expect_ident("variable name")?;
                self.expect(Tok::Eq, "`=`")?;
                let init = self.parse_int()?;
                Ok(PVar {
                    kind: VarKind::Bool,
                    name,
                    init,
                })
            }
            other => Err(ParseError::new(p, format!("expected `int` or `bool`, found `{other}`"))),
        }
    }

    fn parse_template(&mut self) -> Result<PTemplate, ParseError> {
        let (name, _) = self.expect_ident("template name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut tpl = PTemplate {
            name,
            clocks: Vec::new(),
            locals: Vec::new(),
            locations: Vec::new(),
            init: None,
            edges: Vec::new(),
        };
        loop {
            if self.eat(&Tok::RBrace) {
                break;
            }
            let (kw, p) = self.expect_ident("template item")?;
            match kw.as_str() {
                "clock" => {
                    let (n, _) = self.expect_ident("clock name")?;
                    tpl.clocks.push(n);
                }
                "local" => tpl.locals.push(self.parse_var_decl()?),
                "init" => {
                    let (n, np) = self.expect_ident("location name")?;
                    tpl.init = Some((n, np));
                }
                "location" => tpl.locations.push(self.parse_location()?),
                "edge" => tpl.edges.push(self.parse_edge()?),
                other => {
                    return Err(ParseError::new(
                        p,
                        format!(
                            "expected `clock`, `local`, `init`, `location` or `edge`, found `{other}`"
                        ),
                    ))
                }
            }
        }
        Ok(tpl)
    }

    fn parse_location(&mut self) -> Result<PLocation, ParseError> {
        let (name, pos) = self.expect_ident("location name")?;
        let mut loc = PLocation {
            name,
            committed: false,
            invariant: None,
            pos,
        };
        if self.eat(&Tok::LBrace) {
            loop {
                if self.eat(&Tok::RBrace) {
                    break;
                }
                let (kw, p) = self.expect_ident("`committed` or `invariant`")?;
                match kw.as_str() {
                    "committed" => loc.committed = true,
                    "invariant" => {
                        let e = self.parse_expr()?;
                        loc.invariant = Some(match loc.invariant.take() {
                            None => e,
                            Some(prev) => {
                                let pp = prev.pos();
                                PExpr::And(Box::new(prev), Box::new(e), pp)
                            }
                        });
                    }
                    other => {
                        return Err(ParseError::new(
                            p,
                            format!("expected `committed` or `invariant`, found `{other}`"),
                        ))
                    }
                }
                self.eat(&Tok::Semi);
            }
        }
        Ok(loc)
    }

    fn parse_edge(&mut self) -> Result<PEdge, ParseError> {
        let from = self.expect_ident("source location")?;
        self.expect(Tok::Arrow, "`->`")?;
        let to = self.expect_ident("target location")?;
        let mut edge = PEdge {
            from,
            to,
            guard: None,
            sync: None,
            updates: Vec::new(),
        };
        if self.eat(&Tok::LBrace) {
            loop {
                if self.eat(&Tok::RBrace) {
                    break;
                }
                let (kw, p) = self.expect_ident("`guard`, `sync` or `update`")?;
                match kw.as_str() {
                    "guard" => {
                        let e = self.parse_expr()?;
                        edge.guard = Some(match edge.guard.take() {
                            None => e,
                            Some(prev) => {
                                let pp = prev.pos();
                                PExpr::And(Box::new(prev), Box::new(e), pp)
                            }
                        });
                    }
                    "sync" => {
                        let (ch, chp) = self.expect_ident("channel name")?;
                        let dir = if self.eat(&Tok::Bang) {
                            SyncDir::Send
                        } else if self.eat(&Tok::Question) {
                            SyncDir::Recv
                        } else {
                            return Err(ParseError::new(chp, "expected `!` or `?` after channel name"));
                        };
                        edge.sync = Some((ch, dir, chp));
                    }
                    "update" => loop {
                        let (var, vp) = self.expect_ident("variable or clock name")?;
                        let (var, vp) = if self.eat(&Tok::Dot) {
                            let (field, _) = self.expect_ident("identifier after `.`")?;
                            (format!("{var}.{field}"), vp)
                        } else {
                            (var, vp)
                        };
                        self.expect(Tok::Assign, "`:=`")?;
                        let e = self.parse_expr()?;
                        edge.updates.push((var, vp, e));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    },
                    other => {
                        return Err(ParseError::new(
                            p,
                            format!("expected `guard`, `sync` or `update`, found `{other}`"),
                        ))
                    }
                }
                self.eat(&Tok::Semi);
            }
        }
        Ok(edge)
    }
}

// ---------------------------------------------------------------------------
// Binding: resolve names against builder-side scopes.

#[derive(Clone, Copy)]
enum Resolved {
    Var(VarId),
    Clock(ClockId),
    Loc(TemplateId, LocId),
}

struct Scopes {
    globals: HashMap<String, VarId>,
    clocks: HashMap<String, ClockId>,
    channels: HashMap<String, ChannelId>,
    /// Per template: short local name -> id, location name -> id.
    locals: Vec<HashMap<String, VarId>>,
    locations: Vec<HashMap<String, LocId>>,
    template_ids: HashMap<String, TemplateId>,
}

impl Scopes {
    /// Resolve a bare identifier inside template `tid` (guard/update context).
    fn resolve_bare(&self, tid: TemplateId, name: &str, pos: Pos) -> Result<Resolved, ParseError> {
        if let Some(v) = self.locals[tid.0].get(name) {
            return Ok(Resolved::Var(*v));
        }
        if let Some(v) = self.globals.get(name) {
            return Ok(Resolved::Var(*v));
        }
        if let Some(c) = self.clocks.get(name) {
            return Ok(Resolved::Clock(*c));
        }
        Err(ParseError::new(pos, format!("unknown variable or clock `{name}`")))
    }

    fn resolve_dotted(&self, tpl: &str, field: &str, pos: Pos) -> Result<Resolved, ParseError> {
        let tid = self
            .template_ids
            .get(tpl)
            .copied()
            .ok_or_else(|| ParseError::new(pos, format!("unknown template `{tpl}`")))?;
        if let Some(l) = self.locations[tid.0].get(field) {
            return Ok(Resolved::Loc(tid, *l));
        }
        if let Some(v) = self.locals[tid.0].get(field) {
            return Ok(Resolved::Var(*v));
        }
        Err(ParseError::new(
            pos,
            format!("template `{tpl}` has no location or local variable `{field}`"),
        ))
    }
}

/// Intermediate value during binding: either a data expression, a clock, or
/// a clock difference awaiting comparison against a constant.
enum Bound1 {
    Data(Expr),
    Clock(ClockId),
    ClockDiff(ClockId, ClockId),
}

struct Binder<'a> {
    scopes: &'a Scopes,
    /// Template context for bare names; `None` in query context.
    template: Option<TemplateId>,
    /// Whether location atoms are allowed (queries only).
    allow_locations: bool,
}

impl Binder<'_> {
    fn bind(&self, e: &PExpr) -> Result<Expr, ParseError> {
        match self.bind1(e)? {
            Bound1::Data(x) => Ok(x),
            Bound1::Clock(_) | Bound1::ClockDiff(..) => Err(ParseError::new(
                e.pos(),
                "clock may only be compared against an integer constant",
            )),
        }
    }

    fn bind1(&self, e: &PExpr) -> Result<Bound1, ParseError> {
        Ok(match e {
            PExpr::Int(v, _) => Bound1::Data(Expr::Const(*v)),
            PExpr::Bool(b, _) => Bound1::Data(Expr::Const(*b as i64)),
            PExpr::Ident(name, pos) => {
                let resolved = match self.template {
                    Some(tid) => self.scopes.resolve_bare(tid, name, *pos)?,
                    None => {
                        if let Some(v) = self.scopes.globals.get(name) {
                            Resolved::Var(*v)
                        } else if self.scopes.clocks.contains_key(name) {
                            return Err(ParseError::new(*pos, "clock predicates unsupported in queries"));
                        } else {
                            return Err(ParseError::new(*pos, format!("unknown variable `{name}`")));
                        }
                    }
                };
                match resolved {
                    Resolved::Var(v) => Bound1::Data(Expr::Var(v)),
                    Resolved::Clock(c) => Bound1::Clock(c),
                    Resolved::Loc(..) => unreachable!("bare names never resolve to locations"),
                }
            }
            PExpr::Dotted(tpl, field, pos) => match self.scopes.resolve_dotted(tpl, field, *pos)? {
                Resolved::Loc(t, l) => {
                    if self.allow_locations {
                        Bound1::Data(Expr::Loc(t, l))
                    } else {
                        return Err(ParseError::new(
                            *pos,
                            "location atoms are only allowed in query predicates",
                        ));
                    }
                }
                Resolved::Var(v) => Bound1::Data(Expr::Var(v)),
                Resolved::Clock(_) => unreachable!(),
            },
            PExpr::Neg(inner, pos) => match self.bind1(inner)? {
                Bound1::Data(Expr::Const(v)) => Bound1::Data(Expr::Const(-v)),
                Bound1::Data(x) => Bound1::Data(Expr::sub(Expr::Const(0), x)),
                _ => return Err(ParseError::new(*pos, "cannot negate a clock")),
            },
            PExpr::Not(inner, _) => Bound1::Data(Expr::not(self.bind(inner)?)),
            PExpr::Bin(op, a, b, pos) => {
                let a = self.bind1(a)?;
                let b = self.bind1(b)?;
                match (op, a, b) {
                    (BinOp::Sub, Bound1::Clock(x), Bound1::Clock(y)) => Bound1::ClockDiff(x, y),
                    (_, Bound1::Data(a), Bound1::Data(b)) => {
                        Bound1::Data(Expr::Bin(*op, Box::new(a), Box::new(b)))
                    }
                    _ => {
                        return Err(ParseError::new(
                            *pos,
                            "clocks admit only subtraction of another clock",
                        ))
                    }
                }
            }
            PExpr::Cmp(op, a, b, pos) => {
                let a = self.bind1(a)?;
                let b = self.bind1(b)?;
                match (a, b) {
                    (Bound1::Data(a), Bound1::Data(b)) => {
                        Bound1::Data(Expr::cmp(*op, a, b))
                    }
                    (Bound1::Clock(c), Bound1::Data(k)) => {
                        Bound1::Data(Expr::ClockCmp(c, *op, self.const_value(&k, *pos)?))
                    }
                    (Bound1::Data(k), Bound1::Clock(c)) => {
                        Bound1::Data(Expr::ClockCmp(c, flip(*op), self.const_value(&k, *pos)?))
                    }
                    (Bound1::ClockDiff(x, y), Bound1::Data(k)) => {
                        Bound1::Data(Expr::ClockDiff(x, y, *op, self.const_value(&k, *pos)?))
                    }
                    (Bound1::Data(k), Bound1::ClockDiff(x, y)) => {
                        Bound1::Data(Expr::ClockDiff(x, y, flip(*op), self.const_value(&k, *pos)?))
                    }
                    _ => {
                        return Err(ParseError::new(
                            *pos,
                            "clock comparisons must have a constant on one side",
                        ))
                    }
                }
            }
            PExpr::And(a, b, _) => Bound1::Data(Expr::and(self.bind(a)?, self.bind(b)?)),
            PExpr::Or(a, b, _) => Bound1::Data(Expr::or(self.bind(a)?, self.bind(b)?)),
            PExpr::Imply(a, b, _) => Bound1::Data(Expr::imply(self.bind(a)?, self.bind(b)?)),
        })
    }

    /// The non-clock side of a clock comparison must fold to a constant.
    fn const_value(&self, e: &Expr, pos: Pos) -> Result<i64, ParseError> {
        fn variable_free(e: &Expr) -> bool {
            match e {
                Expr::Const(_) => true,
                Expr::Var(_) | Expr::Loc(..) | Expr::ClockCmp(..) | Expr::ClockDiff(..) => false,
                Expr::Not(a) => variable_free(a),
                Expr::Bin(_, a, b)
                | Expr::Cmp(_, a, b)
                | Expr::And(a, b)
                | Expr::Or(a, b)
                | Expr::Imply(a, b) => variable_free(a) && variable_free(b),
            }
        }
        let err = || ParseError::new(pos, "clock comparisons must have a constant on one side");
        if !variable_free(e) {
            return Err(err());
        }
        e.eval_data(&[]).map_err(|_| err())
    }
}

fn flip(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Gt,
        CmpOp::Le => CmpOp::Ge,
        CmpOp::Gt => CmpOp::Lt,
        CmpOp::Ge => CmpOp::Le,
        CmpOp::Eq => CmpOp::Eq,
        CmpOp::Ne => CmpOp::Ne,
    }
}

// ---------------------------------------------------------------------------
// Public entry points.

/// Parse a network file. Name and syntax errors are reported with positions;
/// structural errors surface as build errors from network validation.
pub fn parse_network(text: &str) -> Result<Network, NetworkParseError> {
    parse_network_inner(text)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkParseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Build(#[from] super::network::BuildError),
}

fn parse_network_inner(text: &str) -> Result<Network, NetworkParseError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, at: 0 };
    let pnet = parser.parse_network_file()?;

    let mut b = Network::builder(&pnet.name);
    let mut scopes = Scopes {
        globals: HashMap::new(),
        clocks: HashMap::new(),
        channels: HashMap::new(),
        locals: Vec::new(),
        locations: Vec::new(),
        template_ids: HashMap::new(),
    };

    for ch in &pnet.channels {
        let id = b.channel(ch);
        scopes.channels.insert(ch.clone(), id);
    }
    for ck in &pnet.clocks {
        let id = b.clock(ck);
        scopes.clocks.insert(ck.clone(), id);
    }
    for v in &pnet.globals {
        let id = match v.kind {
            VarKind::Bool => b.global_bool(&v.name, v.init != 0),
            VarKind::Int { lo, hi } => b.global_int(&v.name, lo, hi, v.init),
        };
        scopes.globals.insert(v.name.clone(), id);
    }

    // Declare all templates with their scopes first so guards can reference
    // other templates' locals (e.g. a shared miss counter).
    let mut tids = Vec::new();
    for tpl in &pnet.templates {
        let tid = b.template(&tpl.name);
        scopes.template_ids.insert(tpl.name.clone(), tid);
        let mut locals = HashMap::new();
        for v in &tpl.locals {
            let id = match v.kind {
                VarKind::Bool => b.local_bool(tid, &v.name, v.init != 0),
                VarKind::Int { lo, hi } => b.local_int(tid, &v.name, lo, hi, v.init),
            };
            locals.insert(v.name.clone(), id);
        }
        for ck in &tpl.clocks {
            let id = b.clock(ck);
            scopes.clocks.insert(ck.clone(), id);
        }
        let mut locmap = HashMap::new();
        for l in &tpl.locations {
            let id = if l.committed {
                b.committed_location(tid, &l.name)
            } else {
                b.location(tid, &l.name)
            };
            locmap.insert(l.name.clone(), id);
        }
        scopes.locals.push(locals);
        scopes.locations.push(locmap);
        tids.push(tid);
    }

    for (tpl, &tid) in pnet.templates.iter().zip(&tids) {
        let binder = Binder {
            scopes: &scopes,
            template: Some(tid),
            allow_locations: false,
        };
        if let Some((init_name, pos)) = &tpl.init {
            let l = scopes.locations[tid.0].get(init_name).ok_or_else(|| {
                ParseError::new(*pos, format!("unknown location `{init_name}`"))
            })?;
            b.set_init(tid, *l);
        }
        for l in &tpl.locations {
            if let Some(inv) = &l.invariant {
                let e = binder.bind(inv)?;
                let lid = scopes.locations[tid.0][&l.name];
                b.invariant(tid, lid, e);
            }
            let _ = l.pos;
        }
        for e in &tpl.edges {
            let from = scopes.locations[tid.0].get(&e.from.0).ok_or_else(|| {
                ParseError::new(e.from.1, format!("unknown location `{}`", e.from.0))
            })?;
            let to = scopes.locations[tid.0].get(&e.to.0).ok_or_else(|| {
                ParseError::new(e.to.1, format!("unknown location `{}`", e.to.0))
            })?;
            let mut def = EdgeDef::new(*from, *to);
            if let Some(g) = &e.guard {
                def = def.guard(binder.bind(g)?);
            }
            if let Some((ch, dir, pos)) = &e.sync {
                let id = scopes
                    .channels
                    .get(ch)
                    .ok_or_else(|| ParseError::new(*pos, format!("unknown channel `{ch}`")))?;
                def = def.sync(*id, *dir);
            }
            for (target, pos, rhs) in &e.updates {
                // Clock reset or variable assignment, by resolved kind.
                let resolved = if let Some((tpl_name, field)) = target.split_once('.') {
                    scopes.resolve_dotted(tpl_name, field, *pos)?
                } else {
                    scopes.resolve_bare(tid, target, *pos)?
                };
                match resolved {
                    Resolved::Clock(c) => {
                        let v = binder.bind(rhs)?;
                        if v != Expr::Const(0) {
                            return Err(ParseError::new(*pos, "clocks may only be reset to 0").into());
                        }
                        def = def.update(Update::Reset(c));
                    }
                    Resolved::Var(v) => {
                        def = def.update(Update::Assign(v, binder.bind(rhs)?));
                    }
                    Resolved::Loc(..) => {
                        return Err(ParseError::new(*pos, "cannot assign to a location").into())
                    }
                }
            }
            b.edge(tid, def);
        }
    }

    Ok(b.build()?)
}

/// Parse a query string: `A[] <pred>` (invariance) or `E<> <pred>`
/// (reachability). The predicate must be clock-free; location atoms are
/// written `Template.Location`.
pub fn parse_query_parts(text: &str, net: &Network) -> Result<(bool, Expr), ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, at: 0 };

    let (head, hp) = parser.expect_ident("`A[]` or `E<>`")?;
    let invariance = match head.as_str() {
        "A" => {
            parser.expect(Tok::LBracket, "`[]`")?;
            parser.expect(Tok::RBracket, "`[]`")?;
            true
        }
        "E" => {
            parser.expect(Tok::Lt, "`<>`")?;
            parser.expect(Tok::Gt, "`<>`")?;
            false
        }
        other => {
            return Err(ParseError::new(
                hp,
                format!("expected `A[]` or `E<>`, found `{other}`"),
            ))
        }
    };

    let pexpr = parser.parse_expr()?;
    if !parser.at_end() {
        return Err(ParseError::new(parser.pos(), "trailing input after query predicate"));
    }

    let scopes = scopes_from_network(net);
    let binder = Binder {
        scopes: &scopes,
        template: None,
        allow_locations: true,
    };
    let pred = binder.bind(&pexpr)?;
    Ok((invariance, pred))
}

fn scopes_from_network(net: &Network) -> Scopes {
    let mut scopes = Scopes {
        globals: HashMap::new(),
        clocks: HashMap::new(),
        channels: HashMap::new(),
        locals: Vec::new(),
        locations: Vec::new(),
        template_ids: HashMap::new(),
    };
    for (i, v) in net.vars().iter().enumerate() {
        match v.owner {
            None => {
                scopes.globals.insert(v.name.clone(), VarId(i));
            }
            Some(_) => {} // filled below from the prefixed name
        }
    }
    for i in 0..net.num_clocks() {
        scopes
            .clocks
            .insert(net.clock_name(ClockId(i + 1)).to_string(), ClockId(i + 1));
    }
    for (i, ch) in net.channel_names().iter().enumerate() {
        scopes.channels.insert(ch.clone(), ChannelId(i));
    }
    for (ti, tpl) in net.templates().iter().enumerate() {
        let tid = TemplateId(ti);
        scopes.template_ids.insert(tpl.name.clone(), tid);
        let mut locmap = HashMap::new();
        for (li, l) in tpl.locations.iter().enumerate() {
            locmap.insert(l.name.clone(), LocId(li));
        }
        let mut locals = HashMap::new();
        for (vi, v) in net.vars().iter().enumerate() {
            if v.owner == Some(tid) {
                if let Some((_, short)) = v.name.split_once('.') {
                    locals.insert(short.to_string(), VarId(vi));
                }
            }
        }
        scopes.locals.push(locals);
        scopes.locations.push(locmap);
    }
    scopes
}

// ---------------------------------------------------------------------------
// Serialisation.

pub fn serialize_network(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "network {} {{", net.name);
    for ch in net.channel_names() {
        let _ = writeln!(out, "  channel {ch}");
    }
    for i in 0..net.num_clocks() {
        let _ = writeln!(out, "  clock {}", net.clock_name(ClockId(i + 1)));
    }
    for v in net.vars() {
        if v.owner.is_none() {
            let _ = writeln!(out, "  global {}", var_decl_text(&v.name, &v.kind, v.init));
        }
    }
    for (ti, tpl) in net.templates().iter().enumerate() {
        let tid = TemplateId(ti);
        let _ = writeln!(out, "  template {} {{", tpl.name);
        for v in net.vars() {
            if v.owner == Some(tid) {
                let short = v.name.split_once('.').map(|(_, s)| s).unwrap_or(&v.name);
                let _ = writeln!(out, "    local {}", var_decl_text(short, &v.kind, v.init));
            }
        }
        for l in &tpl.locations {
            let mut clauses = Vec::new();
            if l.committed {
                clauses.push("committed".to_string());
            }
            if let Some(inv) = &l.invariant_expr {
                clauses.push(format!("invariant {}", net.expr_to_string(inv)));
            }
            if clauses.is_empty() {
                let _ = writeln!(out, "    location {}", l.name);
            } else {
                let _ = writeln!(out, "    location {} {{ {} }}", l.name, clauses.join("; "));
            }
        }
        let _ = writeln!(out, "    init {}", tpl.location(tpl.init).name);
        for e in &tpl.edges {
            let mut clauses = Vec::new();
            if e.guard != Expr::tt() {
                clauses.push(format!("guard {}", net.expr_to_string(&e.guard)));
            }
            if let Some((ch, dir)) = e.sync {
                let mark = match dir {
                    SyncDir::Send => "!",
                    SyncDir::Recv => "?",
                };
                clauses.push(format!("sync {}{}", net.channel_name(ch), mark));
            }
            if !e.updates.is_empty() {
                let ups: Vec<String> = e
                    .updates
                    .iter()
                    .map(|u| match u {
                        Update::Assign(v, rhs) => {
                            format!("{} := {}", net.var(*v).name, net.expr_to_string(rhs))
                        }
                        Update::Reset(c) => format!("{} := 0", net.clock_name(*c)),
                    })
                    .collect();
                clauses.push(format!("update {}", ups.join(", ")));
            }
            let src = tpl.location(e.source).name.as_str();
            let dst = tpl.location(e.target).name.as_str();
            if clauses.is_empty() {
                let _ = writeln!(out, "    edge {src} -> {dst}");
            } else {
                let _ = writeln!(out, "    edge {src} -> {dst} {{ {} }}", clauses.join("; "));
            }
        }
        let _ = writeln!(out, "  }}");
    }
    let _ = writeln!(out, "}}");
    out
}

fn var_decl_text(name: &str, kind: &VarKind, init: i64) -> String {
    match kind {
        VarKind::Bool => format!("bool {} = {}", name, if init != 0 { "true" } else { "false" }),
        VarKind::Int { lo, hi } => format!("int {name} [{lo}, {hi}] = {init}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures;

    const LAMP_TEXT: &str = r#"
# Two-template lamp with a double-press timing split.
network lamp {
  channel press
  clock y
  template Lamp {
    location off
    location low
    location bright
    init off
    edge off -> low { sync press?; update y := 0 }
    edge low -> bright { guard y < 5; sync press? }
    edge low -> off { guard y >= 5; sync press? }
    edge bright -> off { sync press? }
  }
  template User {
    location idle
    init idle
    edge idle -> idle { sync press! }
  }
}
"#;

    #[test]
    fn parse_matches_builder_built_network() {
        let parsed = parse_network(LAMP_TEXT).unwrap();
        assert_eq!(parsed, fixtures::lamp());
    }

    #[test]
    fn serialize_then_parse_is_identity_and_serialize_is_a_fixpoint() {
        let net = fixtures::lamp();
        let text = serialize_network(&net);
        let reparsed = parse_network(&text).unwrap();
        assert_eq!(reparsed, net);
        assert_eq!(serialize_network(&reparsed), text);
    }

    #[test]
    fn full_feature_round_trip() {
        let text = r#"
network full {
  channel tick
  clock c
  global int temp [-500, 500] = 20
  global bool alarm = false
  template Driver {
    clock p
    local int k [0, 3] = 0
    location Run { invariant p <= 10 }
    location Mid { committed }
    location Done
    init Run
    edge Run -> Mid { guard k < 3 && temp >= -100; sync tick!; update k := k + 1, temp := temp * 2 - 1 }
    edge Mid -> Run { update p := 0 }
    edge Run -> Done { guard k == 3 }
  }
  template Follower {
    location Wait
    init Wait
    edge Wait -> Wait { guard Driver.k <= 3; sync tick?; update alarm := !alarm }
  }
}
"#;
        let net = parse_network(text).unwrap();
        let out = serialize_network(&net);
        let reparsed = parse_network(&out).unwrap();
        assert_eq!(reparsed, net);
        assert_eq!(serialize_network(&reparsed), out);

        // Spot-check the pieces landed where they should.
        let drv = net.find_template("Driver").unwrap();
        assert!(net.template(drv).locations[1].committed);
        assert_eq!(net.template(drv).locations[0].invariant.len(), 1);
        assert_eq!(net.var(net.find_var("Driver.k").unwrap()).range(), (0, 3));
        assert_eq!(net.initial_valuation(), vec![20, 0, 0]);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_network("network x {\n  chan nel\n}").unwrap_err();
        match err {
            NetworkParseError::Parse(p) => {
                assert_eq!((p.line, p.col), (2, 3));
                assert!(p.msg.contains("chan"), "{}", p.msg);
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let err = parse_network(
            "network x {\n  template T {\n    location a\n    edge a -> b\n  }\n}",
        )
        .unwrap_err();
        match err {
            NetworkParseError::Parse(p) => {
                assert_eq!(p.line, 4);
                assert!(p.msg.contains("unknown location `b`"), "{}", p.msg);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_names_in_guards_are_position_tagged() {
        let err = parse_network(
            "network x {\n  template T {\n    location a\n    edge a -> a { guard missing > 0 }\n  }\n}",
        )
        .unwrap_err();
        match err {
            NetworkParseError::Parse(p) => {
                assert_eq!(p.line, 4);
                assert!(p.msg.contains("unknown variable or clock `missing`"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn structural_problems_surface_as_build_errors() {
        let err = parse_network(
            "network x {\n  clock c\n  template T {\n    location a { invariant c >= 1 }\n  }\n}",
        )
        .unwrap_err();
        assert!(matches!(
            err,
            NetworkParseError::Build(super::super::network::BuildError::InvariantNotUpperBound { .. })
        ));
    }

    #[test]
    fn clocks_must_compare_against_constants() {
        let err = parse_network(
            "network x {\n  clock c\n  global int v [0, 9] = 0\n  template T {\n    location a\n    edge a -> a { guard c >= v }\n  }\n}",
        )
        .unwrap_err();
        match err {
            NetworkParseError::Parse(p) => {
                assert!(p.msg.contains("constant"), "{}", p.msg);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn clock_difference_guards_parse() {
        let net = parse_network(
            "network x {\n  clock a\n  clock b\n  template T {\n    location l\n    edge l -> l { guard a - b <= 4 }\n  }\n}",
        )
        .unwrap();
        let t = net.find_template("T").unwrap();
        assert_eq!(
            net.template(t).edges[0].guard_clocks,
            vec![crate::automata::zone::ClockConstraint {
                i: 1,
                j: 2,
                bound: crate::automata::zone::Bound::le(4),
            }]
        );
    }

    #[test]
    fn queries_parse_locations_and_variables() {
        let net = fixtures::lamp();
        let (inv, pred) = parse_query_parts("A[] Lamp.bright imply Lamp.off", &net).unwrap();
        assert!(inv);
        assert!(pred.mentions_location());

        let (inv, _) = parse_query_parts("E<> Lamp.bright", &net).unwrap();
        assert!(!inv);

        let err = parse_query_parts("A[] y <= 5", &net).unwrap_err();
        assert_eq!(err.msg, "clock predicates unsupported in queries");

        let err = parse_query_parts("A[] Lamp.nowhere", &net).unwrap_err();
        assert!(err.msg.contains("no location or local variable"));

        let err = parse_query_parts("G[] Lamp.off", &net).unwrap_err();
        assert!(err.msg.contains("expected `A[]` or `E<>`"));
    }

    #[test]
    fn keyword_operators_and_symbols_agree() {
        let net = fixtures::lamp();
        let a = parse_query_parts("A[] not Lamp.off or Lamp.low", &net).unwrap().1;
        let b = parse_query_parts("A[] !Lamp.off || Lamp.low", &net).unwrap().1;
        assert_eq!(a, b);
    }
}
