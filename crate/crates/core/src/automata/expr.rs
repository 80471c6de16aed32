//! Boolean/arithmetic expression trees used in guards, invariants, updates
//! and query predicates.
//!
//! Expressions are fully resolved: variables, clocks and locations are
//! referenced by id, never by name. Name resolution happens in the network
//! builder and the text parsers. Booleans are integers with 0 = false.

use thiserror::Error;

use super::network::{ClockId, LocId, TemplateId, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i64),
    Var(VarId),
    /// True when the template is in the given location. Only meaningful in
    /// query predicates.
    Loc(TemplateId, LocId),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Imply(Box<Expr>, Box<Expr>),
    /// `clock {op} const`; restricted to guards and invariants.
    ClockCmp(ClockId, CmpOp, i64),
    /// `clock - clock {op} const`; restricted to guards.
    ClockDiff(ClockId, ClockId, CmpOp, i64),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("clock predicates unsupported in queries")]
    ClockInPredicate,
    #[error("location atoms unsupported in this context")]
    LocInDataExpr,
    #[error("arithmetic overflow while evaluating expression")]
    Overflow,
}

impl Expr {
    pub fn c(v: i64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(v: VarId) -> Expr {
        Expr::Var(v)
    }

    pub fn tt() -> Expr {
        Expr::Const(1)
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Bin(BinOp::Add, Box::new(a), Box::new(b))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    pub fn imply(a: Expr, b: Expr) -> Expr {
        Expr::Imply(Box::new(a), Box::new(b))
    }

    /// Conjunction of all expressions; `true` when empty.
    pub fn and_all(mut es: Vec<Expr>) -> Expr {
        match es.len() {
            0 => Expr::tt(),
            1 => es.pop().unwrap(),
            _ => {
                let mut it = es.into_iter();
                let first = it.next().unwrap();
                it.fold(first, Expr::and)
            }
        }
    }

    pub fn or_all(mut es: Vec<Expr>) -> Expr {
        match es.len() {
            0 => Expr::Const(0),
            1 => es.pop().unwrap(),
            _ => {
                let mut it = es.into_iter();
                let first = it.next().unwrap();
                it.fold(first, Expr::or)
            }
        }
    }

    /// True if the expression contains a clock atom anywhere.
    pub fn mentions_clock(&self) -> bool {
        match self {
            Expr::ClockCmp(..) | Expr::ClockDiff(..) => true,
            Expr::Const(_) | Expr::Var(_) | Expr::Loc(..) => false,
            Expr::Not(e) => e.mentions_clock(),
            Expr::Bin(_, a, b) | Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) | Expr::Imply(a, b) => {
                a.mentions_clock() || b.mentions_clock()
            }
        }
    }

    pub fn mentions_location(&self) -> bool {
        match self {
            Expr::Loc(..) => true,
            Expr::Const(_) | Expr::Var(_) | Expr::ClockCmp(..) | Expr::ClockDiff(..) => false,
            Expr::Not(e) => e.mentions_location(),
            Expr::Bin(_, a, b) | Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) | Expr::Imply(a, b) => {
                a.mentions_location() || b.mentions_location()
            }
        }
    }

    /// Evaluate over a variable valuation. Clock and location atoms are
    /// errors here; callers that support them resolve them first.
    pub fn eval_data(&self, valuation: &[i64]) -> Result<i64, EvalError> {
        self.eval_with(valuation, &mut |_, _| Err(EvalError::LocInDataExpr), &mut |_| {
            Err(EvalError::ClockInPredicate)
        })
    }

    /// Evaluate with callbacks for location atoms and clock atoms.
    ///
    /// `loc` receives `(template, location)`; `clock_atom` receives the whole
    /// atom and returns its truth value.
    pub fn eval_with(
        &self,
        valuation: &[i64],
        loc: &mut dyn FnMut(TemplateId, LocId) -> Result<bool, EvalError>,
        clock_atom: &mut dyn FnMut(&Expr) -> Result<bool, EvalError>,
    ) -> Result<i64, EvalError> {
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Var(v) => valuation[v.0],
            Expr::Loc(t, l) => loc(*t, *l)? as i64,
            Expr::Bin(op, a, b) => {
                let a = a.eval_with(valuation, loc, clock_atom)?;
                let b = b.eval_with(valuation, loc, clock_atom)?;
                match op {
                    BinOp::Add => a.checked_add(b),
                    BinOp::Sub => a.checked_sub(b),
                    BinOp::Mul => a.checked_mul(b),
                }
                .ok_or(EvalError::Overflow)?
            }
            Expr::Cmp(op, a, b) => {
                let a = a.eval_with(valuation, loc, clock_atom)?;
                let b = b.eval_with(valuation, loc, clock_atom)?;
                op.eval(a, b) as i64
            }
            Expr::Not(e) => (e.eval_with(valuation, loc, clock_atom)? == 0) as i64,
            Expr::And(a, b) => {
                (a.eval_with(valuation, loc, clock_atom)? != 0
                    && b.eval_with(valuation, loc, clock_atom)? != 0) as i64
            }
            Expr::Or(a, b) => {
                (a.eval_with(valuation, loc, clock_atom)? != 0
                    || b.eval_with(valuation, loc, clock_atom)? != 0) as i64
            }
            Expr::Imply(a, b) => {
                (a.eval_with(valuation, loc, clock_atom)? == 0
                    || b.eval_with(valuation, loc, clock_atom)? != 0) as i64
            }
            Expr::ClockCmp(..) | Expr::ClockDiff(..) => clock_atom(self)? as i64,
        })
    }

    /// Split a guard into its data part and its clock constraints.
    ///
    /// Clock atoms must appear as conjuncts at the top level (the usual
    /// conjunctive-guard restriction); anything else is rejected by network
    /// validation before this is called.
    pub fn split_conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn walk<'e>(e: &'e Expr, out: &mut Vec<&'e Expr>) {
            if let Expr::And(a, b) = e {
                walk(a, out);
                walk(b, out);
            } else {
                out.push(e);
            }
        }
        walk(self, &mut out);
        out
    }
}
