//! Queries over networks: invariance (`A[] p`) and reachability (`E<> p`)
//! of clock-free state predicates.

use crate::automata::{parse_query_parts, Expr, Network, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryKind {
    /// `A[] p`: the predicate holds in every reachable state.
    Invariance,
    /// `E<> p`: some reachable state satisfies the predicate.
    Reachability,
}

impl QueryKind {
    pub fn prefix(self) -> &'static str {
        match self {
            QueryKind::Invariance => "A[]",
            QueryKind::Reachability => "E<>",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub kind: QueryKind,
    pub predicate: Expr,
    /// Human-readable form, kept verbatim from the parser or rendered at
    /// construction time.
    pub text: String,
}

impl Query {
    pub fn new(kind: QueryKind, predicate: Expr, net: &Network) -> Query {
        let text = format!("{} {}", kind.prefix(), net.expr_to_string(&predicate));
        Query {
            kind,
            predicate,
            text,
        }
    }

    pub fn invariance(predicate: Expr, net: &Network) -> Query {
        Query::new(QueryKind::Invariance, predicate, net)
    }

    pub fn reachability(predicate: Expr, net: &Network) -> Query {
        Query::new(QueryKind::Reachability, predicate, net)
    }

    /// The dual query: `A[] p` maps to `E<> !p` and vice versa. The two are
    /// satisfied in exactly complementary situations.
    pub fn dual(&self, net: &Network) -> Query {
        let kind = match self.kind {
            QueryKind::Invariance => QueryKind::Reachability,
            QueryKind::Reachability => QueryKind::Invariance,
        };
        let predicate = match &self.predicate {
            Expr::Not(inner) => (**inner).clone(),
            other => Expr::not(other.clone()),
        };
        Query::new(kind, predicate, net)
    }
}

/// Parse a query string against a network. Predicates may reference global
/// variables by name, locals as `Template.var` and locations as
/// `Template.Location`; clocks are rejected.
pub fn parse_query(text: &str, net: &Network) -> Result<Query, ParseError> {
    let (invariance, predicate) = parse_query_parts(text, net)?;
    Ok(Query {
        kind: if invariance {
            QueryKind::Invariance
        } else {
            QueryKind::Reachability
        },
        predicate,
        text: text.trim().to_string(),
    })
}
