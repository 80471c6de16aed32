//! Timed-automata networks: expressions, clock zones, network construction,
//! symbolic semantics and the text serialisation format.

pub mod expr;
pub mod network;
pub mod semantics;
pub mod textfmt;
pub mod zone;

pub use expr::{BinOp, CmpOp, EvalError, Expr};
pub use network::{
    BuildError, ChannelId, ClockId, Edge, EdgeDef, LocId, Location, Network, NetworkBuilder,
    SyncDir, TemplateId, Update, UtaTemplate, VarDecl, VarId, VarKind,
};
pub use semantics::{
    eval_pred, initial_state, initial_state_with, successors, successors_with, SemanticsError,
    StepAction, StepOptions, SymState,
};
pub use textfmt::{parse_network, parse_query_parts, serialize_network, NetworkParseError, ParseError};
pub use zone::{Bound, ClockConstraint, Zone};

/// Small networks shared across the crate's tests.
#[cfg(test)]
pub(crate) mod fixtures {
    use super::expr::{CmpOp, Expr};
    use super::network::{EdgeDef, Network, SyncDir};

    /// The classic two-template lamp: pressing once turns the lamp on low;
    /// a second press within 5 time units goes to bright, later goes off.
    pub fn lamp() -> Network {
        let mut b = Network::builder("lamp");
        let press = b.channel("press");
        let y = b.clock("y");

        let lamp = b.template("Lamp");
        let off = b.location(lamp, "off");
        let low = b.location(lamp, "low");
        let bright = b.location(lamp, "bright");
        b.edge(
            lamp,
            EdgeDef::new(off, low).sync(press, SyncDir::Recv).reset(y),
        );
        b.edge(
            lamp,
            EdgeDef::new(low, bright)
                .guard(Expr::ClockCmp(y, CmpOp::Lt, 5))
                .sync(press, SyncDir::Recv),
        );
        b.edge(
            lamp,
            EdgeDef::new(low, off)
                .guard(Expr::ClockCmp(y, CmpOp::Ge, 5))
                .sync(press, SyncDir::Recv),
        );
        b.edge(lamp, EdgeDef::new(bright, off).sync(press, SyncDir::Recv));

        let user = b.template("User");
        let idle = b.location(user, "idle");
        b.edge(user, EdgeDef::new(idle, idle).sync(press, SyncDir::Send));

        b.build().expect("lamp network is well-formed")
    }
}
