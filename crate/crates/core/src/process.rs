//! Processes: terms over the `locally` / `send` / `recv` signature. These
//! are what endpoint projection produces.

use core::fmt;

use crate::effects::{perform, Signature, Term};
use crate::local::LocalTerm;
pub use crate::loc::Loc;
use crate::value::{Arity, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProcessOp {
    /// Runs a local computation; responds with its value.
    Locally { term: LocalTerm, ty: Arity },
    /// Enqueues an already evaluated value for `to`; responds with unit.
    Send { to: Loc, payload: Value },
    /// Dequeues the next value from `from`; responds with it.
    Recv { from: Loc, expected: Arity },
}

impl Signature for ProcessOp {
    fn arity(&self) -> Arity {
        match self {
            ProcessOp::Locally { ty, .. } => *ty,
            ProcessOp::Send { .. } => Arity::Unit,
            ProcessOp::Recv { expected, .. } => *expected,
        }
    }
}

/// One line of a process trace: `locally <expr>`, `send <loc> <value>` or
/// `recv <loc>`.
impl fmt::Display for ProcessOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessOp::Locally { term, .. } => write!(f, "locally {term}"),
            ProcessOp::Send { to, payload } => write!(f, "send {to} {payload}"),
            ProcessOp::Recv { from, .. } => write!(f, "recv {from}"),
        }
    }
}

pub type Process = Term<ProcessOp>;

/// A local computation whose result type is not statically known.
pub fn locally(t: LocalTerm) -> Process {
    locally_as(t, Arity::Value)
}

pub fn locally_as(t: LocalTerm, ty: Arity) -> Process {
    perform(ProcessOp::Locally { term: t, ty })
}

pub fn send(to: Loc, v: Value) -> Process {
    perform(ProcessOp::Send { to, payload: v })
}

pub fn recv(from: Loc, expected: Arity) -> Process {
    perform(ProcessOp::Recv { from, expected })
}
