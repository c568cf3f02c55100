//! Choreographic programming on top of a small algebraic-effects core.
//!
//! Choreographies are free-monad terms over a one-operation communication
//! signature. Endpoint projection is an effect handler that interprets a
//! choreography, with located values erased from the target's point of view,
//! into a process over `locally` / `send` / `recv`. The [`checker`] module
//! explores every interleaving of a projected network and compares it with
//! the choreography's own semantics.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod checker;
pub mod choreography;
pub mod effects;
pub mod epp;
pub mod gen;
pub mod local;
mod loc;
pub mod process;
pub mod value;

pub use checker::{check_soundness_completeness, explore, step_network, Limits, NetworkState, NetworkStep, Verdict};
pub use choreography::{absent_reads, choreo_eval, At, Choreo, ChoreoOp, Located, LocatedValue, Observations, Program, Statement};
pub use effects::{interp, perform, probe, probe_equivalent, pure, Signature, Term};
pub use epp::{epp, project_all};
pub use local::{eval_local, LocalTerm, PrimitiveRegistry};
pub use loc::{EmptyLocation, Loc};
pub use process::{locally, recv, send, Process, ProcessOp};
pub use value::{Arity, Value};
