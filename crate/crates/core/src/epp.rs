//! Endpoint projection as an effect handler.
//!
//! Projecting at `l` instantiates the choreography with located values
//! focused at `l` and folds the resulting term with an algebra that turns
//! each `comm s r a` into process operations:
//!
//! | `l == s` | `l == r` | process                               |
//! |----------|----------|---------------------------------------|
//! | yes      | yes      | `locally a >>= k`                     |
//! | yes      | no       | `locally a >>= send r`, then `k ()`   |
//! | no       | yes      | `recv s >>= k`                        |
//! | no       | no       | `k ()`                                |

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;

use crate::choreography::{At, Choreo, ChoreoOp, ChoreoTerm};
use crate::effects::{interp, Resume, Signature, Term};
use crate::loc::Loc;
use crate::process::{locally_as, recv, send, Process};
use crate::value::Value;

/// The projection handler for one target location.
#[derive(Clone, Debug)]
pub struct ProjectionAlgebra {
    target: Loc,
}

impl ProjectionAlgebra {
    pub fn new(target: Loc) -> Self {
        ProjectionAlgebra { target }
    }

    /// One step of projection: a `comm` and the already projected
    /// continuation.
    pub fn handle(&self, op: &ChoreoOp, k: Resume<Process>) -> Process {
        let ChoreoOp::Comm { sender, receiver, computation, ty, .. } = op;
        let l = &self.target;
        match (l == sender, l == receiver) {
            (true, true) => {
                let term = computation.get().expect("focused at the sender");
                locally_as(term.clone(), op.arity()).bind_shared(k)
            }
            (true, false) => {
                let term = computation.get().expect("focused at the sender");
                let to = receiver.clone();
                locally_as(term.clone(), *ty).bind(move |x| send(to.clone(), x).bind({
                    let k = Arc::clone(&k);
                    move |_| k(Value::Unit)
                }))
            }
            (false, true) => recv(sender.clone(), op.arity()).bind_shared(k),
            (false, false) => k(Value::Unit),
        }
    }
}

/// Projects an already instantiated choreography term. The term must have
/// been built with `At::focus(l)`.
pub fn project_term(t: &ChoreoTerm, l: &Loc) -> Process {
    let alg = ProjectionAlgebra::new(l.clone());
    interp(move |op: &ChoreoOp, k| alg.handle(op, k), Term::Leaf, t)
}

/// The process that `l` runs.
pub fn epp(c: &Choreo, l: &Loc) -> Process {
    project_term(&c.instantiate(&At::focus(l.clone())), l)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProjectError {
    #[error("location {0} occurs in the choreography but was not listed")]
    MissingLocation(Loc),
}

/// Projects at every listed location.
pub fn project_all(c: &Choreo, locs: &BTreeSet<Loc>) -> Result<BTreeMap<Loc, Process>, ProjectError> {
    if let Some(missing) = c.locations().into_iter().find(|l| !locs.contains(l)) {
        return Err(ProjectError::MissingLocation(missing));
    }
    Ok(locs.iter().map(|l| (l.clone(), epp(c, l))).collect())
}
