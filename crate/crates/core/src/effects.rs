//! Free-monad terms over an effect signature.
//!
//! A [`Term`] is either a finished computation ([`Term::Leaf`]) or a fully
//! applied operation whose continuation maps the operation's response to the
//! rest of the program ([`Term::Node`]). Terms are data: nothing happens until
//! a handler folds them with [`interp`], or until [`probe`] feeds them a
//! script of responses.
//!
//! Continuations are functions, so terms have no structural equality. Two
//! terms are compared observationally with [`probe_equivalent`], which
//! enumerates every response script over the finite checking domains of
//! [`Arity`].

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::value::{Arity, Value};

/// An effect signature, presented as its operation payload type.
///
/// Every payload has exactly one response arity.
pub trait Signature: Clone + fmt::Debug + Send + Sync + 'static {
    fn arity(&self) -> Arity;
}

/// A shared continuation from a response to the rest of a term.
pub type Resume<X> = Arc<dyn Fn(Value) -> X + Send + Sync>;

pub enum Term<O> {
    Leaf(Value),
    Node(O, Resume<Term<O>>),
}

impl<O: Clone> Clone for Term<O> {
    fn clone(&self) -> Self {
        match self {
            Term::Leaf(v) => Term::Leaf(v.clone()),
            Term::Node(o, k) => Term::Node(o.clone(), Arc::clone(k)),
        }
    }
}

impl<O: fmt::Debug> fmt::Debug for Term<O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Leaf(v) => f.debug_tuple("Leaf").field(v).finish(),
            Term::Node(o, _) => f.debug_tuple("Node").field(o).field(&"<continuation>").finish(),
        }
    }
}

/// `return` of the free monad.
pub fn pure<O>(a: impl Into<Value>) -> Term<O> {
    Term::Leaf(a.into())
}

/// Performs an operation and immediately returns its response.
pub fn perform<O: Signature>(o: O) -> Term<O> {
    Term::Node(o, Arc::new(Term::Leaf))
}

impl<O: Signature> Term<O> {
    pub fn node(o: O, k: impl Fn(Value) -> Term<O> + Send + Sync + 'static) -> Self {
        Term::Node(o, Arc::new(k))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Term::Leaf(_))
    }

    /// The first operation this term performs, if any.
    pub fn head(&self) -> Option<&O> {
        match self {
            Term::Leaf(_) => None,
            Term::Node(o, _) => Some(o),
        }
    }

    /// Sequencing: substitutes `f(x)` for every leaf `x`.
    pub fn bind(self, f: impl Fn(Value) -> Term<O> + Send + Sync + 'static) -> Term<O> {
        self.bind_shared(Arc::new(f))
    }

    pub fn bind_shared(self, f: Resume<Term<O>>) -> Term<O> {
        match self {
            Term::Leaf(x) => f(x),
            Term::Node(o, k) => Term::Node(
                o,
                Arc::new(move |r| k(r).bind_shared(Arc::clone(&f))),
            ),
        }
    }

    /// Sequencing that discards the first result.
    pub fn then(self, next: Term<O>) -> Term<O> {
        self.bind(move |_| next.clone())
    }

    /// Feeds `response` to the head continuation.
    ///
    /// Returns `None` on a leaf. The response is not checked against the
    /// operation's arity; see [`Term::resume_checked`].
    pub fn resume(&self, response: Value) -> Option<Term<O>> {
        match self {
            Term::Leaf(_) => None,
            Term::Node(_, k) => Some(k(response)),
        }
    }

    pub fn resume_checked(&self, response: Value) -> Result<Option<Term<O>>, ProbeError<O>> {
        match self {
            Term::Leaf(_) => Ok(None),
            Term::Node(o, k) => {
                let expected = o.arity();
                if !expected.accepts(&response) {
                    return Err(ProbeError::ScriptTypeMismatch {
                        index: 0,
                        op: o.clone(),
                        expected,
                        got: response,
                    });
                }
                Ok(Some(k(response)))
            }
        }
    }
}

/// Folds a term with an algebra for its signature.
///
/// Leaves go through `var_map`; a node `(o, k)` becomes `algebra(o, k')`
/// where `k'` interprets the continuation lazily. Terminates on every term,
/// since every constructible term is a finite tree.
pub fn interp<O, X, A, V>(algebra: A, var_map: V, t: &Term<O>) -> X
where
    O: Signature,
    X: 'static,
    A: Fn(&O, Resume<X>) -> X + Send + Sync + 'static,
    V: Fn(Value) -> X + Send + Sync + 'static,
{
    let algebra: Arc<Algebra<O, X>> = Arc::new(algebra);
    let var_map: Resume<X> = Arc::new(var_map);
    interp_shared(&algebra, &var_map, t)
}

type Algebra<O, X> = dyn Fn(&O, Resume<X>) -> X + Send + Sync;

fn interp_shared<O, X>(algebra: &Arc<Algebra<O, X>>, var_map: &Resume<X>, t: &Term<O>) -> X
where
    O: Signature,
    X: 'static,
{
    match t {
        Term::Leaf(x) => var_map(x.clone()),
        Term::Node(o, k) => {
            let (alg, vm, k) = (Arc::clone(algebra), Arc::clone(var_map), Arc::clone(k));
            let resume: Resume<X> = Arc::new(move |r| interp_shared(&alg, &vm, &k(r)));
            algebra(o, resume)
        }
    }
}

/// Ordered responses fed to successive operations while probing.
pub type ResponseScript = [Value];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Result(Value),
    /// The script ran out before the term reached a leaf.
    Starved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Probe<O> {
    pub trace: Vec<O>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ProbeError<O: fmt::Debug> {
    #[error("script entry {index} ({got}) does not conform to arity {expected} of {op:?}")]
    ScriptTypeMismatch { index: usize, op: O, expected: Arity, got: Value },
}

/// Walks `t`, answering each operation with the next script entry.
pub fn probe<O: Signature>(t: &Term<O>, script: &ResponseScript) -> Result<Probe<O>, ProbeError<O>> {
    let mut trace = Vec::new();
    let mut cur = t.clone();
    let mut answers = script.iter().enumerate();
    loop {
        match cur {
            Term::Leaf(v) => return Ok(Probe { trace, outcome: Outcome::Result(v) }),
            Term::Node(o, k) => {
                trace.push(o.clone());
                let Some((index, r)) = answers.next() else {
                    return Ok(Probe { trace, outcome: Outcome::Starved });
                };
                let expected = o.arity();
                if !expected.accepts(r) {
                    return Err(ProbeError::ScriptTypeMismatch { index, op: o, expected, got: r.clone() });
                }
                cur = k(r.clone());
            }
        }
    }
}

/// Where two terms first disagree under some response script.
#[derive(Clone, Debug, PartialEq)]
pub struct Divergence<O> {
    /// Responses fed before the disagreement.
    pub script: Vec<Value>,
    pub left: Option<O>,
    pub right: Option<O>,
    pub left_result: Option<Value>,
    pub right_result: Option<Value>,
}

/// Observational equality: both terms emit the same operations and reach the
/// same result for every response script over the arity domains.
///
/// The enumeration is adaptive: scripts branch over the domain of whichever
/// operation is currently at the head, so every script that either term could
/// accept is covered. `max_ops` bounds the explored script length; terms still
/// running at that depth are compared by their head only.
pub fn probe_equivalent<O>(left: &Term<O>, right: &Term<O>, max_ops: usize) -> Result<(), Divergence<O>>
where
    O: Signature + PartialEq,
{
    let mut script = Vec::new();
    compare(left, right, max_ops, &mut script)
}

fn compare<O>(left: &Term<O>, right: &Term<O>, budget: usize, script: &mut Vec<Value>) -> Result<(), Divergence<O>>
where
    O: Signature + PartialEq,
{
    let diverge = |script: &Vec<Value>| Divergence {
        script: script.clone(),
        left: left.head().cloned(),
        right: right.head().cloned(),
        left_result: leaf_value(left),
        right_result: leaf_value(right),
    };
    match (left, right) {
        (Term::Leaf(a), Term::Leaf(b)) if a == b => Ok(()),
        (Term::Node(o1, k1), Term::Node(o2, k2)) if o1 == o2 => {
            if budget == 0 {
                return Ok(());
            }
            for r in o1.arity().domain() {
                script.push(r.clone());
                compare(&k1(r.clone()), &k2(r), budget - 1, script)?;
                script.pop();
            }
            Ok(())
        }
        _ => Err(diverge(script)),
    }
}

fn leaf_value<O>(t: &Term<O>) -> Option<Value> {
    match t {
        Term::Leaf(v) => Some(v.clone()),
        Term::Node(..) => None,
    }
}

/// Longest operation chain over every response script in the checking
/// domains.
pub fn depth<O: Signature>(t: &Term<O>) -> usize {
    match t {
        Term::Leaf(_) => 0,
        Term::Node(o, k) => 1 + o.arity().domain().into_iter().map(|r| depth(&k(r))).max().unwrap_or(0),
    }
}
