//! Choreographies: terms over the single `comm` operation, written against an
//! abstract representation of located values.
//!
//! A choreography is a function from an [`At`] interpretation to a term. The
//! interpretation decides how a value owned by some location is represented:
//! [`At::focus`] keeps it only at its owner and erases it to an absent
//! placeholder everywhere else, while [`At::global`] keeps every value. No
//! code path extracts a payload from an absent value; the only accessor,
//! [`Located::get`], counts such attempts in [`absent_reads`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::effects::{perform, Signature, Term};
use crate::local::{eval_observed, infer_result, Env, EvalError, LocalTerm, PrimitiveRegistry};
use crate::loc::Loc;
use crate::value::{Arity, Value};

static ABSENT_READS: AtomicUsize = AtomicUsize::new(0);

/// Number of times any code asked for the payload of an absent located value.
pub fn absent_reads() -> usize {
    ABSENT_READS.load(Ordering::SeqCst)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Content<T> {
    Present(T),
    Absent,
}

/// A value owned by a location, as seen through some [`At`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located<T> {
    owner: Loc,
    content: Content<T>,
}

pub type LocatedValue = Located<Value>;

impl<T> Located<T> {
    pub fn owner(&self) -> &Loc {
        &self.owner
    }

    pub fn is_present(&self) -> bool {
        matches!(self.content, Content::Present(_))
    }

    /// The payload, if this view holds one. Asking an absent value counts
    /// as an erasure violation.
    pub fn get(&self) -> Option<&T> {
        match &self.content {
            Content::Present(v) => Some(v),
            Content::Absent => {
                ABSENT_READS.fetch_add(1, Ordering::SeqCst);
                None
            }
        }
    }

    /// Monadic bind: identity behaviour when present, unit behaviour when
    /// absent. `f` must produce a value owned by the same location.
    pub fn bind<U>(self, f: impl FnOnce(T) -> Located<U>) -> Located<U> {
        match self.content {
            Content::Present(v) => {
                let out = f(v);
                debug_assert_eq!(out.owner, self.owner, "located bind changed owner");
                out
            }
            Content::Absent => Located { owner: self.owner, content: Content::Absent },
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Located<U> {
        let owner = self.owner.clone();
        self.bind(|v| Located { owner, content: Content::Present(f(v)) })
    }

    /// Monadic return at the same owner and with the same visibility.
    pub fn rewrap<U>(&self, v: U) -> Located<U> {
        match self.content {
            Content::Present(_) => Located { owner: self.owner.clone(), content: Content::Present(v) },
            Content::Absent => Located { owner: self.owner.clone(), content: Content::Absent },
        }
    }
}

impl<T: fmt::Display> fmt::Display for Located<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.content {
            Content::Present(v) => write!(f, "{v}@{}", self.owner),
            Content::Absent => write!(f, "_@{}", self.owner),
        }
    }
}

/// An interpretation of located values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum At {
    /// Values are visible only at their owner.
    Focus(Loc),
    /// Every value is visible; the choreography's own global view.
    Global,
}

impl At {
    pub fn focus(l: Loc) -> At {
        At::Focus(l)
    }

    pub fn global() -> At {
        At::Global
    }

    pub fn sees(&self, owner: &Loc) -> bool {
        match self {
            At::Focus(l) => l == owner,
            At::Global => true,
        }
    }

    /// Monadic return for values owned by `owner`.
    pub fn located<T>(&self, owner: &Loc, v: T) -> Located<T> {
        let content = if self.sees(owner) { Content::Present(v) } else { Content::Absent };
        Located { owner: owner.clone(), content }
    }

    /// `s ▷ t`: a local computation at `s`.
    pub fn local_at(&self, s: &Loc, t: Located<LocalTerm>) -> ChoreoTerm {
        self.comm(s, s, t)
    }

    /// `s ⇒ r ◇ t`: `s` computes `t` and sends the result to `r`.
    pub fn comm(&self, s: &Loc, r: &Loc, t: Located<LocalTerm>) -> ChoreoTerm {
        self.comm_as(s, r, t, Arity::Value)
    }

    /// # Panics
    ///
    /// Panics if `t` is not owned by `s`.
    pub fn comm_as(&self, s: &Loc, r: &Loc, t: Located<LocalTerm>, ty: Arity) -> ChoreoTerm {
        assert_eq!(&t.owner, s, "computation must be owned by its sender");
        perform(ChoreoOp::Comm {
            sender: s.clone(),
            receiver: r.clone(),
            computation: t,
            ty,
            result: self.located(r, ty),
        })
    }

    /// Reads a comm response back as a value located at its receiver.
    pub fn receive(&self, r: &Loc, response: Value) -> LocatedValue {
        self.located(r, response)
    }

    /// Sequences `term` (whose result is owned by `owner`) with `k`.
    pub fn and_then(
        &self,
        term: ChoreoTerm,
        owner: &Loc,
        k: impl Fn(LocatedValue) -> ChoreoTerm + Send + Sync + 'static,
    ) -> ChoreoTerm {
        let (at, owner) = (self.clone(), owner.clone());
        term.bind(move |resp| k(at.receive(&owner, resp)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChoreoOp {
    /// With `sender == receiver` this is a local computation. `ty` is the
    /// type of the computed value; the response arity is that type located at
    /// the receiver.
    Comm { sender: Loc, receiver: Loc, computation: Located<LocalTerm>, ty: Arity, result: Located<Arity> },
}

impl Signature for ChoreoOp {
    fn arity(&self) -> Arity {
        match self {
            ChoreoOp::Comm { result, .. } => match &result.content {
                Content::Present(a) => *a,
                Content::Absent => Arity::Unit,
            },
        }
    }
}

pub type ChoreoTerm = Term<ChoreoOp>;

/// A choreography, abstracted over the located-value interpretation.
#[derive(Clone)]
pub struct Choreo {
    build: Arc<dyn Fn(&At) -> ChoreoTerm + Send + Sync>,
}

impl fmt::Debug for Choreo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Choreo(..)")
    }
}

impl Choreo {
    pub fn new(build: impl Fn(&At) -> ChoreoTerm + Send + Sync + 'static) -> Self {
        Choreo { build: Arc::new(build) }
    }

    /// A choreography with no communication.
    pub fn pure(v: Value) -> Self {
        Choreo::new(move |_| Term::Leaf(v.clone()))
    }

    pub fn instantiate(&self, at: &At) -> ChoreoTerm {
        (self.build)(at)
    }

    /// Every location that sends or receives.
    ///
    /// Choreographies have no branching, so the scan follows the global view
    /// with default responses.
    pub fn locations(&self) -> BTreeSet<Loc> {
        let mut out = BTreeSet::new();
        let mut cur = self.instantiate(&At::Global);
        while let Term::Node(op, k) = cur {
            let ChoreoOp::Comm { sender, receiver, .. } = &op;
            out.insert(sender.clone());
            out.insert(receiver.clone());
            cur = k(op.arity().default_value());
        }
        out
    }
}

/// Per-location list of observed values (arguments of `show`). Locations
/// that observed nothing have no entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observations(BTreeMap<Loc, Vec<Value>>);

impl Observations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, l: &Loc, vs: impl IntoIterator<Item = Value>) {
        let mut vs = vs.into_iter().peekable();
        if vs.peek().is_some() {
            self.0.entry(l.clone()).or_default().extend(vs);
        }
    }

    pub fn get(&self, l: &Loc) -> &[Value] {
        self.0.get(l).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Loc, &Vec<Value>)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<const N: usize> From<[(Loc, Vec<Value>); N]> for Observations {
    fn from(entries: [(Loc, Vec<Value>); N]) -> Self {
        let mut o = Observations::new();
        for (l, vs) in entries {
            o.record(&l, vs);
        }
        o
    }
}

/// One `name: [v, ...]` line per location that observed something.
impl fmt::Display for Observations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, vs) in self.iter() {
            write!(f, "{l}: [")?;
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]\n")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ChoreoEvalError {
    #[error("local computation at {at} failed: {source}")]
    Local { at: Loc, source: EvalError },
    #[error("computation at {at} produced {got}, expected {expected}")]
    ResultType { at: Loc, expected: Arity, got: Value },
}

/// What the choreography itself computes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoreoOutcome {
    pub observations: Observations,
    pub result: Value,
    /// Every `comm`, including local ones.
    pub steps: usize,
    /// Communications between distinct locations.
    pub messages: usize,
}

/// Deterministic head reduction: evaluates each `comm` at its sender and hands
/// the value to the receiver before continuing.
pub fn choreo_eval(c: &Choreo, reg: &PrimitiveRegistry) -> Result<ChoreoOutcome, ChoreoEvalError> {
    let mut observations = Observations::new();
    let (mut steps, mut messages) = (0, 0);
    let mut cur = c.instantiate(&At::Global);
    loop {
        match cur {
            Term::Leaf(result) => return Ok(ChoreoOutcome { observations, result, steps, messages }),
            Term::Node(op, k) => {
                let ChoreoOp::Comm { sender, receiver, computation, .. } = &op;
                let term = computation.get().expect("the global view sees every value");
                let (v, log) = eval_observed(term, &Env::at(sender.clone()), reg)
                    .map_err(|source| ChoreoEvalError::Local { at: sender.clone(), source })?;
                observations.record(sender, log);
                let expected = op.arity();
                if !expected.accepts(&v) {
                    return Err(ChoreoEvalError::ResultType { at: sender.clone(), expected, got: v });
                }
                steps += 1;
                if sender != receiver {
                    messages += 1;
                }
                cur = k(v);
            }
        }
    }
}

/// One line of a choreography program: `x <- s => r ◇ expr`, or
/// `x <- s ▷ expr` when sender and receiver coincide.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub bind: Option<String>,
    pub sender: Loc,
    pub receiver: Loc,
    pub expr: LocalTerm,
    /// Declared message type; inferred when absent.
    pub ty: Option<Arity>,
}

impl Statement {
    pub fn local(bind: Option<&str>, at: &Loc, expr: LocalTerm) -> Self {
        Statement { bind: bind.map(String::from), sender: at.clone(), receiver: at.clone(), expr, ty: None }
    }

    pub fn comm(bind: Option<&str>, s: &Loc, r: &Loc, expr: LocalTerm) -> Self {
        Statement { bind: bind.map(String::from), sender: s.clone(), receiver: r.clone(), expr, ty: None }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(x) = &self.bind {
            write!(f, "{x} <- ")?;
        }
        if self.sender == self.receiver {
            write!(f, "{} |> {}", self.sender, self.expr)
        } else {
            write!(f, "{} => {} <> {}", self.sender, self.receiver, self.expr)
        }
    }
}

/// A straight-line choreography program. Variables scope downward and
/// belong to the receiver of the statement that bound them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub statements: Vec<Statement>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ElabError {
    #[error("statement {line}: unbound variable `{name}`")]
    UnboundVariable { line: usize, name: String },
    #[error("statement {line}: `{name}` lives at {owner}, but the computation runs at {sender}")]
    WrongOwner { line: usize, name: String, owner: Loc, sender: Loc },
    #[error("statement {line}: unknown primitive `{name}`")]
    UnknownPrimitive { line: usize, name: String },
}

#[derive(Clone, Debug)]
struct Resolved {
    bind: Option<String>,
    sender: Loc,
    receiver: Loc,
    expr: LocalTerm,
    inputs: Vec<String>,
    ty: Arity,
}

impl Program {
    /// Checks scoping and ownership, infers message types, and produces the
    /// choreography. Statement numbers in errors are 1-based.
    pub fn elaborate(&self, reg: &PrimitiveRegistry) -> Result<Choreo, ElabError> {
        let mut scope: BTreeMap<String, (Loc, Arity)> = BTreeMap::new();
        let mut resolved = Vec::with_capacity(self.statements.len());
        for (i, st) in self.statements.iter().enumerate() {
            let line = i + 1;
            if let Some(name) = st.expr.primitives().into_iter().find(|p| reg.get(p).is_none()) {
                return Err(ElabError::UnknownPrimitive { line, name });
            }
            let inputs: Vec<String> = st.expr.free_vars().into_iter().collect();
            let mut types = BTreeMap::new();
            for name in &inputs {
                let (owner, ty) =
                    scope.get(name).ok_or_else(|| ElabError::UnboundVariable { line, name: name.clone() })?;
                if owner != &st.sender {
                    return Err(ElabError::WrongOwner {
                        line,
                        name: name.clone(),
                        owner: owner.clone(),
                        sender: st.sender.clone(),
                    });
                }
                types.insert(name.clone(), *ty);
            }
            let ty = st.ty.unwrap_or_else(|| infer_result(&st.expr, &types, reg));
            if let Some(x) = &st.bind {
                scope.insert(x.clone(), (st.receiver.clone(), ty));
            }
            resolved.push(Resolved {
                bind: st.bind.clone(),
                sender: st.sender.clone(),
                receiver: st.receiver.clone(),
                expr: st.expr.clone(),
                inputs,
                ty,
            });
        }
        let resolved: Arc<[Resolved]> = resolved.into();
        Ok(Choreo::new(move |at| build(at, &resolved, 0, BTreeMap::new(), Value::Unit)))
    }
}

fn build(
    at: &At,
    stmts: &Arc<[Resolved]>,
    i: usize,
    env: BTreeMap<String, LocatedValue>,
    last: Value,
) -> ChoreoTerm {
    let Some(st) = stmts.get(i) else {
        return Term::Leaf(last);
    };
    let mut computation = at.located(&st.sender, st.expr.clone());
    for name in &st.inputs {
        let input = env[name].clone();
        computation = computation.bind(|t| input.map(|v| t.substitute(name, &v)));
    }
    let (at2, stmts) = (at.clone(), Arc::clone(stmts));
    let (bind, receiver) = (st.bind.clone(), st.receiver.clone());
    at.comm_as(&st.sender, &st.receiver, computation, st.ty).bind(move |resp| {
        let mut env = env.clone();
        if let Some(x) = &bind {
            env.insert(x.clone(), at2.receive(&receiver, resp.clone()));
        }
        build(&at2, &stmts, i + 1, env, resp)
    })
}

/// The three-party pipeline: Alice reads an input and applies `f`, Bob
/// applies `g`, Carol applies `h`, and Alice shows the result.
pub fn pipeline_program() -> Program {
    let (a, b, c) = (Loc::new("Alice"), Loc::new("Bob"), Loc::new("Carol"));
    let app = |f: &str, x: &str| LocalTerm::app(f, [LocalTerm::var(x)]);
    Program {
        statements: alloc::vec![
            Statement::local(Some("x"), &a, LocalTerm::app("const-input", [])),
            Statement::comm(Some("y"), &a, &b, app("f", "x")),
            Statement::comm(Some("z"), &b, &c, app("g", "y")),
            Statement::comm(Some("w"), &c, &a, app("h", "z")),
            Statement::local(None, &a, app("show", "w")),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::pipeline_registry;
    use alloc::vec;

    fn alice() -> Loc {
        Loc::new("Alice")
    }
    fn bob() -> Loc {
        Loc::new("Bob")
    }

    #[test]
    fn focus_erases_foreign_values() {
        let v = At::focus(alice()).located(&alice(), Value::Int(3));
        assert_eq!(v.get(), Some(&Value::Int(3)));
        let w = At::focus(bob()).located(&alice(), Value::Int(3));
        assert!(!w.is_present());
        assert_eq!(w.owner(), &alice());
        assert!(At::global().located(&bob(), 1).is_present());
    }

    #[test]
    fn located_monad_laws() {
        // Focused at the owner the located monad is the identity monad; focused
        // elsewhere it is the unit monad. Three laws in each regime.
        for at in [At::focus(alice()), At::focus(bob())] {
            let m = at.located(&alice(), 5_i64);
            let f = |v: i64| at.located(&alice(), v + 1);
            let g = |v: i64| at.located(&alice(), v * 2);
            assert_eq!(at.located(&alice(), 5).bind(f), f(5));
            assert_eq!(m.clone().bind(|v| at.located(&alice(), v)), m);
            assert_eq!(m.clone().bind(f).bind(g), m.clone().bind(|v| f(v).bind(g)));
        }
    }

    #[test]
    fn absent_bind_never_calls_the_function() {
        let m: Located<i64> = At::focus(bob()).located(&alice(), 1);
        let out = m.bind(|_| -> Located<i64> { panic!("absent payload read") });
        assert!(!out.is_present());
    }

    #[test]
    fn comm_arity_is_located_at_receiver() {
        for (focus, expected) in [(alice(), Arity::Unit), (bob(), Arity::Int)] {
            let at = At::focus(focus);
            let term = at.comm_as(&alice(), &bob(), at.located(&alice(), LocalTerm::lit(1)), Arity::Int);
            assert_eq!(term.head().unwrap().arity(), expected);
        }
    }

    #[test]
    fn pipeline_evaluates_to_83() {
        let reg = pipeline_registry(alice(), 42);
        let c = pipeline_program().elaborate(&reg).unwrap();
        let out = choreo_eval(&c, &reg).unwrap();
        // (42 + 1) * 2 - 3
        assert_eq!(out.observations, Observations::from([(alice(), vec![Value::Int(83)])]));
        assert_eq!(out.result, Value::Int(83));
        assert_eq!((out.steps, out.messages), (5, 3));
        let locs: Vec<_> = c.locations().into_iter().map(|l| String::from(l.as_str())).collect();
        assert_eq!(locs, ["Alice", "Bob", "Carol"]);
        assert_eq!(choreo_eval(&c, &reg), Ok(out));
    }

    #[test]
    fn single_comm_delivers() {
        let reg = PrimitiveRegistry::new();
        let p = Program { statements: vec![Statement::comm(Some("y"), &alice(), &bob(), LocalTerm::lit(5))] };
        let out = choreo_eval(&p.elaborate(&reg).unwrap(), &reg).unwrap();
        assert_eq!(out.result, Value::Int(5));
        assert!(out.observations.is_empty());
        let empty = choreo_eval(&Choreo::pure(Value::Unit), &reg).unwrap();
        assert_eq!((empty.steps, empty.result), (0, Value::Unit));
    }

    #[test]
    fn elaboration_errors() {
        let reg = PrimitiveRegistry::new();
        let unbound = Program { statements: vec![Statement::local(None, &alice(), LocalTerm::var("x"))] };
        assert!(matches!(unbound.elaborate(&reg), Err(ElabError::UnboundVariable { line: 1, .. })));
        let wrong = Program {
            statements: vec![
                Statement::comm(Some("x"), &alice(), &bob(), LocalTerm::lit(1)),
                Statement::local(None, &alice(), LocalTerm::var("x")),
            ],
        };
        assert!(matches!(wrong.elaborate(&reg), Err(ElabError::WrongOwner { line: 2, .. })));
        let unknown = Program { statements: vec![Statement::local(None, &alice(), LocalTerm::app("f", []))] };
        assert!(matches!(unknown.elaborate(&reg), Err(ElabError::UnknownPrimitive { line: 1, .. })));
    }

    #[test]
    fn statement_display() {
        let st = Statement::comm(Some("y"), &alice(), &bob(), LocalTerm::app("f", [LocalTerm::var("x")]));
        assert_eq!(alloc::format!("{st}"), "y <- Alice => Bob <> (f x)");
    }
}
