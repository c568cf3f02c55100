//! The local computation language run by each location.
//!
//! A first-order, loop-free expression language: literals, variables,
//! primitive application and `let`. Evaluation is deterministic and total on
//! closed, well-formed terms. Integers wrap on overflow.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::loc::Loc;
use crate::value::{Arity, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LocalTerm {
    Lit(Value),
    Var(String),
    PrimApp(String, Vec<LocalTerm>),
    Let(String, Box<LocalTerm>, Box<LocalTerm>),
}

impl LocalTerm {
    pub fn lit(v: impl Into<Value>) -> Self {
        LocalTerm::Lit(v.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        LocalTerm::Var(name.into())
    }

    pub fn app(name: impl Into<String>, args: impl IntoIterator<Item = LocalTerm>) -> Self {
        LocalTerm::PrimApp(name.into(), args.into_iter().collect())
    }

    pub fn let_in(name: impl Into<String>, bound: LocalTerm, body: LocalTerm) -> Self {
        LocalTerm::Let(name.into(), Box::new(bound), Box::new(body))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            LocalTerm::Lit(_) => {}
            LocalTerm::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            LocalTerm::PrimApp(_, args) => args.iter().for_each(|a| a.collect_free(bound, out)),
            LocalTerm::Let(x, e, body) => {
                e.collect_free(bound, out);
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Replaces free occurrences of `name` by the literal `v`.
    pub fn substitute(&self, name: &str, v: &Value) -> LocalTerm {
        match self {
            LocalTerm::Var(x) if x == name => LocalTerm::Lit(v.clone()),
            LocalTerm::Lit(_) | LocalTerm::Var(_) => self.clone(),
            LocalTerm::PrimApp(f, args) => {
                LocalTerm::PrimApp(f.clone(), args.iter().map(|a| a.substitute(name, v)).collect())
            }
            LocalTerm::Let(x, e, body) => {
                let body = if x == name { (**body).clone() } else { body.substitute(name, v) };
                LocalTerm::Let(x.clone(), Box::new(e.substitute(name, v)), Box::new(body))
            }
        }
    }

    /// Names of every primitive applied anywhere in the term.
    pub fn primitives(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_prims(&mut out);
        out
    }

    fn collect_prims(&self, out: &mut BTreeSet<String>) {
        match self {
            LocalTerm::Lit(_) | LocalTerm::Var(_) => {}
            LocalTerm::PrimApp(f, args) => {
                out.insert(f.clone());
                args.iter().for_each(|a| a.collect_prims(out));
            }
            LocalTerm::Let(_, e, body) => {
                e.collect_prims(out);
                body.collect_prims(out);
            }
        }
    }
}

/// S-expression rendering, e.g. `(let x 2 (mul x x))`.
impl fmt::Display for LocalTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalTerm::Lit(v) => write!(f, "{v}"),
            LocalTerm::Var(x) => f.write_str(x),
            LocalTerm::PrimApp(p, args) => {
                write!(f, "({p}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            LocalTerm::Let(x, e, body) => write!(f, "(let {x} {e} {body})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("primitive `{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("primitive `{primitive}` cannot be applied to {value}")]
    TypeError { primitive: String, value: Value },
    #[error("no input configured for {}", .0.as_ref().map_or("<unknown location>", |l| l.as_str()))]
    MissingInput(Option<Loc>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("primitive `{0}` is already registered")]
    DuplicatePrimitive(String),
    #[error("definition of `{name}` uses unknown primitive `{unknown}`")]
    UnknownInDefinition { name: String, unknown: String },
    #[error("definition of `{name}` has free variable `{var}`")]
    FreeInDefinition { name: String, var: String },
}

pub type PrimFn = Arc<dyn Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync>;

/// Result type of a primitive, for static inference of message types.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Returns {
    Fixed(Arity),
    /// The type of the argument at this position.
    Arg(usize),
}

#[derive(Clone)]
enum PrimKind {
    Native(PrimFn),
    /// Identity that records its argument as an observation.
    Show,
    /// The configured input of the evaluating location.
    Input,
    /// A named expression over its parameters.
    Defined { params: Vec<String>, body: LocalTerm },
}

#[derive(Clone)]
pub struct Primitive {
    arity: usize,
    returns: Returns,
    kind: PrimKind,
}

impl Primitive {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn returns(&self) -> Returns {
        self.returns
    }
}

impl fmt::Debug for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            PrimKind::Native(_) => "native",
            PrimKind::Show => "show",
            PrimKind::Input => "input",
            PrimKind::Defined { .. } => "defined",
        };
        f.debug_struct("Primitive")
            .field("arity", &self.arity)
            .field("returns", &self.returns)
            .field("kind", &kind)
            .finish()
    }
}

/// Named primitives available to local terms, plus the per-location inputs
/// read by `const-input`.
#[derive(Clone, Debug)]
pub struct PrimitiveRegistry {
    prims: BTreeMap<String, Primitive>,
    inputs: BTreeMap<Loc, Value>,
}

fn int_args(name: &str, args: &[Value]) -> Result<(i64, i64), EvalError> {
    match args {
        [Value::Int(a), Value::Int(b)] => Ok((*a, *b)),
        _ => {
            let bad = args.iter().find(|v| !matches!(v, Value::Int(_))).cloned().unwrap_or(Value::Unit);
            Err(EvalError::TypeError { primitive: name.to_string(), value: bad })
        }
    }
}

fn arith(name: &'static str, op: fn(i64, i64) -> i64) -> PrimFn {
    Arc::new(move |args| int_args(name, args).map(|(a, b)| Value::Int(op(a, b))))
}

impl Default for PrimitiveRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl PrimitiveRegistry {
    /// An empty registry, without even the built-ins.
    pub fn empty() -> Self {
        PrimitiveRegistry { prims: BTreeMap::new(), inputs: BTreeMap::new() }
    }

    /// The built-ins: `add`, `sub`, `mul`, `eq`, `concat`, `fst`, `snd`,
    /// `pair`, `const-input` and `show`.
    pub fn new() -> Self {
        let mut reg = Self::empty();
        let mut native = |name: &str, arity, returns, f: PrimFn| {
            reg.prims.insert(name.into(), Primitive { arity, returns, kind: PrimKind::Native(f) });
        };
        native("add", 2, Returns::Fixed(Arity::Int), arith("add", i64::wrapping_add));
        native("sub", 2, Returns::Fixed(Arity::Int), arith("sub", i64::wrapping_sub));
        native("mul", 2, Returns::Fixed(Arity::Int), arith("mul", i64::wrapping_mul));
        native("eq", 2, Returns::Fixed(Arity::Bool), Arc::new(|args| Ok(Value::Bool(args[0] == args[1]))));
        native(
            "concat",
            2,
            Returns::Arg(0),
            Arc::new(|args| match args {
                [Value::Str(a), Value::Str(b)] => Ok(Value::Str(format!("{a}{b}"))),
                [Value::List(a), Value::List(b)] => Ok(Value::List(a.iter().chain(b).cloned().collect())),
                [a, _] => Err(EvalError::TypeError { primitive: "concat".into(), value: a.clone() }),
                _ => unreachable!("arity checked by the evaluator"),
            }),
        );
        native("pair", 2, Returns::Fixed(Arity::Value), Arc::new(|args| Ok(Value::pair(args[0].clone(), args[1].clone()))));
        for (name, first) in [("fst", true), ("snd", false)] {
            native(
                name,
                1,
                Returns::Fixed(Arity::Value),
                Arc::new(move |args| match &args[0] {
                    Value::Pair(a, b) => Ok(if first { (**a).clone() } else { (**b).clone() }),
                    v => Err(EvalError::TypeError { primitive: name.into(), value: v.clone() }),
                }),
            );
        }
        reg.prims.insert("show".into(), Primitive { arity: 1, returns: Returns::Arg(0), kind: PrimKind::Show });
        reg.prims.insert(
            "const-input".into(),
            Primitive { arity: 0, returns: Returns::Fixed(Arity::Value), kind: PrimKind::Input },
        );
        reg
    }

    pub fn get(&self, name: &str) -> Option<&Primitive> {
        self.prims.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.prims.keys().map(String::as_str)
    }

    /// Returns a registry extended with a native primitive; `self` is left
    /// unchanged.
    pub fn register_primitive(
        &self,
        name: &str,
        arity: usize,
        returns: Returns,
        f: impl Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync + 'static,
    ) -> Result<Self, RegistryError> {
        self.extended(name, Primitive { arity, returns, kind: PrimKind::Native(Arc::new(f)) })
    }

    /// Returns a registry extended with `name(params) = body`.
    ///
    /// `body` may only mention its parameters and primitives that are already
    /// registered, so definitions can never recurse.
    pub fn define(&self, name: &str, params: Vec<String>, body: LocalTerm) -> Result<Self, RegistryError> {
        if let Some(unknown) = body.primitives().into_iter().find(|p| !self.prims.contains_key(p)) {
            return Err(RegistryError::UnknownInDefinition { name: name.into(), unknown });
        }
        if let Some(var) = body.free_vars().into_iter().find(|v| !params.contains(v)) {
            return Err(RegistryError::FreeInDefinition { name: name.into(), var });
        }
        let scope = params.iter().map(|p| (p.clone(), Arity::Value)).collect();
        let returns = Returns::Fixed(infer_result(&body, &scope, self));
        let arity = params.len();
        self.extended(name, Primitive { arity, returns, kind: PrimKind::Defined { params, body } })
    }

    fn extended(&self, name: &str, prim: Primitive) -> Result<Self, RegistryError> {
        if self.prims.contains_key(name) {
            return Err(RegistryError::DuplicatePrimitive(name.into()));
        }
        let mut next = self.clone();
        next.prims.insert(name.into(), prim);
        Ok(next)
    }

    /// Sets the value `const-input` produces when evaluated at `loc`.
    pub fn with_input(mut self, loc: Loc, v: Value) -> Self {
        self.inputs.insert(loc, v);
        self
    }

    pub fn input(&self, loc: &Loc) -> Option<&Value> {
        self.inputs.get(loc)
    }
}

/// Variable bindings plus the location doing the evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    vars: BTreeMap<String, Value>,
    site: Option<Loc>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at(site: Loc) -> Self {
        Env { vars: BTreeMap::new(), site: Some(site) }
    }

    pub fn bind(mut self, name: impl Into<String>, v: Value) -> Self {
        self.vars.insert(name.into(), v);
        self
    }

    pub fn site(&self) -> Option<&Loc> {
        self.site.as_ref()
    }
}

/// Big-step evaluation. Values passed to `show` are discarded; use
/// [`eval_observed`] to keep them.
pub fn eval_local(t: &LocalTerm, env: &Env, reg: &PrimitiveRegistry) -> Result<Value, EvalError> {
    eval_observed(t, env, reg).map(|(v, _)| v)
}

/// Evaluates `t` and returns its value together with everything passed to
/// `show`, in evaluation order.
pub fn eval_observed(t: &LocalTerm, env: &Env, reg: &PrimitiveRegistry) -> Result<(Value, Vec<Value>), EvalError> {
    let mut log = Vec::new();
    let mut scope = env.vars.clone();
    let v = eval(t, &mut scope, env.site.as_ref(), reg, &mut log)?;
    Ok((v, log))
}

fn eval(
    t: &LocalTerm,
    scope: &mut BTreeMap<String, Value>,
    site: Option<&Loc>,
    reg: &PrimitiveRegistry,
    log: &mut Vec<Value>,
) -> Result<Value, EvalError> {
    match t {
        LocalTerm::Lit(v) => Ok(v.clone()),
        LocalTerm::Var(x) => scope.get(x).cloned().ok_or_else(|| EvalError::UnboundVariable(x.clone())),
        LocalTerm::Let(x, e, body) => {
            let v = eval(e, scope, site, reg, log)?;
            let shadowed = scope.insert(x.clone(), v);
            let out = eval(body, scope, site, reg, log);
            match shadowed {
                Some(old) => scope.insert(x.clone(), old),
                None => scope.remove(x),
            };
            out
        }
        LocalTerm::PrimApp(name, args) => {
            let prim = reg.get(name).ok_or_else(|| EvalError::UnknownPrimitive(name.clone()))?;
            if prim.arity != args.len() {
                return Err(EvalError::ArityMismatch { name: name.clone(), expected: prim.arity, got: args.len() });
            }
            let args = args.iter().map(|a| eval(a, scope, site, reg, log)).collect::<Result<Vec<_>, _>>()?;
            match &prim.kind {
                PrimKind::Native(f) => f(&args),
                PrimKind::Show => {
                    log.push(args[0].clone());
                    Ok(args[0].clone())
                }
                PrimKind::Input => site
                    .and_then(|l| reg.inputs.get(l))
                    .cloned()
                    .ok_or_else(|| EvalError::MissingInput(site.cloned())),
                PrimKind::Defined { params, body } => {
                    let mut inner: BTreeMap<String, Value> = params.iter().cloned().zip(args).collect();
                    eval(body, &mut inner, site, reg, log)
                }
            }
        }
    }
}

/// Static result type of `t`, given the types of its free variables.
///
/// Falls back to [`Arity::Value`] whenever the type is not determined.
pub fn infer_result(t: &LocalTerm, vars: &BTreeMap<String, Arity>, reg: &PrimitiveRegistry) -> Arity {
    match t {
        LocalTerm::Lit(v) => Arity::of(v),
        LocalTerm::Var(x) => vars.get(x).copied().unwrap_or(Arity::Value),
        LocalTerm::Let(x, e, body) => {
            let mut inner = vars.clone();
            inner.insert(x.clone(), infer_result(e, vars, reg));
            infer_result(body, &inner, reg)
        }
        LocalTerm::PrimApp(name, args) => match reg.get(name).map(|p| p.returns) {
            Some(Returns::Fixed(a)) => a,
            Some(Returns::Arg(i)) => args.get(i).map_or(Arity::Value, |a| infer_result(a, vars, reg)),
            None => Arity::Value,
        },
    }
}

/// The registry used by the pipeline example: `f(x) = x + 1`,
/// `g(x) = 2x`, `h(x) = x - 3`, with `input` configured at `input_at`.
pub fn pipeline_registry(input_at: Loc, input: i64) -> PrimitiveRegistry {
    let x = || LocalTerm::var("x");
    let params = || vec![String::from("x")];
    PrimitiveRegistry::new()
        .define("f", params(), LocalTerm::app("add", [x(), LocalTerm::lit(1)]))
        .and_then(|r| r.define("g", params(), LocalTerm::app("mul", [LocalTerm::lit(2), x()])))
        .and_then(|r| r.define("h", params(), LocalTerm::app("sub", [x(), LocalTerm::lit(3)])))
        .expect("pipeline primitives are well formed")
        .with_input(input_at, Value::Int(input))
}
