//! Seeded generators for property suites: random straight-line
//! choreographies, and random terms over a small test signature.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::choreography::{Choreo, Program, Statement};
use crate::effects::{perform, pure, Signature, Term};
use crate::local::{LocalTerm, PrimitiveRegistry};
use crate::loc::Loc;
use crate::value::{Arity, Value, INT_DOMAIN};

pub const MAX_LOCS: usize = 4;
pub const MAX_DEPTH: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    /// At most [`MAX_LOCS`].
    pub num_locs: usize,
    /// Maximum number of statements; at most [`MAX_DEPTH`].
    pub depth: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { num_locs: MAX_LOCS, depth: MAX_DEPTH }
    }
}

/// Location names used by generated programs.
pub fn gen_locations(n: usize) -> Vec<Loc> {
    (0..n).map(|i| Loc::new(format!("P{i}"))).collect()
}

/// A random program over the built-in primitives. Deterministic in `seed`.
///
/// Each statement is a local step or a communication between two distinct
/// locations, and its expression only reads variables owned by its sender,
/// so data flows along the generated communications.
pub fn gen_program(seed: u64, params: GenParams) -> Program {
    let num_locs = params.num_locs.clamp(1, MAX_LOCS);
    let depth = params.depth.min(MAX_DEPTH);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locs = gen_locations(num_locs);
    let len = if depth == 0 { 0 } else { rng.random_range(1..=depth) };
    let mut owned: Vec<(String, Loc)> = Vec::new();
    let mut statements = Vec::with_capacity(len);
    for i in 0..len {
        let sender = locs[rng.random_range(0..num_locs)].clone();
        let receiver = if num_locs == 1 || rng.random_bool(0.35) {
            sender.clone()
        } else {
            let mut r = rng.random_range(0..num_locs - 1);
            if locs[r] == sender {
                r = num_locs - 1;
            }
            locs[r].clone()
        };
        let visible: Vec<&str> = owned.iter().filter(|(_, o)| *o == sender).map(|(n, _)| n.as_str()).collect();
        let mut expr = gen_expr(&mut rng, &visible, 2);
        if rng.random_bool(0.5) {
            expr = LocalTerm::app("show", [expr]);
        }
        let name = format!("v{i}");
        statements.push(Statement { bind: Some(name.clone()), sender, receiver: receiver.clone(), expr, ty: None });
        owned.push((name, receiver));
    }
    Program { statements }
}

fn gen_expr(rng: &mut ChaCha8Rng, vars: &[&str], depth: usize) -> LocalTerm {
    if depth == 0 || rng.random_bool(0.4) {
        if !vars.is_empty() && rng.random_bool(0.6) {
            return LocalTerm::var(vars[rng.random_range(0..vars.len())]);
        }
        return LocalTerm::lit(INT_DOMAIN[rng.random_range(0..INT_DOMAIN.len())]);
    }
    let prim = ["add", "sub", "mul"][rng.random_range(0..3)];
    LocalTerm::app(prim, [gen_expr(rng, vars, depth - 1), gen_expr(rng, vars, depth - 1)])
}

/// [`gen_program`], elaborated against the built-in registry.
pub fn gen_choreo(seed: u64, params: GenParams) -> Choreo {
    gen_program(seed, params)
        .elaborate(&PrimitiveRegistry::new())
        .expect("generated programs are well scoped")
}

/// A test signature: `Choice(n)` asks for an integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Choice(pub u8);

impl Signature for Choice {
    fn arity(&self) -> Arity {
        Arity::Int
    }
}

/// Leaf expressions of generated terms. `Var(i)` is the `i`th response (or
/// bound argument) seen on the path, counting from the most recent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LeafExpr {
    Const(i64),
    Var(usize),
    Sum,
}

/// First-order description of a term over [`Choice`]: a node branches on
/// its response, one child per value of the integer checking domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermShape {
    Leaf(LeafExpr),
    Node(u8, Box<[TermShape; 4]>),
}

impl TermShape {
    pub fn depth(&self) -> usize {
        match self {
            TermShape::Leaf(_) => 0,
            TermShape::Node(_, kids) => 1 + kids.iter().map(TermShape::depth).max().unwrap_or(0),
        }
    }

    /// Builds the term; `env` holds values already in scope, most recent
    /// last.
    pub fn realize(&self, env: Arc<Vec<i64>>) -> Term<Choice> {
        match self {
            TermShape::Leaf(e) => pure(match e {
                LeafExpr::Const(c) => *c,
                LeafExpr::Var(i) => env.iter().rev().nth(*i).copied().unwrap_or(-1),
                LeafExpr::Sum => env.iter().sum(),
            }),
            TermShape::Node(op, kids) => {
                let kids = Arc::new((**kids).clone());
                perform(Choice(*op)).bind(move |r| {
                    let r = r.as_int().unwrap_or(0);
                    let mut next = (*env).clone();
                    next.push(r);
                    kids[r.clamp(0, 3) as usize].realize(Arc::new(next))
                })
            }
        }
    }

    /// The term as a continuation of one bound value.
    pub fn realize_fn(self) -> impl Fn(Value) -> Term<Choice> + Send + Sync + 'static {
        move |x| self.realize(Arc::new(alloc::vec![x.as_int().unwrap_or(0)]))
    }
}

/// A random term shape of depth at most `max_depth`.
pub fn gen_term_shape(seed: u64, max_depth: usize) -> TermShape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shape(&mut rng, max_depth)
}

fn shape(rng: &mut ChaCha8Rng, depth: usize) -> TermShape {
    if depth == 0 || rng.random_bool(0.3) {
        let leaf = match rng.random_range(0..3) {
            0 => LeafExpr::Const(rng.random_range(0..4)),
            1 => LeafExpr::Var(rng.random_range(0..2)),
            _ => LeafExpr::Sum,
        };
        return TermShape::Leaf(leaf);
    }
    let op = rng.random_range(0..3);
    let kids = [(); 4].map(|_| shape(rng, depth - 1));
    TermShape::Node(op, Box::new(kids))
}
