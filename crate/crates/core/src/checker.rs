//! Network semantics and an exhaustive interleaving explorer.
//!
//! A network is one residual process per location plus an unbounded FIFO
//! buffer per ordered pair of locations. Sends never block; a receive is
//! enabled only when its buffer is nonempty. Each step runs exactly one
//! operation of one process, and local computations are atomic.
//!
//! Residual processes contain continuations, so a state is identified by the
//! responses each process has consumed so far: the initial process plus that
//! response history determines the residual term exactly.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::choreography::{choreo_eval, Choreo, ChoreoEvalError, ChoreoOutcome, Observations};
use crate::effects::Term;
use crate::epp::project_all;
use crate::local::{eval_observed, Env, EvalError, LocalTerm, PrimitiveRegistry};
use crate::loc::Loc;
use crate::process::{Process, ProcessOp};
use crate::value::{Arity, Value};

#[derive(Clone, Debug)]
struct Residual {
    term: Process,
    history: Vec<Value>,
}

/// A network configuration.
#[derive(Clone, Debug)]
pub struct NetworkState {
    procs: BTreeMap<Loc, Residual>,
    buffers: BTreeMap<(Loc, Loc), VecDeque<Value>>,
    observations: Observations,
    enqueued: usize,
    dequeued: usize,
}

type StateKey = (Vec<Vec<Value>>, Vec<((Loc, Loc), VecDeque<Value>)>, Observations);

impl NetworkState {
    pub fn new(procs: BTreeMap<Loc, Process>) -> Self {
        NetworkState {
            procs: procs.into_iter().map(|(l, term)| (l, Residual { term, history: Vec::new() })).collect(),
            buffers: BTreeMap::new(),
            observations: Observations::new(),
            enqueued: 0,
            dequeued: 0,
        }
    }

    pub fn locations(&self) -> impl Iterator<Item = &Loc> {
        self.procs.keys()
    }

    pub fn process(&self, l: &Loc) -> Option<&Process> {
        self.procs.get(l).map(|r| &r.term)
    }

    pub fn observations(&self) -> &Observations {
        &self.observations
    }

    /// Messages waiting from `from` to `to`, oldest first.
    pub fn buffer(&self, from: &Loc, to: &Loc) -> impl Iterator<Item = &Value> {
        self.buffers.get(&(from.clone(), to.clone())).into_iter().flatten()
    }

    pub fn buffers_empty(&self) -> bool {
        self.buffers.values().all(VecDeque::is_empty)
    }

    pub fn all_done(&self) -> bool {
        self.procs.values().all(|r| r.term.is_leaf())
    }

    pub fn is_terminal(&self) -> bool {
        self.all_done() && self.buffers_empty()
    }

    pub fn enqueued(&self) -> usize {
        self.enqueued
    }

    pub fn dequeued(&self) -> usize {
        self.dequeued
    }

    /// Final value of every finished process.
    pub fn results(&self) -> BTreeMap<Loc, Value> {
        self.procs
            .iter()
            .filter_map(|(l, r)| match &r.term {
                Term::Leaf(v) => Some((l.clone(), v.clone())),
                Term::Node(..) => None,
            })
            .collect()
    }

    fn key(&self) -> StateKey {
        (
            self.procs.values().map(|r| r.history.clone()).collect(),
            self.buffers.iter().filter(|(_, q)| !q.is_empty()).map(|(k, q)| (k.clone(), q.clone())).collect(),
            self.observations.clone(),
        )
    }

    fn advance(&mut self, l: &Loc, response: Value) {
        let r = self.procs.get_mut(l).expect("stepping a known location");
        let next = r.term.resume(response.clone()).expect("stepping a blocked node");
        r.term = next;
        r.history.push(response);
    }
}

/// One transition of the network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetworkStep {
    Local { at: Loc, term: LocalTerm, value: Value },
    Send { at: Loc, to: Loc, value: Value },
    Recv { at: Loc, from: Loc, value: Value },
}

impl NetworkStep {
    pub fn at(&self) -> &Loc {
        match self {
            NetworkStep::Local { at, .. } | NetworkStep::Send { at, .. } | NetworkStep::Recv { at, .. } => at,
        }
    }

    /// The operation as a process trace line would show it.
    pub fn op(&self) -> ProcessOp {
        match self {
            NetworkStep::Local { term, value, .. } => {
                ProcessOp::Locally { term: term.clone(), ty: Arity::of(value) }
            }
            NetworkStep::Send { to, value, .. } => ProcessOp::Send { to: to.clone(), payload: value.clone() },
            NetworkStep::Recv { from, value, .. } => ProcessOp::Recv { from: from.clone(), expected: Arity::of(value) },
        }
    }
}

impl fmt::Display for NetworkStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkStep::Local { at, term, value } => write!(f, "{at}: locally {term} = {value}"),
            NetworkStep::Send { at, to, value } => write!(f, "{at}: send {to} {value}"),
            NetworkStep::Recv { at, from, value } => write!(f, "{at}: recv {from} = {value}"),
        }
    }
}

/// A process that cannot take its next step for a reason other than an
/// empty buffer.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Fault {
    #[error("{at} expected {expected} from {from} but the next message is {got}")]
    TypeMismatchAtRecv { at: Loc, from: Loc, expected: Arity, got: Value },
    #[error("local computation at {at} failed: {error}")]
    LocalFailure { at: Loc, error: EvalError },
    #[error("local computation at {at} produced {got}, expected {expected}")]
    LocalTypeMismatch { at: Loc, expected: Arity, got: Value },
    #[error("{at} sends to {to}, which is not part of the network")]
    UnknownPeer { at: Loc, to: Loc },
}

#[derive(Clone, Debug, Default)]
pub struct Successors {
    pub steps: Vec<(NetworkStep, NetworkState)>,
    pub faults: Vec<Fault>,
}

/// Every enabled step from `st`, in location order.
pub fn step_network(st: &NetworkState, reg: &PrimitiveRegistry) -> Successors {
    let mut out = Successors::default();
    for (l, r) in &st.procs {
        let Term::Node(op, _) = &r.term else { continue };
        match op {
            ProcessOp::Locally { term, ty } => match eval_observed(term, &Env::at(l.clone()), reg) {
                Err(error) => out.faults.push(Fault::LocalFailure { at: l.clone(), error }),
                Ok((v, _)) if !ty.accepts(&v) => {
                    out.faults.push(Fault::LocalTypeMismatch { at: l.clone(), expected: *ty, got: v })
                }
                Ok((v, log)) => {
                    let mut next = st.clone();
                    next.observations.record(l, log);
                    next.advance(l, v.clone());
                    out.steps.push((NetworkStep::Local { at: l.clone(), term: term.clone(), value: v }, next));
                }
            },
            ProcessOp::Send { to, payload } => {
                if !st.procs.contains_key(to) {
                    out.faults.push(Fault::UnknownPeer { at: l.clone(), to: to.clone() });
                    continue;
                }
                let mut next = st.clone();
                next.buffers.entry((l.clone(), to.clone())).or_default().push_back(payload.clone());
                next.enqueued += 1;
                next.advance(l, Value::Unit);
                out.steps.push((NetworkStep::Send { at: l.clone(), to: to.clone(), value: payload.clone() }, next));
            }
            ProcessOp::Recv { from, expected } => {
                let Some(v) = st.buffers.get(&(from.clone(), l.clone())).and_then(VecDeque::front) else {
                    continue;
                };
                if !expected.accepts(v) {
                    out.faults.push(Fault::TypeMismatchAtRecv {
                        at: l.clone(),
                        from: from.clone(),
                        expected: *expected,
                        got: v.clone(),
                    });
                    continue;
                }
                let v = v.clone();
                let mut next = st.clone();
                next.buffers.get_mut(&(from.clone(), l.clone())).map(VecDeque::pop_front);
                next.dequeued += 1;
                next.advance(l, v.clone());
                out.steps.push((NetworkStep::Recv { at: l.clone(), from: from.clone(), value: v }, next));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 1_000_000, max_depth: 10_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    States,
    Depth,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("exploration exceeded the {} limit after {explored} states", match .limit { Limit::States => "state", Limit::Depth => "depth" })]
    LimitExceeded { limit: Limit, explored: usize },
    #[error("limits must be positive")]
    InvalidLimits,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StuckCause {
    /// Some process waits on an empty buffer and nothing else can move.
    Deadlock { blocked: Vec<Loc> },
    Fault(Fault),
    /// Every process finished but messages were never received.
    Undelivered { messages: usize },
}

impl fmt::Display for StuckCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckCause::Deadlock { blocked } => {
                f.write_str("deadlock; blocked:")?;
                for l in blocked {
                    write!(f, " {l}")?;
                }
                Ok(())
            }
            StuckCause::Fault(e) => write!(f, "{e}"),
            StuckCause::Undelivered { messages } => write!(f, "{messages} message(s) never received"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StuckState {
    pub cause: StuckCause,
    /// Steps from the initial state; a shortest one, since exploration is
    /// breadth first.
    pub trace: Vec<NetworkStep>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalState {
    pub observations: Observations,
    pub results: BTreeMap<Loc, Value>,
    pub enqueued: usize,
    pub dequeued: usize,
}

#[derive(Clone, Debug)]
pub struct ExplorationReport {
    /// Distinct states visited, including the initial one.
    pub states: usize,
    pub transitions: usize,
    /// Distinct terminal states.
    pub terminals: Vec<TerminalState>,
    pub stuck: Vec<StuckState>,
}

impl ExplorationReport {
    pub fn deadlock_free(&self) -> bool {
        self.stuck.is_empty()
    }

    /// Distinct terminal observation maps.
    pub fn outcomes(&self) -> BTreeSet<&Observations> {
        self.terminals.iter().map(|t| &t.observations).collect()
    }

    /// Every terminal state agrees on observations and results.
    pub fn confluent(&self) -> bool {
        self.terminals.windows(2).all(|w| w[0].observations == w[1].observations && w[0].results == w[1].results)
    }
}

struct Node {
    parent: Option<usize>,
    step: Option<NetworkStep>,
    depth: usize,
}

fn witness(nodes: &[Node], mut i: usize) -> Vec<NetworkStep> {
    let mut trace = Vec::new();
    while let Some(step) = &nodes[i].step {
        trace.push(step.clone());
        i = nodes[i].parent.expect("non-root nodes have parents");
    }
    trace.reverse();
    trace
}

/// Breadth-first reachability over [`step_network`], classifying every
/// maximal state as terminal or stuck. Exceeding a limit is an error, never
/// a silent truncation.
pub fn explore(init: &NetworkState, reg: &PrimitiveRegistry, limits: Limits) -> Result<ExplorationReport, ExploreError> {
    if limits.max_states == 0 || limits.max_depth == 0 {
        return Err(ExploreError::InvalidLimits);
    }
    let mut seen = BTreeSet::new();
    seen.insert(init.key());
    let mut nodes = alloc::vec![Node { parent: None, step: None, depth: 0 }];
    let mut queue = VecDeque::from([(0usize, init.clone())]);
    let mut report = ExplorationReport { states: 1, transitions: 0, terminals: Vec::new(), stuck: Vec::new() };
    let mut terminal_keys = BTreeSet::new();

    while let Some((id, st)) = queue.pop_front() {
        let succ = step_network(&st, reg);
        let faulted = !succ.faults.is_empty();
        for fault in succ.faults {
            report.stuck.push(StuckState { cause: StuckCause::Fault(fault), trace: witness(&nodes, id) });
        }
        if succ.steps.is_empty() {
            if st.is_terminal() {
                let t = TerminalState {
                    observations: st.observations.clone(),
                    results: st.results(),
                    enqueued: st.enqueued,
                    dequeued: st.dequeued,
                };
                if terminal_keys.insert((t.observations.clone(), t.results.clone(), t.enqueued, t.dequeued)) {
                    report.terminals.push(t);
                }
            } else if st.all_done() {
                let messages = st.buffers.values().map(VecDeque::len).sum();
                report.stuck.push(StuckState { cause: StuckCause::Undelivered { messages }, trace: witness(&nodes, id) });
            } else if !faulted {
                let blocked = st.procs.iter().filter(|(_, r)| !r.term.is_leaf()).map(|(l, _)| l.clone()).collect();
                report.stuck.push(StuckState { cause: StuckCause::Deadlock { blocked }, trace: witness(&nodes, id) });
            }
            continue;
        }
        let depth = nodes[id].depth + 1;
        for (step, next) in succ.steps {
            report.transitions += 1;
            if !seen.insert(next.key()) {
                continue;
            }
            if depth > limits.max_depth {
                return Err(ExploreError::LimitExceeded { limit: Limit::Depth, explored: report.states });
            }
            if report.states >= limits.max_states {
                return Err(ExploreError::LimitExceeded { limit: Limit::States, explored: report.states });
            }
            report.states += 1;
            nodes.push(Node { parent: Some(id), step: Some(step), depth });
            queue.push_back((nodes.len() - 1, next));
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("network is stuck: {0}")]
    Stuck(StuckCause),
    #[error("no terminal state within {0} steps")]
    TooLong(usize),
}

/// One maximal run that always takes the first enabled step, recording the
/// operations each location performed with their actual values.
pub fn run_first(
    init: &NetworkState,
    reg: &PrimitiveRegistry,
    max_steps: usize,
) -> Result<(NetworkState, BTreeMap<Loc, Vec<ProcessOp>>), RunError> {
    let mut st = init.clone();
    let mut ops: BTreeMap<Loc, Vec<ProcessOp>> = st.procs.keys().map(|l| (l.clone(), Vec::new())).collect();
    for _ in 0..max_steps {
        let succ = step_network(&st, reg);
        if let Some(fault) = succ.faults.into_iter().next() {
            return Err(RunError::Stuck(StuckCause::Fault(fault)));
        }
        let Some((step, next)) = succ.steps.into_iter().next() else {
            if st.is_terminal() {
                return Ok((st, ops));
            }
            let cause = if st.all_done() {
                StuckCause::Undelivered { messages: st.buffers.values().map(VecDeque::len).sum() }
            } else {
                StuckCause::Deadlock {
                    blocked: st.procs.iter().filter(|(_, r)| !r.term.is_leaf()).map(|(l, _)| l.clone()).collect(),
                }
            };
            return Err(RunError::Stuck(cause));
        };
        let at = step.at().clone();
        // Locally records the declared type rather than the value's.
        let op = match (&step, st.process(&at).and_then(Term::head)) {
            (NetworkStep::Local { term, .. }, Some(ProcessOp::Locally { ty, .. })) => {
                ProcessOp::Locally { term: term.clone(), ty: *ty }
            }
            (NetworkStep::Recv { from, .. }, Some(ProcessOp::Recv { expected, .. })) => {
                ProcessOp::Recv { from: from.clone(), expected: *expected }
            }
            _ => step.op(),
        };
        ops.entry(at).or_default().push(op);
        st = next;
    }
    Err(RunError::TooLong(max_steps))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Choreo(#[from] ChoreoEvalError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

/// The result of comparing a choreography with its projected network.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub choreography: ChoreoOutcome,
    pub report: ExplorationReport,
    /// No reachable stuck state.
    pub deadlock_free: bool,
    /// Every terminal observation map equals the choreography's.
    pub agreement: bool,
    pub has_terminal: bool,
    /// Every terminal state has empty buffers and exactly one enqueue and
    /// one dequeue per cross-location communication.
    pub conserved: bool,
    /// Number of explored network states.
    pub states: usize,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.deadlock_free && self.agreement && self.has_terminal
    }
}

/// Explores the projected network of `c` and compares every maximal run with
/// the choreography's own evaluation.
pub fn check_soundness_completeness(c: &Choreo, reg: &PrimitiveRegistry, limits: Limits) -> Result<Verdict, CheckError> {
    let choreography = choreo_eval(c, reg)?;
    let procs = project_all(c, &c.locations()).expect("the scan lists every location");
    let report = explore(&NetworkState::new(procs), reg, limits)?;
    let agreement = report.terminals.iter().all(|t| t.observations == choreography.observations);
    let conserved = report
        .terminals
        .iter()
        .all(|t| t.enqueued == choreography.messages && t.dequeued == choreography.messages);
    Ok(Verdict {
        deadlock_free: report.deadlock_free(),
        agreement,
        has_terminal: !report.terminals.is_empty(),
        conserved,
        states: report.states,
        choreography,
        report,
    })
}

/// Human-readable summary used by the command line front end.
pub fn describe(v: &Verdict) -> String {
    alloc::format!(
        "verdict: {}\nstates: {}\nterminal outcomes: {}\nstuck states: {}\n{}",
        v.holds(),
        v.states,
        v.report.outcomes().len(),
        v.report.stuck.len(),
        v.choreography.observations
    )
}
