//! Executing processes for real: one thread per location in memory, or one
//! location per OS process over TCP.
//!
//! Both back ends share [`execute`], which walks a process and delegates
//! `send`/`recv` to a [`Transport`]. Messages travel through one FIFO per
//! ordered pair of locations, the same buffering discipline the checker
//! explores, so a run here is one of the checker's interleavings.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;
use std::net::{Shutdown, TcpListener, TcpStream};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use effchor_core::local::{eval_observed, Env, EvalError};
use effchor_core::{Arity, Loc, Observations, PrimitiveRegistry, Process, ProcessOp, Term, Value};

use crate::config::DeploymentConfig;
use crate::wire::{self, DecodeError, WireError};

/// Default watchdog bound for a whole run.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("local computation at {at} failed: {error}")]
    Local { at: Loc, error: EvalError },
    #[error("local computation at {at} produced {got}, expected {expected}")]
    LocalTypeMismatch { at: Loc, expected: Arity, got: Value },
    #[error("{at} expected {expected} from {from} but received {got}")]
    RecvTypeMismatch { at: Loc, from: Loc, expected: Arity, got: Value },
    #[error("{at} communicates with {peer}, which is not part of the deployment")]
    UnknownPeer { at: Loc, peer: Loc },
    #[error("no completion within {0:?}; the network is hung")]
    HungRuntime(Duration),
    #[error("cannot connect to {peer}: {cause}")]
    ConnectFailed { peer: Loc, cause: String },
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(usize),
    #[error("malformed message from {peer}: {error}")]
    DecodeError { peer: String, error: DecodeError },
    #[error("handshake failed: {0}")]
    HandshakeMismatch(String),
    #[error("network error: {0}")]
    Io(String),
    #[error("the process at {0} panicked")]
    Panicked(Loc),
    #[error("run cancelled")]
    Cancelled,
}

impl RuntimeError {
    fn from_wire(peer: &str, e: WireError) -> Self {
        match e {
            WireError::FrameTooLarge(n) => RuntimeError::FrameTooLarge(n),
            WireError::Decode(error) => RuntimeError::DecodeError { peer: peer.to_string(), error },
            WireError::Io(e) => RuntimeError::Io(format!("{peer}: {e}")),
        }
    }
}

/// How a location exchanges messages with its peers.
pub trait Transport {
    fn send(&mut self, to: &Loc, v: Value) -> Result<(), RuntimeError>;
    /// Blocks until the next message from `from` arrives.
    fn recv(&mut self, from: &Loc) -> Result<Value, RuntimeError>;
}

/// What one location did: its `show` output and its final value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessRun {
    pub observations: Vec<Value>,
    pub result: Value,
}

/// Runs `p` as location `at` to completion.
pub fn execute<T: Transport>(
    at: &Loc,
    p: &Process,
    reg: &PrimitiveRegistry,
    transport: &mut T,
) -> Result<ProcessRun, RuntimeError> {
    let mut observations = Vec::new();
    let mut cur = p.clone();
    loop {
        let (op, k) = match cur {
            Term::Leaf(result) => return Ok(ProcessRun { observations, result }),
            Term::Node(op, k) => (op, k),
        };
        let response = match &op {
            ProcessOp::Locally { term, ty } => {
                let (v, log) = eval_observed(term, &Env::at(at.clone()), reg)
                    .map_err(|error| RuntimeError::Local { at: at.clone(), error })?;
                if !ty.accepts(&v) {
                    return Err(RuntimeError::LocalTypeMismatch { at: at.clone(), expected: *ty, got: v });
                }
                observations.extend(log);
                v
            }
            ProcessOp::Send { to, payload } => {
                transport.send(to, payload.clone())?;
                Value::Unit
            }
            ProcessOp::Recv { from, expected } => {
                let v = transport.recv(from)?;
                if !expected.accepts(&v) {
                    return Err(RuntimeError::RecvTypeMismatch {
                        at: at.clone(),
                        from: from.clone(),
                        expected: *expected,
                        got: v,
                    });
                }
                v
            }
        };
        cur = k(response);
    }
}

/// The combined outcome of a whole network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkRun {
    pub observations: Observations,
    pub results: BTreeMap<Loc, Value>,
}

struct ChannelTransport {
    at: Loc,
    outgoing: BTreeMap<Loc, mpsc::Sender<Value>>,
    incoming: BTreeMap<Loc, mpsc::Receiver<Value>>,
    cancelled: Arc<AtomicBool>,
}

impl Transport for ChannelTransport {
    fn send(&mut self, to: &Loc, v: Value) -> Result<(), RuntimeError> {
        let tx = self.outgoing.get(to).ok_or_else(|| RuntimeError::UnknownPeer { at: self.at.clone(), peer: to.clone() })?;
        // The receiving thread may already have exited; like a message left
        // in a buffer at the end of a run, the value is simply never read.
        let _ = tx.send(v);
        Ok(())
    }

    fn recv(&mut self, from: &Loc) -> Result<Value, RuntimeError> {
        let rx = self.incoming.get(from).ok_or_else(|| RuntimeError::UnknownPeer { at: self.at.clone(), peer: from.clone() })?;
        loop {
            if self.cancelled.load(Ordering::Relaxed) {
                return Err(RuntimeError::Cancelled);
            }
            match rx.recv_timeout(POLL) {
                Ok(v) => return Ok(v),
                Err(RecvTimeoutError::Timeout) => {}
                // Nothing can arrive any more; wait for the watchdog.
                Err(RecvTimeoutError::Disconnected) => thread::sleep(POLL),
            }
        }
    }
}

pub fn run_in_memory(procs: &BTreeMap<Loc, Process>, reg: &PrimitiveRegistry) -> Result<NetworkRun, RuntimeError> {
    run_in_memory_with(procs, reg, DEFAULT_TIMEOUT)
}

/// Runs every process on its own thread, connected by one channel per
/// ordered pair of locations. Fails with [`RuntimeError::HungRuntime`] if
/// the network has not finished within `timeout`.
pub fn run_in_memory_with(
    procs: &BTreeMap<Loc, Process>,
    reg: &PrimitiveRegistry,
    timeout: Duration,
) -> Result<NetworkRun, RuntimeError> {
    let cancelled = Arc::new(AtomicBool::new(false));
    let mut transports: BTreeMap<Loc, ChannelTransport> = procs
        .keys()
        .map(|l| {
            let t = ChannelTransport {
                at: l.clone(),
                outgoing: BTreeMap::new(),
                incoming: BTreeMap::new(),
                cancelled: Arc::clone(&cancelled),
            };
            (l.clone(), t)
        })
        .collect();
    for from in procs.keys() {
        for to in procs.keys() {
            let (tx, rx) = mpsc::channel();
            transports.get_mut(from).expect("known").outgoing.insert(to.clone(), tx);
            transports.get_mut(to).expect("known").incoming.insert(from.clone(), rx);
        }
    }

    let (done_tx, done_rx) = mpsc::channel();
    for (l, p) in procs {
        let (l, p, reg, done) = (l.clone(), p.clone(), reg.clone(), done_tx.clone());
        let mut transport = transports.remove(&l).expect("one transport per location");
        thread::Builder::new()
            .name(format!("effchor-{l}"))
            .spawn(move || {
                let out = catch_unwind(AssertUnwindSafe(|| execute(&l, &p, &reg, &mut transport)))
                    .unwrap_or_else(|_| Err(RuntimeError::Panicked(l.clone())));
                let _ = done.send((l, out));
            })
            .map_err(|e| RuntimeError::Io(e.to_string()))?;
    }
    drop(done_tx);

    let deadline = Instant::now() + timeout;
    let mut run = NetworkRun { observations: Observations::new(), results: BTreeMap::new() };
    while run.results.len() < procs.len() {
        let left = deadline.saturating_duration_since(Instant::now());
        match done_rx.recv_timeout(left) {
            Ok((l, Ok(p))) => {
                run.observations.record(&l, p.observations);
                run.results.insert(l, p.result);
            }
            Ok((_, Err(e))) => {
                cancelled.store(true, Ordering::Relaxed);
                return Err(e);
            }
            Err(_) => {
                cancelled.store(true, Ordering::Relaxed);
                return Err(RuntimeError::HungRuntime(timeout));
            }
        }
    }
    Ok(run)
}

#[derive(Debug, Clone, Copy)]
pub struct TcpOptions {
    /// Watchdog for the whole run.
    pub timeout: Duration,
    pub connect_attempts: u32,
    pub connect_backoff: Duration,
}

impl Default for TcpOptions {
    fn default() -> Self {
        TcpOptions { timeout: DEFAULT_TIMEOUT, connect_attempts: 5, connect_backoff: Duration::from_millis(200) }
    }
}

/// Messages received so far, one FIFO per sender.
#[derive(Default)]
struct Inbox {
    queues: Mutex<InboxState>,
    arrived: Condvar,
}

#[derive(Default)]
struct InboxState {
    queues: HashMap<Loc, VecDeque<Result<Value, RuntimeError>>>,
    fatal: Option<RuntimeError>,
}

impl Inbox {
    fn push(&self, from: &Loc, item: Result<Value, RuntimeError>) {
        let mut st = self.queues.lock().expect("inbox lock");
        st.queues.entry(from.clone()).or_default().push_back(item);
        self.arrived.notify_all();
    }

    fn fail(&self, e: RuntimeError) {
        let mut st = self.queues.lock().expect("inbox lock");
        st.fatal.get_or_insert(e);
        self.arrived.notify_all();
    }

    fn pop(&self, from: &Loc, deadline: Instant, timeout: Duration) -> Result<Value, RuntimeError> {
        let mut st = self.queues.lock().expect("inbox lock");
        loop {
            if let Some(item) = st.queues.get_mut(from).and_then(VecDeque::pop_front) {
                return item;
            }
            if let Some(e) = &st.fatal {
                return Err(e.clone());
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(RuntimeError::HungRuntime(timeout));
            }
            st = self.arrived.wait_timeout(st, left).expect("inbox lock").0;
        }
    }
}

struct TcpTransport<'a> {
    cfg: &'a DeploymentConfig,
    opts: TcpOptions,
    outgoing: HashMap<Loc, TcpStream>,
    loopback: VecDeque<Value>,
    inbox: Arc<Inbox>,
    deadline: Instant,
}

impl TcpTransport<'_> {
    fn connect(&self, peer: &Loc) -> Result<TcpStream, RuntimeError> {
        let ep = self
            .cfg
            .endpoint(peer)
            .ok_or_else(|| RuntimeError::UnknownPeer { at: self.cfg.me().clone(), peer: peer.clone() })?;
        let mut last = String::new();
        for attempt in 0..self.opts.connect_attempts {
            if attempt > 0 {
                thread::sleep(self.opts.connect_backoff);
            }
            match TcpStream::connect(ep.addr()) {
                Ok(mut s) => {
                    let _ = s.set_nodelay(true);
                    wire::write_value(&mut s, &Value::str(self.cfg.me().as_str()))
                        .map_err(|e| RuntimeError::from_wire(peer.as_str(), e))?;
                    return Ok(s);
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(RuntimeError::ConnectFailed {
            peer: peer.clone(),
            cause: format!("{} after {} attempts: {last}", ep.addr(), self.opts.connect_attempts),
        })
    }

    fn close(&mut self) {
        for (_, mut s) in self.outgoing.drain() {
            let _ = s.flush();
            let _ = s.shutdown(Shutdown::Write);
        }
    }
}

impl Transport for TcpTransport<'_> {
    fn send(&mut self, to: &Loc, v: Value) -> Result<(), RuntimeError> {
        if to == self.cfg.me() {
            self.loopback.push_back(v);
            return Ok(());
        }
        if !self.outgoing.contains_key(to) {
            let s = self.connect(to)?;
            self.outgoing.insert(to.clone(), s);
        }
        let s = self.outgoing.get_mut(to).expect("just connected");
        wire::write_value(s, &v).map_err(|e| RuntimeError::from_wire(to.as_str(), e))
    }

    fn recv(&mut self, from: &Loc) -> Result<Value, RuntimeError> {
        if from == self.cfg.me() {
            // Only this process could fill its own loopback queue.
            return self.loopback.pop_front().ok_or(RuntimeError::HungRuntime(self.opts.timeout));
        }
        if self.cfg.endpoint(from).is_none() {
            return Err(RuntimeError::UnknownPeer { at: self.cfg.me().clone(), peer: from.clone() });
        }
        self.inbox.pop(from, self.deadline, self.opts.timeout)
    }
}

/// Reads the handshake and then every frame of one inbound connection.
fn serve_connection(mut stream: TcpStream, cfg: &DeploymentConfig, inbox: &Inbox) {
    let peer = match wire::read_value(&mut stream) {
        Ok(Some(Value::Str(name))) => match cfg.locations().find(|l| l.as_str() == name && *l != cfg.me()) {
            Some(l) => l.clone(),
            None => return inbox.fail(RuntimeError::HandshakeMismatch(format!("unexpected peer `{name}`"))),
        },
        Ok(Some(other)) => {
            return inbox.fail(RuntimeError::HandshakeMismatch(format!("expected a location name, got {other}")))
        }
        Ok(None) => return,
        Err(e) => return inbox.fail(RuntimeError::HandshakeMismatch(e.to_string())),
    };
    loop {
        match wire::read_value(&mut stream) {
            Ok(Some(v)) => inbox.push(&peer, Ok(v)),
            Ok(None) => return,
            Err(e) => return inbox.push(&peer, Err(RuntimeError::from_wire(peer.as_str(), e))),
        }
    }
}

pub fn run_tcp(p: &Process, cfg: &DeploymentConfig, reg: &PrimitiveRegistry) -> Result<ProcessRun, RuntimeError> {
    run_tcp_with(p, cfg, reg, TcpOptions::default())
}

/// Runs `p` as `cfg.me()`, listening on its configured port and connecting
/// to peers on first send. The first frame on every connection is the
/// sender's location name.
pub fn run_tcp_with(
    p: &Process,
    cfg: &DeploymentConfig,
    reg: &PrimitiveRegistry,
    opts: TcpOptions,
) -> Result<ProcessRun, RuntimeError> {
    let me = cfg.me().clone();
    let addr = cfg.endpoint(&me).expect("config contains self").addr();
    let listener = TcpListener::bind(&addr).map_err(|e| RuntimeError::Io(format!("cannot listen on {addr}: {e}")))?;
    listener.set_nonblocking(true).map_err(|e| RuntimeError::Io(e.to_string()))?;

    let inbox = Arc::new(Inbox::default());
    let stop = Arc::new(AtomicBool::new(false));
    let acceptor = {
        let (inbox, stop, cfg) = (Arc::clone(&inbox), Arc::clone(&stop), cfg.clone());
        thread::spawn(move || {
            let cfg = Arc::new(cfg);
            while !stop.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        if stream.set_nonblocking(false).is_err() {
                            continue;
                        }
                        let (inbox, cfg) = (Arc::clone(&inbox), Arc::clone(&cfg));
                        thread::spawn(move || serve_connection(stream, &cfg, &inbox));
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
                    Err(e) => inbox.fail(RuntimeError::Io(format!("accept failed: {e}"))),
                }
            }
        })
    };

    let mut transport = TcpTransport {
        cfg,
        opts,
        outgoing: HashMap::new(),
        loopback: VecDeque::new(),
        inbox,
        deadline: Instant::now() + opts.timeout,
    };
    let out = execute(&me, p, reg, &mut transport);
    transport.close();
    stop.store(true, Ordering::Relaxed);
    let _ = acceptor.join();
    out
}
