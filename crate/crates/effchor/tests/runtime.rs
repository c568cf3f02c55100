use std::collections::BTreeMap;
use std::io::Write;
use std::net::TcpStream;
use std::thread;
use std::time::{Duration, Instant};

use effchor::config::DeploymentConfig;
use effchor::corpus;
use effchor::parse::load_choreography;
use effchor::runtime::{run_in_memory, run_tcp_with, RuntimeError, TcpOptions};
use effchor::wire;
use effchor_core::checker::explore;
use effchor_core::process::{locally_as, recv, send};
use effchor_core::{project_all, Arity, Limits, Loc, LocalTerm, NetworkState, Observations, PrimitiveRegistry, Process, Term, Value};

fn l(s: &str) -> Loc {
    Loc::new(s)
}

fn hosts(locs: impl IntoIterator<Item = Loc>, base: u16) -> String {
    locs.into_iter().enumerate().map(|(i, l)| format!("{l} 127.0.0.1 {}\n", base + i as u16)).collect()
}

fn opts(timeout_ms: u64) -> TcpOptions {
    TcpOptions { timeout: Duration::from_millis(timeout_ms), ..TcpOptions::default() }
}

/// Runs every location with `run_tcp` on its own thread over loopback.
fn run_tcp_network(
    procs: &BTreeMap<Loc, Process>,
    reg: &PrimitiveRegistry,
    base: u16,
) -> Result<Observations, RuntimeError> {
    let table = hosts(procs.keys().cloned(), base);
    let handles: Vec<_> = procs
        .iter()
        .map(|(loc, p)| {
            let cfg = DeploymentConfig::parse(&table, loc.clone()).unwrap();
            let (p, reg, loc) = (p.clone(), reg.clone(), loc.clone());
            thread::spawn(move || (loc, run_tcp_with(&p, &cfg, &reg, opts(10_000))))
        })
        .collect();
    let mut obs = Observations::new();
    for h in handles {
        let (loc, run) = h.join().expect("role thread");
        obs.record(&loc, run?.observations);
    }
    Ok(obs)
}

#[test]
fn every_example_agrees_across_semantics_and_transports() {
    for (i, ex) in corpus::choreographies().enumerate() {
        let (c, reg) = load_choreography(ex.source).unwrap();
        let procs = project_all(&c, &c.locations()).unwrap();
        let report = explore(&NetworkState::new(procs.clone()), &reg, Limits::default()).unwrap();
        let outcomes = report.outcomes();
        assert_eq!(outcomes.len(), 1, "{}", ex.name);
        let checker = outcomes.into_iter().next().unwrap().clone();

        let memory = run_in_memory(&procs, &reg).unwrap().observations;
        assert_eq!(memory, checker, "{} in memory", ex.name);

        let tcp = run_tcp_network(&procs, &reg, 9300 + 10 * i as u16).unwrap();
        assert_eq!(tcp, checker, "{} over tcp", ex.name);
    }
}

/// `A` sends 0..n to `B`, which shows every value in arrival order.
fn numbered(n: i64) -> BTreeMap<Loc, Process> {
    let sender = (0..n).rev().fold(Term::Leaf(Value::Unit), |rest: Process, i| send(l("B"), Value::Int(i)).then(rest));
    fn receive(left: i64) -> Process {
        if left == 0 {
            return Term::Leaf(Value::Unit);
        }
        recv(l("A"), Arity::Int).bind(move |v| {
            locally_as(LocalTerm::app("show", [LocalTerm::lit(v)]), Arity::Int).then(receive(left - 1))
        })
    }
    BTreeMap::from([(l("A"), sender), (l("B"), receive(n))])
}

#[test]
fn messages_arrive_in_send_order() {
    let procs = numbered(40);
    let reg = PrimitiveRegistry::new();
    let expected: Vec<Value> = (0..40).map(Value::Int).collect();
    let memory = run_in_memory(&procs, &reg).unwrap();
    assert_eq!(memory.observations.get(&l("B")), expected);
    let tcp = run_tcp_network(&procs, &reg, 9360).unwrap();
    assert_eq!(tcp.get(&l("B")), expected);
}

/// Starts `Bob` waiting for one message from `Alice` and returns the
/// outcome after `feed` has talked to Bob's port directly.
fn bob_with_raw_peer(port: u16, feed: impl FnOnce(&mut TcpStream)) -> Result<Value, RuntimeError> {
    let table = format!("Alice 127.0.0.1 {}\nBob 127.0.0.1 {port}\n", port + 1);
    let cfg = DeploymentConfig::parse(&table, l("Bob")).unwrap();
    let bob = thread::spawn(move || {
        run_tcp_with(&recv(l("Alice"), Arity::Int), &cfg, &PrimitiveRegistry::new(), opts(3_000)).map(|r| r.result)
    });
    let start = Instant::now();
    let mut stream = loop {
        match TcpStream::connect(("127.0.0.1", port)) {
            Ok(s) => break s,
            Err(_) if start.elapsed() < Duration::from_secs(3) => thread::sleep(Duration::from_millis(10)),
            Err(e) => panic!("bob never listened: {e}"),
        }
    };
    feed(&mut stream);
    bob.join().unwrap()
}

#[test]
fn well_behaved_raw_peer_is_accepted() {
    let got = bob_with_raw_peer(9370, |s| {
        wire::write_value(s, &Value::str("Alice")).unwrap();
        wire::write_value(s, &Value::Int(7)).unwrap();
    });
    assert_eq!(got, Ok(Value::Int(7)));
}

#[test]
fn unknown_handshake_is_rejected() {
    let got = bob_with_raw_peer(9380, |s| wire::write_value(s, &Value::str("Mallory")).unwrap());
    assert!(matches!(got, Err(RuntimeError::HandshakeMismatch(_))), "{got:?}");
}

#[test]
fn malformed_frames_are_reported() {
    let got = bob_with_raw_peer(9390, |s| {
        wire::write_value(s, &Value::str("Alice")).unwrap();
        s.write_all(&wire::encode_frame(&[0x09]).unwrap()).unwrap();
    });
    assert!(matches!(got, Err(RuntimeError::DecodeError { .. })), "{got:?}");

    let got = bob_with_raw_peer(9400, |s| {
        wire::write_value(s, &Value::str("Alice")).unwrap();
        s.write_all(&((wire::MAX_FRAME + 1) as u32).to_be_bytes()).unwrap();
    });
    assert_eq!(got, Err(RuntimeError::FrameTooLarge(wire::MAX_FRAME + 1)));
}

#[test]
fn unreachable_peer_fails_after_retries() {
    let cfg = DeploymentConfig::parse("Alice 127.0.0.1 9410\nBob 127.0.0.1 9411\n", l("Alice")).unwrap();
    let start = Instant::now();
    let got = run_tcp_with(&send(l("Bob"), Value::Int(1)), &cfg, &PrimitiveRegistry::new(), opts(5_000));
    assert!(matches!(&got, Err(RuntimeError::ConnectFailed { peer, .. }) if *peer == l("Bob")), "{got:?}");
    assert!(start.elapsed() >= Duration::from_millis(800));
}

#[test]
fn silent_peer_trips_the_watchdog() {
    let cfg = DeploymentConfig::parse("Alice 127.0.0.1 9420\nBob 127.0.0.1 9421\n", l("Bob")).unwrap();
    let got = run_tcp_with(&recv(l("Alice"), Arity::Int), &cfg, &PrimitiveRegistry::new(), opts(300));
    assert_eq!(got, Err(RuntimeError::HungRuntime(Duration::from_millis(300))));
}

#[test]
fn local_failures_surface() {
    let p = effchor_core::locally(LocalTerm::app("add", [LocalTerm::lit(1), LocalTerm::lit(true)]));
    let e = run_in_memory(&BTreeMap::from([(l("A"), p)]), &PrimitiveRegistry::new()).unwrap_err();
    assert!(matches!(e, RuntimeError::Local { .. }), "{e:?}");
}
