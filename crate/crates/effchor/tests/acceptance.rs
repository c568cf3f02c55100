//! The acceptance gate: runs every criterion, prints one PASS/FAIL line per
//! criterion, and exits non-zero if any fails.

mod common;

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use effchor::config::DeploymentConfig;
use effchor::parse::load_choreography;
use effchor::runtime::{run_in_memory, run_tcp};
use effchor::wire::{decode_value, encode_frame, encode_value, read_value};
use effchor::{cli, corpus};
use effchor_core::checker::{check_soundness_completeness, explore};
use effchor_core::effects::probe;
use effchor_core::gen::{gen_program, gen_term_shape, GenParams};
use effchor_core::local::{eval_observed, Env};
use effchor_core::{
    absent_reads, choreo_eval, epp, probe_equivalent, project_all, pure, Arity, Choreo, Limits, Loc, LocalTerm,
    NetworkState, Observations, PrimitiveRegistry, ProcessOp, Program, Term, Value,
};
use proptest::test_runner::{Config, TestRunner};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Projects `file` at `role` through the command line front end.
fn project_cli(file: &str, role: &str) -> Result<String, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::main_with(["effchor", "project", file, "--role", role], &mut out, &mut err);
    ensure(code == 0, || format!("project {role} exited {code}: {}", String::from_utf8_lossy(&err)))?;
    Ok(String::from_utf8(out).expect("utf-8 output"))
}

/// The shape of a trace as the three-listing example writes it: a local
/// step that only computes a message is folded into its `send`.
fn listing_shape(trace: &str) -> Vec<String> {
    let lines: Vec<&str> = trace.lines().collect();
    let mut shape = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let words: Vec<&str> = lines[i].split_whitespace().collect();
        let next_is_send = lines.get(i + 1).is_some_and(|l| l.starts_with("send "));
        match words[0] {
            "locally" if next_is_send => {}
            "locally" => shape.push("locally".to_string()),
            op => shape.push(format!("{op} {}", words[1])),
        }
        i += 1;
    }
    shape
}

fn criterion_1() -> Check {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let file = manifest.join("corpus/pipeline.chor").display().to_string();
    let expected_shapes: [(&str, &[&str]); 3] = [
        ("Alice", &["locally", "send Bob", "recv Carol", "locally"]),
        ("Bob", &["recv Alice", "send Carol"]),
        ("Carol", &["recv Bob", "send Alice"]),
    ];
    for (role, shape) in expected_shapes {
        let got = project_cli(&file, role)?;
        let golden = std::fs::read_to_string(manifest.join(format!("tests/golden/pipeline.{role}.txt")))
            .map_err(|e| e.to_string())?;
        ensure(got == golden, || format!("{role}: output differs from golden:\n{got}"))?;
        let s = listing_shape(&got);
        ensure(s == shape, || format!("{role}: shape {s:?}, expected {shape:?}"))?;
    }
    Ok("Alice, Bob and Carol match the checked-in goldens and the three listings".into())
}

fn criterion_2() -> Check {
    let single = |target: &str, s: &str, r: &str| -> Vec<ProcessOp> {
        let (sl, rl) = (Loc::new(s), Loc::new(r));
        let c = Choreo::new(move |at| at.comm_as(&sl, &rl, at.located(&sl, LocalTerm::lit(7)), Arity::Int));
        probe(&epp(&c, &Loc::new(target)), &[Value::Int(7), Value::Unit]).expect("well-typed script").trace
    };
    let computed = ProcessOp::Locally { term: LocalTerm::lit(7), ty: Arity::Int };
    let cells: [(&str, &str, &str, &str, Vec<ProcessOp>); 5] = [
        ("l=s, l=r", "A", "A", "A", vec![computed.clone()]),
        ("l=s, l≠r", "A", "A", "B", vec![computed.clone(), ProcessOp::Send { to: Loc::new("B"), payload: Value::Int(7) }]),
        ("l≠s, l=r", "B", "A", "B", vec![ProcessOp::Recv { from: Loc::new("A"), expected: Arity::Int }]),
        ("l≠s, l≠r", "C", "A", "B", vec![]),
        ("l≠s, l≠r (local step)", "C", "A", "A", vec![]),
    ];
    for (name, target, s, r, want) in cells {
        let got = single(target, s, r);
        ensure(got == want, || format!("{name}: got {got:?}, want {want:?}"))?;
    }
    // The continuation receives the right value in every cell.
    let (a, b) = (Loc::new("A"), Loc::new("B"));
    let c = Choreo::new(move |at| {
        let b2 = b.clone();
        let at2 = at.clone();
        at.comm_as(&a, &b, at.located(&a, LocalTerm::lit(7)), Arity::Int)
            .bind(move |v| at2.local_at(&b2, at2.receive(&b2, v).map(LocalTerm::lit)))
    });
    let bob = probe(&epp(&c, &Loc::new("B")), &[Value::Int(7), Value::Int(7)]).map_err(|e| format!("{e:?}"))?;
    let received = matches!(bob.trace.get(1), Some(ProcessOp::Locally { term, .. }) if *term == LocalTerm::lit(7));
    ensure(received, || format!("receiver continuation: {:?}", bob.trace))?;
    Ok("all four cells emit exactly their branch".into())
}

fn criterion_3() -> Check {
    const TERMS: u64 = 500;
    for seed in 0..TERMS {
        let shape = gen_term_shape(seed, 4);
        ensure(shape.depth() <= 4, || format!("seed {seed}: depth {}", shape.depth()))?;
        let t = shape.realize(Arc::new(Vec::new()));
        let f = Arc::new(gen_term_shape(seed ^ 0x5eed_0001, 4).realize_fn());
        let g = Arc::new(gen_term_shape(seed ^ 0x5eed_0002, 2).realize_fn());
        let h = Arc::new(gen_term_shape(seed ^ 0x5eed_0003, 2).realize_fn());
        let a = (seed % 4) as i64;

        let f1 = Arc::clone(&f);
        let left = pure(a).bind(move |x| f1(x));
        probe_equivalent(&left, &f(Value::Int(a)), usize::MAX)
            .map_err(|d| format!("left identity, seed {seed}: {d:?}"))?;

        probe_equivalent(&t.clone().bind(Term::Leaf), &t, usize::MAX)
            .map_err(|d| format!("right identity, seed {seed}: {d:?}"))?;

        let (g1, h1, g2, h2) = (Arc::clone(&g), Arc::clone(&h), Arc::clone(&g), Arc::clone(&h));
        let lhs = t.clone().bind(move |x| g1(x)).bind(move |y| h1(y));
        let rhs = t.bind(move |x| {
            let h = Arc::clone(&h2);
            g2(x).bind(move |y| h(y))
        });
        probe_equivalent(&lhs, &rhs, usize::MAX).map_err(|d| format!("associativity, seed {seed}: {d:?}"))?;
    }
    Ok(format!("{TERMS} terms, three laws each, all response scripts over {{0..3}}"))
}

/// Per generated choreography: terminal enqueue/dequeue counts and the
/// number of cross-location statements in its source program.
struct Conservation {
    seed: u64,
    cross: usize,
    terminals: Vec<(usize, usize)>,
}

/// Straight-line reference evaluation of a program: each statement runs its
/// expression at the sender with earlier results substituted, and whatever
/// it shows is observed at the sender.
fn reference_observations(program: &Program, reg: &PrimitiveRegistry) -> Result<Observations, String> {
    let mut env: BTreeMap<String, Value> = BTreeMap::new();
    let mut shown: BTreeMap<Loc, Vec<Value>> = BTreeMap::new();
    for st in &program.statements {
        let mut e = Env::at(st.sender.clone());
        for x in st.expr.free_vars() {
            e = e.bind(x.clone(), env.get(&x).cloned().ok_or(format!("unbound {x}"))?);
        }
        let (v, log) = eval_observed(&st.expr, &e, reg).map_err(|e| e.to_string())?;
        shown.entry(st.sender.clone()).or_default().extend(log);
        if let Some(x) = &st.bind {
            env.insert(x.clone(), v);
        }
    }
    let mut obs = Observations::new();
    for (l, vs) in shown {
        obs.record(&l, vs);
    }
    Ok(obs)
}

fn criterion_4(conservation: &mut Vec<Conservation>) -> Check {
    let reg = PrimitiveRegistry::new();
    let mut states = 0;
    for seed in 0..200u64 {
        let program = gen_program(seed, GenParams { num_locs: 4, depth: 6 });
        ensure(program.statements.len() <= 6, || format!("seed {seed}: too deep"))?;
        let c = program.elaborate(&reg).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(c.locations().len() <= 4, || format!("seed {seed}: too many locations"))?;
        let v = check_soundness_completeness(&c, &reg, Limits::default()).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(v.report.stuck.is_empty(), || format!("seed {seed}: stuck {:?}", v.report.stuck))?;
        let outcomes = v.report.outcomes();
        ensure(outcomes.len() == 1, || format!("seed {seed}: {} terminal outcomes", outcomes.len()))?;
        let expected = choreo_eval(&c, &reg).map_err(|e| format!("seed {seed}: {e}"))?;
        let reference = reference_observations(&program, &reg).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(expected.observations == reference, || format!("seed {seed}: choreography disagrees with reference"))?;
        ensure(outcomes.into_iter().next() == Some(&reference), || {
            format!("seed {seed}: network disagrees with the choreography")
        })?;
        ensure(v.holds(), || format!("seed {seed}: verdict false"))?;
        states += v.states;
        conservation.push(Conservation {
            seed,
            cross: program.statements.iter().filter(|s| s.sender != s.receiver).count(),
            terminals: v.report.terminals.iter().map(|t| (t.enqueued, t.dequeued)).collect(),
        });
    }
    Ok(format!("200 choreographies, {states} states explored, no stuck states, one outcome each"))
}

fn criterion_5(start: usize) -> Check {
    let reads = absent_reads() - start;
    ensure(reads == 0, || format!("{reads} reads of absent located values"))?;
    Ok("no absent located value was read".into())
}

fn criterion_6(conservation: &[Conservation]) -> Check {
    ensure(conservation.len() == 200, || format!("only {} runs recorded", conservation.len()))?;
    let mut total = 0;
    for c in conservation {
        for &(enq, deq) in &c.terminals {
            ensure(enq == c.cross && deq == c.cross, || {
                format!("seed {}: enqueued {enq}, dequeued {deq}, {} cross-location comms", c.seed, c.cross)
            })?;
        }
        total += c.cross;
    }
    Ok(format!("every terminal has empty buffers and enqueues = dequeues = comms ({total} comms in total)"))
}

fn criterion_7(tcp_time: &mut Duration) -> Check {
    for ex in corpus::choreographies() {
        let (c, reg) = load_choreography(ex.source).map_err(|e| format!("{}: {e}", ex.name))?;
        let procs = project_all(&c, &c.locations()).map_err(|e| e.to_string())?;
        let report = explore(&NetworkState::new(procs.clone()), &reg, Limits::default()).map_err(|e| e.to_string())?;
        let checker: Vec<&Observations> = report.outcomes().into_iter().collect();
        let memory = run_in_memory(&procs, &reg).map_err(|e| format!("{}: {e}", ex.name))?;
        ensure(checker == [&memory.observations], || format!("{}: memory {:?} vs checker {checker:?}", ex.name, memory.observations))?;
    }

    let (c, reg) = load_choreography(corpus::find("pipeline").expect("bundled").source).map_err(|e| e.to_string())?;
    let memory = run_in_memory(&project_all(&c, &c.locations()).map_err(|e| e.to_string())?, &reg)
        .map_err(|e| e.to_string())?
        .observations;
    let hosts = "Alice 127.0.0.1 9001\nBob 127.0.0.1 9002\nCarol 127.0.0.1 9003\n";
    let started = Instant::now();
    let roles: Vec<_> = ["Alice", "Bob", "Carol"]
        .into_iter()
        .map(|r| {
            let loc = Loc::new(r);
            let cfg = DeploymentConfig::parse(hosts, loc.clone()).expect("valid hosts");
            let (p, reg) = (epp(&c, &loc), reg.clone());
            thread::spawn(move || (loc, run_tcp(&p, &cfg, &reg)))
        })
        .collect();
    let mut tcp = Observations::new();
    for h in roles {
        let (loc, run) = h.join().map_err(|_| "role thread panicked".to_string())?;
        tcp.record(&loc, run.map_err(|e| format!("{loc}: {e}"))?.observations);
    }
    *tcp_time = started.elapsed();
    ensure(tcp == memory, || format!("tcp {tcp:?} vs memory {memory:?}"))?;
    let alice = tcp.get(&Loc::new("Alice"));
    ensure(alice == [Value::Int(83)], || format!("Alice observed {alice:?}"))?;
    Ok(format!(
        "{} examples agree in memory and in the checker; pipeline over TCP gives Alice: [83] in {:.2}s",
        corpus::choreographies().count(),
        tcp_time.as_secs_f64()
    ))
}

fn criterion_8() -> Check {
    let frame = encode_frame(&encode_value(&Value::Int(5))).map_err(|e| e.to_string())?;
    let golden = [0x00, 0x00, 0x00, 0x09, 0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x05];
    ensure(frame == golden, || format!("encode(Int 5) frame is {frame:02x?}"))?;
    let mut runner = TestRunner::new(Config { cases: 500, failure_persistence: None, ..Config::default() });
    let seen = RefCell::new(BTreeMap::new());
    let count = Cell::new(0usize);
    runner
        .run(&common::value_strategy(4), |v| {
            count.set(count.get() + 1);
            let bytes = encode_value(&v);
            assert_eq!(decode_value(&bytes), Ok(v.clone()));
            assert_eq!(read_value(&mut &encode_frame(&bytes).unwrap()[..]).unwrap(), Some(v.clone()));
            if let Some(prev) = seen.borrow_mut().insert(bytes, v.clone()) {
                assert_eq!(prev, v, "two values share an encoding");
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let count = count.get();
    ensure(count >= 500, || format!("only {count} values generated"))?;
    Ok(format!("golden frame bytes match; {count} generated values round-trip"))
}

fn run(n: usize, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let started = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let elapsed = started.elapsed();
    let (ok, detail) = match (result, limit) {
        (Ok(_), Some(limit)) if elapsed > limit => (false, format!("took {:.2}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64())),
        (Ok(d), _) => (true, d),
        (Err(e), _) => (false, e),
    };
    let bound = limit.map_or(String::new(), |l| format!(", limit {:.0}s", l.as_secs_f64()));
    println!(
        "criterion {n}: {} ({:.3}s{bound}) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn main() {
    let start_reads = absent_reads();
    let mut conservation = Vec::new();
    let mut tcp_time = Duration::ZERO;
    let secs = Duration::from_secs;
    let results = [
        run(1, Some(secs(1)), criterion_1),
        run(2, Some(secs(1)), criterion_2),
        run(3, Some(secs(30)), criterion_3),
        run(4, Some(secs(60)), || criterion_4(&mut conservation)),
        run(7, None, || {
            let r = criterion_7(&mut tcp_time)?;
            ensure(tcp_time < secs(10), || format!("TCP leg took {:.2}s, limit 10s", tcp_time.as_secs_f64()))?;
            Ok(r)
        }),
        run(6, None, || criterion_6(&conservation)),
        run(8, None, criterion_8),
        // Last, so it covers every suite above.
        run(5, None, || criterion_5(start_reads)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
