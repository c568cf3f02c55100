//! The `effchor` command line: project, check and run choreography files.
//!
//! Exit codes: 0 success or verdict true, 1 verdict false or a failed run,
//! 2 inconclusive check or unreadable input, 64 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use effchor_core::checker::{describe, explore, run_first, CheckError, ExplorationReport, ExploreError, StuckState};
use effchor_core::{check_soundness_completeness, epp, project_all, Limits, Loc, NetworkState, Value};

use crate::config::DeploymentConfig;
use crate::corpus;
use crate::parse::{load_choreography, parse_raw_network, ParseError};
use crate::runtime::{run_in_memory_with, run_tcp_with, TcpOptions, DEFAULT_TIMEOUT};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FALSE: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

/// Bound on the concrete run used to print projected traces.
const PROJECT_STEPS: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "effchor", version, about = "Project, check and run choreographies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the operations one role performs, with the values of a run.
    Project {
        /// A choreography file, or the name of a bundled example.
        file: String,
        #[arg(long)]
        role: String,
    },
    /// Explore every interleaving of the projected network and compare the
    /// outcomes with the choreography.
    Check {
        file: String,
        /// Treat the file as a hand-written network of processes and only
        /// check it for deadlocks.
        #[arg(long)]
        raw_network: bool,
        #[arg(long, default_value_t = Limits::default().max_states)]
        max_states: usize,
        #[arg(long, default_value_t = Limits::default().max_depth)]
        max_depth: usize,
    },
    /// Execute the projected network and print what each location showed.
    Run {
        file: String,
        #[arg(long, value_enum, default_value_t = Mode::Memory)]
        mode: Mode,
        /// The location to run (tcp mode).
        #[arg(long, required_if_eq("mode", "tcp"))]
        role: Option<String>,
        /// Host table with `<loc> <host> <port>` lines (tcp mode).
        #[arg(long, required_if_eq("mode", "tcp"))]
        config: Option<String>,
        #[arg(long)]
        raw_network: bool,
        /// Give up on a run that has not finished after this long.
        #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_millis() as u64)]
        timeout_ms: u64,
    },
    /// List the bundled example files.
    ListExamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// All locations as threads of this process.
    Memory,
    /// One location per process, over TCP.
    Tcp,
}

/// Runs the command line with explicit output streams and returns the exit
/// code.
pub fn main_with(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    let mut ctx = Ctx { out, err };
    let result = match cli.command {
        Command::Project { file, role } => ctx.project(&file, &role),
        Command::Check { file, raw_network, max_states, max_depth } => {
            ctx.check(&file, raw_network, Limits { max_states, max_depth })
        }
        Command::Run { file, mode, role, config, raw_network, timeout_ms } => {
            ctx.run(&file, mode, role, config, raw_network, Duration::from_millis(timeout_ms))
        }
        Command::ListExamples => ctx.list(),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            let _ = writeln!(ctx.err, "error: {message}");
            code
        }
    }
}

struct Failure(u8, String);

type Outcome = Result<u8, Failure>;

fn parse_failure(file: &str, e: ParseError) -> Failure {
    Failure(EXIT_INCONCLUSIVE, format!("{file}: {e}"))
}

/// Reads `name` from disk, falling back to the bundled examples.
fn read_source(name: &str) -> Result<String, Failure> {
    match std::fs::read_to_string(name) {
        Ok(s) => Ok(s),
        Err(e) => {
            let file_name = Path::new(name).file_name().and_then(|n| n.to_str()).unwrap_or(name);
            match corpus::find(name).or_else(|| corpus::find(file_name)) {
                Some(ex) if !PathBuf::from(name).exists() => Ok(ex.source.to_string()),
                _ => Err(Failure(EXIT_INCONCLUSIVE, format!("cannot read {name}: {e}"))),
            }
        }
    }
}

fn show_values(vs: &[Value]) -> String {
    let items: Vec<String> = vs.iter().map(Value::to_string).collect();
    format!("[{}]", items.join(", "))
}

struct Ctx<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn project(&mut self, file: &str, role: &str) -> Outcome {
        let (c, reg) = load_choreography(&read_source(file)?).map_err(|e| parse_failure(file, e))?;
        let role = Loc::try_new(role).map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
        let locs = c.locations();
        if !locs.contains(&role) {
            let _ = writeln!(self.err, "note: {role} does not take part in {file}; its projection is empty");
            return Ok(EXIT_OK);
        }
        let procs = project_all(&c, &locs).map_err(|e| Failure(EXIT_FALSE, e.to_string()))?;
        let (_, ops) = run_first(&NetworkState::new(procs), &reg, PROJECT_STEPS)
            .map_err(|e| Failure(EXIT_FALSE, format!("the projected network does not run to completion: {e}")))?;
        for op in &ops[&role] {
            let _ = writeln!(self.out, "{op}");
        }
        Ok(EXIT_OK)
    }

    fn check(&mut self, file: &str, raw: bool, limits: Limits) -> Outcome {
        let src = read_source(file)?;
        if raw {
            let net = parse_raw_network(&src).map_err(|e| parse_failure(file, e))?;
            let report = match explore(&NetworkState::new(net.processes), &net.registry, limits) {
                Ok(r) => r,
                Err(e) => return self.explore_failed(e),
            };
            let holds = report.deadlock_free() && !report.terminals.is_empty();
            let _ = writeln!(self.out, "verdict: {holds}");
            let _ = writeln!(self.out, "states: {}", report.states);
            let _ = writeln!(self.out, "terminal outcomes: {}", report.outcomes().len());
            let _ = writeln!(self.out, "stuck states: {}", report.stuck.len());
            for o in report.outcomes() {
                let _ = write!(self.out, "{o}");
            }
            self.witness(&report);
            return Ok(if holds { EXIT_OK } else { EXIT_FALSE });
        }
        let (c, reg) = load_choreography(&src).map_err(|e| parse_failure(file, e))?;
        match check_soundness_completeness(&c, &reg, limits) {
            Ok(v) => {
                let _ = writeln!(self.out, "{}", describe(&v).trim_end());
                if !v.agreement {
                    for t in v.report.terminals.iter().filter(|t| t.observations != v.choreography.observations) {
                        let _ = writeln!(self.out, "disagreeing outcome:\n{}", t.observations);
                    }
                }
                self.witness(&v.report);
                Ok(if v.holds() { EXIT_OK } else { EXIT_FALSE })
            }
            Err(CheckError::Explore(e)) => self.explore_failed(e),
            Err(CheckError::Choreo(e)) => {
                Err(Failure(EXIT_INCONCLUSIVE, format!("the choreography itself does not evaluate: {e}")))
            }
        }
    }

    fn explore_failed(&mut self, e: ExploreError) -> Outcome {
        match e {
            ExploreError::LimitExceeded { .. } => {
                let _ = writeln!(self.out, "verdict: inconclusive ({e})");
                Ok(EXIT_INCONCLUSIVE)
            }
            ExploreError::InvalidLimits => Err(Failure(EXIT_USAGE, e.to_string())),
        }
    }

    /// Prints the shortest trace to a stuck state, if there is one.
    fn witness(&mut self, report: &ExplorationReport) {
        let Some(StuckState { cause, trace }) = report.stuck.iter().min_by_key(|s| s.trace.len()) else {
            return;
        };
        let _ = writeln!(self.out, "witness: {cause}");
        if trace.is_empty() {
            let _ = writeln!(self.out, "  (initial state)");
        }
        for step in trace {
            let _ = writeln!(self.out, "  {step}");
        }
    }

    fn run(
        &mut self,
        file: &str,
        mode: Mode,
        role: Option<String>,
        config: Option<String>,
        raw: bool,
        timeout: Duration,
    ) -> Outcome {
        let src = read_source(file)?;
        let (procs, reg) = if raw {
            let net = parse_raw_network(&src).map_err(|e| parse_failure(file, e))?;
            (net.processes, net.registry)
        } else {
            let (c, reg) = load_choreography(&src).map_err(|e| parse_failure(file, e))?;
            let procs = project_all(&c, &c.locations()).map_err(|e| Failure(EXIT_FALSE, e.to_string()))?;
            (procs, reg)
        };
        match mode {
            Mode::Memory => {
                let run = run_in_memory_with(&procs, &reg, timeout).map_err(|e| Failure(EXIT_FALSE, e.to_string()))?;
                let _ = write!(self.out, "{}", run.observations);
                Ok(EXIT_OK)
            }
            Mode::Tcp => {
                let (Some(role), Some(config)) = (role, config) else {
                    return Err(Failure(EXIT_USAGE, "--mode tcp needs --role and --config".into()));
                };
                let role = Loc::try_new(role).map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
                let cfg = DeploymentConfig::parse(&read_source(&config)?, role.clone())
                    .map_err(|e| Failure(EXIT_INCONCLUSIVE, format!("{config}: {e}")))?;
                let p = match procs.get(&role) {
                    Some(p) => p.clone(),
                    None if raw => return Err(Failure(EXIT_USAGE, format!("no role {role} in {file}"))),
                    None => {
                        let (c, _) = load_choreography(&src).map_err(|e| parse_failure(file, e))?;
                        epp(&c, &role)
                    }
                };
                let opts = TcpOptions { timeout, ..TcpOptions::default() };
                let run = run_tcp_with(&p, &cfg, &reg, opts).map_err(|e| Failure(EXIT_FALSE, e.to_string()))?;
                let _ = writeln!(self.out, "{role}: {}", show_values(&run.observations));
                Ok(EXIT_OK)
            }
        }
    }

    fn list(&mut self) -> Outcome {
        for ex in corpus::EXAMPLES {
            let _ = writeln!(self.out, "{:<16}{}", ex.name, ex.summary());
        }
        Ok(EXIT_OK)
    }
}
