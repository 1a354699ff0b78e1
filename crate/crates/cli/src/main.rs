use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use hopps::blockwise::{iterate_optimize, BlockwiseConfig, BlockwiseError};
use hopps::circuit::Circuit;
use hopps::coupling::CouplingMap;
use hopps::encoder::Mode;
use hopps::gf2::ParityMatrix;
use hopps::metrics::{CircuitMetrics, Improvement};
use hopps::oracle::{oracle, OracleConfig, OracleError};
use hopps::peephole::{peephole_pass, BlockStatus, PeepholeError, ResynthSettings};
use hopps::phasepoly::{equivalent, extract_rep, PhasePolyRep};
use hopps::qasm;
use hopps::sat::{SolverChoice, DEFAULT_TIMEOUT};
use hopps::synth::{dump_dimacs, hopps, SynthError, SynthesisRequest};

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

/// Hardware-aware phase-polynomial synthesis for {CNOT, Rz} circuits.
#[derive(Parser)]
#[command(name = "hopps", version)]
struct Cli {
    /// One of error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Target {
    /// JSON coupling map file, or one of line:N, ring:N, complete:N, grid:RxC.
    /// Defaults to a complete map over the circuit's qubits.
    #[arg(long)]
    coupling_map: Option<String>,
    #[arg(long, default_value = "cnot")]
    mode: Mode,
    /// Also minimize the other metric.
    #[arg(long)]
    doubly: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the phase-polynomial representation of a QASM circuit.
    Extract {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Synthesize an optimal circuit for a representation.
    Synth {
        rep: PathBuf,
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        kmax: Option<usize>,
        /// Seconds for the whole search (default 600).
        #[arg(long)]
        timeout: Option<f64>,
        /// Write the CNF of the first satisfiable step count here.
        #[arg(long)]
        dimacs_out: Option<PathBuf>,
        /// QASM output file; without it the QASM is embedded in the report.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Resynthesize every maximal {CNOT, Rz} block of a circuit.
    Peephole {
        input: PathBuf,
        #[command(flatten)]
        target: Target,
        /// Seconds per block (default 600).
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Iterative blockwise optimization.
    Blockwise {
        input: PathBuf,
        #[command(flatten)]
        target: Target,
        /// Seconds per block.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long, default_value_t = 3)]
        block_qubits: usize,
        #[arg(long, default_value_t = 20)]
        block_depth: usize,
        #[arg(long, default_value_t = 5)]
        iters_full: usize,
        #[arg(long, default_value_t = 5)]
        iters_sample: usize,
        #[arg(long, default_value_t = 0.5)]
        sample_fraction: f64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-iteration trace; CSV when the name ends in .csv, JSON lines otherwise.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exhaustive search for the minimal CNOT count and depth.
    Oracle {
        rep: PathBuf,
        #[arg(long)]
        coupling_map: Option<String>,
        /// Restrict to one metric; both by default.
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = OracleConfig::default().node_cap)]
        node_cap: usize,
    },
    /// Check that two {CNOT, Rz} circuits are equivalent.
    Verify { left: PathBuf, right: PathBuf },
    /// Report CNOT count and depth, optionally relative to a baseline circuit.
    Metrics {
        input: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait ExitWith<T> {
    fn exit_with(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitWith<T> for Result<T, E> {
    fn exit_with(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .exit_with(EXIT_INVALID)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .exit_with(EXIT_INVALID)
}

fn read_circuit(path: &Path) -> Result<Circuit, Failure> {
    qasm::parse_circuit(&read(path)?)
        .with_context(|| path.display().to_string())
        .exit_with(EXIT_INVALID)
}

fn read_rep(path: &Path) -> Result<PhasePolyRep, Failure> {
    PhasePolyRep::from_json(&read(path)?)
        .with_context(|| path.display().to_string())
        .exit_with(EXIT_INVALID)
}

fn parse_size(s: &str) -> anyhow::Result<usize> {
    s.parse().map_err(|_| anyhow!("bad size `{s}`"))
}

fn coupling_map(spec: Option<&str>, default_n: usize) -> Result<CouplingMap, Failure> {
    let Some(spec) = spec else {
        return Ok(CouplingMap::complete(default_n));
    };
    let builtin = |kind: &str, arg: &str| -> anyhow::Result<CouplingMap> {
        Ok(match kind {
            "line" => CouplingMap::line(parse_size(arg)?),
            "ring" => CouplingMap::ring(parse_size(arg)?),
            "complete" => CouplingMap::complete(parse_size(arg)?),
            "grid" => {
                let (r, c) = arg
                    .split_once('x')
                    .ok_or_else(|| anyhow!("grid size must look like RxC"))?;
                CouplingMap::grid(parse_size(r)?, parse_size(c)?)
            }
            _ => return Err(anyhow!("unknown coupling map kind `{kind}`")),
        })
    };
    if !Path::new(spec).exists() {
        if let Some((kind, arg)) = spec.split_once(':') {
            return builtin(kind, arg).exit_with(EXIT_USAGE);
        }
    }
    CouplingMap::from_json(&read(Path::new(spec))?)
        .with_context(|| spec.to_string())
        .exit_with(EXIT_INVALID)
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>, Failure> {
    s.map(|x| Duration::try_from_secs_f64(x).map_err(|_| anyhow!("bad timeout {x}")))
        .transpose()
        .exit_with(EXIT_USAGE)
}

fn widen(c: &Circuit, n: usize) -> Circuit {
    Circuit::from_gates(n.max(c.num_qubits()), c.gates().to_vec()).expect("widening keeps gates valid")
}

fn metrics_json(m: CircuitMetrics) -> Value {
    json!({ "cnot_count": m.cnot_count, "cnot_depth": m.cnot_depth })
}

fn emit(report: &Value) {
    println!("{}", serde_json::to_string(report).expect("report serializes"));
}

fn emit_circuit(report: &mut Value, circuit: &Circuit, output: Option<&Path>) -> Result<(), Failure> {
    let text = qasm::write(circuit);
    match output {
        Some(path) => write(path, &text),
        None => {
            report["qasm"] = Value::String(text);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract { input, output } => {
            let c = read_circuit(&input)?;
            let rep = extract_rep(&c, &ParityMatrix::identity(c.num_qubits()))
                .with_context(|| input.display().to_string())
                .exit_with(EXIT_INVALID)?;
            let text = rep.to_json_pretty();
            match output {
                Some(path) => write(&path, &(text + "\n"))?,
                None => println!("{text}"),
            }
            eprintln!("{} terms over {} qubits", rep.table.len(), rep.n());
        }

        Command::Synth {
            rep,
            target,
            kmax,
            timeout,
            dimacs_out,
            output,
        } => {
            let rep = read_rep(&rep)?;
            let cm = coupling_map(target.coupling_map.as_deref(), rep.n())?;
            let mut req = SynthesisRequest::new(rep, cm.clone(), target.mode)
                .doubly(target.doubly)
                .solver(SolverChoice::from_env());
            req.k_max = kmax;
            req.timeout = seconds(timeout)?.or(Some(DEFAULT_TIMEOUT));
            req.keep_instance = dimacs_out.is_some();
            let res = hopps(&req).map_err(|e| {
                let code = match e {
                    SynthError::NoSolutionWithinKmax { .. } => EXIT_INFEASIBLE,
                    SynthError::Timeout => EXIT_TIMEOUT,
                    _ => EXIT_INVALID,
                };
                Failure {
                    code,
                    error: e.into(),
                }
            })?;
            if let (Some(path), Some(inst)) = (&dimacs_out, &res.instance) {
                dump_dimacs(inst, path)
                    .with_context(|| format!("cannot write {}", path.display()))
                    .exit_with(EXIT_INVALID)?;
            }
            let mut report = json!({
                "cnot_count": res.cnot_count,
                "cnot_depth": res.cnot_depth,
                "solve_time_s": res.stats.total_seconds,
                "optimal": res.optimal,
            });
            emit_circuit(&mut report, &widen(&res.circuit, cm.num_qubits()), output.as_deref())?;
            emit(&report);
            eprintln!(
                "{} CNOTs, depth {}{} in {:.3}s",
                res.cnot_count,
                res.cnot_depth,
                if res.optimal { "" } else { " (not proven optimal)" },
                res.stats.total_seconds
            );
        }

        Command::Peephole {
            input,
            target,
            timeout,
            jobs,
            output,
        } => {
            let c = read_circuit(&input)?;
            let cm = coupling_map(target.coupling_map.as_deref(), c.num_qubits())?;
            let settings = ResynthSettings {
                mode: target.mode,
                doubly: target.doubly,
                timeout: seconds(timeout)?.or(Some(DEFAULT_TIMEOUT)),
                solver: SolverChoice::from_env(),
            };
            let jobs = jobs.unwrap_or_else(hopps::parallel::default_jobs);
            let report = peephole_pass(&c, &cm, &settings, jobs).map_err(|e| Failure {
                code: match e {
                    PeepholeError::Topology | PeepholeError::Circuit(_) => EXIT_INVALID,
                },
                error: e.into(),
            })?;
            let skipped = report
                .outcomes
                .iter()
                .filter(|o| !matches!(o.status, BlockStatus::Improved | BlockStatus::Unchanged | BlockStatus::NoCnots))
                .count();
            let before = CircuitMetrics::of(&c);
            let after = CircuitMetrics::of(&report.circuit);
            let mut out = json!({
                "before": metrics_json(before),
                "after": metrics_json(after),
                "blocks": report.outcomes.len(),
                "improved": report.improved(),
                "skipped": skipped,
                "rounds": report.rounds,
            });
            emit_circuit(&mut out, &report.circuit, output.as_deref())?;
            emit(&out);
            eprintln!(
                "{} blocks, {} improved: {} -> {} CNOTs, depth {} -> {}",
                report.outcomes.len(),
                report.improved(),
                before.cnot_count,
                after.cnot_count,
                before.cnot_depth,
                after.cnot_depth
            );
        }

        Command::Blockwise {
            input,
            target,
            timeout,
            block_qubits,
            block_depth,
            iters_full,
            iters_sample,
            sample_fraction,
            jobs,
            seed,
            trace_out,
            output,
        } => {
            let c = read_circuit(&input)?;
            let cm = coupling_map(target.coupling_map.as_deref(), c.num_qubits())?;
            let cfg = BlockwiseConfig {
                max_block_qubits: block_qubits,
                max_block_depth: block_depth,
                iters_full,
                iters_sample,
                sample_fraction,
                seed,
                jobs: jobs.unwrap_or_else(hopps::parallel::default_jobs),
                per_block_timeout: seconds(Some(timeout))?,
                mode: target.mode,
                doubly: target.doubly,
                solver: SolverChoice::from_env(),
                ..BlockwiseConfig::default()
            };
            let (out, trace) = iterate_optimize(&c, &cm, &cfg).map_err(|e| Failure {
                code: match e {
                    BlockwiseError::Config(_) => EXIT_USAGE,
                    _ => EXIT_INVALID,
                },
                error: e.into(),
            })?;
            if let Some(path) = &trace_out {
                let csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
                write(path, &if csv { trace.to_csv() } else { trace.to_jsonl() })?;
            }
            let mut report = json!({
                "before": metrics_json(trace.initial),
                "after": metrics_json(CircuitMetrics::of(&out)),
                "iterations": trace.records.len(),
            });
            emit_circuit(&mut report, &out, output.as_deref())?;
            emit(&report);
            eprintln!(
                "{} iterations: {} -> {} CNOTs",
                trace.records.len(),
                trace.initial.cnot_count,
                out.cnot_count()
            );
        }

        Command::Oracle {
            rep,
            coupling_map: spec,
            mode,
            node_cap,
        } => {
            let rep = read_rep(&rep)?;
            let cm = coupling_map(spec.as_deref(), rep.n())?;
            let cfg = OracleConfig {
                node_cap,
                ..OracleConfig::default()
            };
            let modes = match mode {
                Some(m) => vec![m],
                None => vec![Mode::Cnot, Mode::Depth],
            };
            let mut report = json!({});
            for m in modes {
                let res = oracle(&rep, &cm, m, &cfg).map_err(|e| Failure {
                    code: match e {
                        OracleError::Unreachable => EXIT_INFEASIBLE,
                        OracleError::NodeCap(_) | OracleError::PathCap(_) => EXIT_TIMEOUT,
                        _ => EXIT_INVALID,
                    },
                    error: e.into(),
                })?;
                report[m.to_string()] = json!({
                    "optimum": res.optimum,
                    "solutions": res.schedules.len(),
                    "min_count": res.min_count(),
                    "min_depth": res.min_depth(rep.n()),
                });
            }
            emit(&report);
        }

        Command::Verify { left, right } => {
            let a = read_circuit(&left)?;
            let b = read_circuit(&right)?;
            let n = a.num_qubits().max(b.num_qubits());
            let same = equivalent(&widen(&a, n), &widen(&b, n), &ParityMatrix::identity(n))
                .exit_with(EXIT_INVALID)?;
            emit(&json!({ "equivalent": same }));
            if !same {
                return Err(Failure {
                    code: EXIT_INVALID,
                    error: anyhow!("circuits are not equivalent"),
                });
            }
        }

        Command::Metrics { input, baseline } => {
            let ours = CircuitMetrics::of(&read_circuit(&input)?);
            let report = match baseline {
                None => metrics_json(ours),
                Some(path) => {
                    let base = CircuitMetrics::of(&read_circuit(&path)?);
                    let mut r = metrics_json(ours);
                    r["baseline"] = metrics_json(base);
                    r["improvement"] = serde_json::to_value(Improvement::between(base, ours))
                        .expect("improvement serializes");
                    r
                }
            };
            emit(&report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    let start = Instant::now();
    match run(cli) {
        Ok(()) => {
            log::debug!("done in {:.3}s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
