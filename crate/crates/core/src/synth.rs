//! Incremental search for optimal and doubly-optimal circuits.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::coupling::CouplingMap;
use crate::encoder::{encode, EncodeError, Encoding, EncodingConfig, Mode};
use crate::gf2::ParityMatrix;
use crate::phasepoly::{ParityTable, PhasePolyRep};
use crate::sat::{SatBackend, SatError, SatInstance, SatModel, SolveOutcome, SolverChoice};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("no circuit with at most {k_max} steps")]
    NoSolutionWithinKmax { k_max: usize },
    #[error("time budget exhausted before any solution was found")]
    Timeout,
    #[error("representation has {rep} qubits but the coupling map only {map}")]
    TooManyQubits { rep: usize, map: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("replayed parity disagrees with the model after step {step}")]
    Inconsistent { step: usize },
    #[error("term {0} never appears as a row")]
    UnmatchedTerm(usize),
}

#[derive(Debug, Clone)]
pub struct SynthesisRequest {
    pub rep: PhasePolyRep,
    pub cm: CouplingMap,
    pub mode: Mode,
    pub doubly: bool,
    /// Largest step count tried; defaults to [`default_k_max`].
    pub k_max: Option<usize>,
    /// Wall-clock budget for the whole call.
    pub timeout: Option<Duration>,
    pub solver: SolverChoice,
    /// Keep a copy of the first satisfiable instance in the result.
    pub keep_instance: bool,
}

impl SynthesisRequest {
    pub fn new(rep: PhasePolyRep, cm: CouplingMap, mode: Mode) -> Self {
        SynthesisRequest {
            rep,
            cm,
            mode,
            doubly: false,
            k_max: None,
            timeout: None,
            solver: SolverChoice::Internal,
            keep_instance: false,
        }
    }

    pub fn doubly(mut self, doubly: bool) -> Self {
        self.doubly = doubly;
        self
    }

    pub fn k_max(mut self, k_max: usize) -> Self {
        self.k_max = Some(k_max);
        self
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }

    pub fn solver(mut self, solver: SolverChoice) -> Self {
        self.solver = solver;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchPhase {
    Primary,
    Secondary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Sat,
    Unsat,
    Timeout,
}

/// One solver call: the step count (primary phase) or the depth/count bound
/// (secondary phase) it was made with.
#[derive(Debug, Clone, Serialize)]
pub struct SolveRecord {
    pub phase: SearchPhase,
    pub bound: usize,
    pub status: SolveStatus,
    pub seconds: f64,
    pub num_vars: u32,
    pub num_clauses: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolverStats {
    pub records: Vec<SolveRecord>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub circuit: Circuit,
    pub cnot_count: usize,
    pub cnot_depth: usize,
    /// False when the time budget cut the secondary descent short.
    pub optimal: bool,
    /// Layer of each CNOT in emission order, when the model carries one.
    pub layers: Option<Vec<usize>>,
    pub stats: SolverStats,
    pub instance: Option<SatInstance>,
}

/// Circuit decoded from a model, with its step structure.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub circuit: Circuit,
    pub steps: Vec<Vec<(usize, usize)>>,
    pub layers: Option<Vec<usize>>,
}

/// Minimum step count any solution needs.
pub fn lower_bound(rep: &PhasePolyRep, mode: Mode) -> usize {
    let rows = rep.initial.rows();
    let table = rep.table.merged();
    let missing = table.terms().iter().filter(|t| !rows.contains(t)).count();
    match mode {
        Mode::Cnot => missing,
        Mode::Depth => usize::from(missing > 0 || rep.initial != rep.final_parity),
    }
}

pub fn default_k_max(n: usize, num_terms: usize) -> usize {
    2 * n * n + num_terms * n
}

/// Builds the circuit for a CNOT schedule: each step's gates in order, and
/// one Rz per term right after the first slice where some row equals it
/// (earliest slice, then lowest qubit).
pub fn assemble(
    initial: &ParityMatrix,
    steps: &[Vec<(usize, usize)>],
    table: &ParityTable,
) -> Result<Circuit, DecodeError> {
    let n = initial.n();
    let mut placed = vec![false; table.len()];
    let mut gates = Vec::new();
    let mut parity = initial.clone();
    for k in 0..=steps.len() {
        if k > 0 {
            for &(c, t) in &steps[k - 1] {
                parity.cnot_unchecked(c, t);
                gates.push(Gate::cnot(c, t));
            }
        }
        for (ti, (term, angle)) in table.iter().enumerate() {
            if placed[ti] {
                continue;
            }
            if let Some(q) = parity.rows().iter().position(|r| r == term) {
                gates.push(Gate::rz(angle.clone(), q));
                placed[ti] = true;
            }
        }
    }
    if let Some(ti) = placed.iter().position(|p| !p) {
        return Err(DecodeError::UnmatchedTerm(ti));
    }
    Ok(Circuit::from_gates(n, gates).expect("gates stay within the register"))
}

/// Reads the CNOT schedule off a model, replays it against the model's
/// parity slices, and places the rotations of `rep`.
pub fn decode_circuit(
    model: &SatModel,
    enc: &Encoding,
    rep: &PhasePolyRep,
) -> Result<Decoded, DecodeError> {
    let layout = &enc.layout;
    let steps: Vec<Vec<(usize, usize)>> = layout
        .cnot
        .iter()
        .map(|step| {
            step.iter()
                .enumerate()
                .filter(|(_, &v)| model.var(v))
                .map(|(e, _)| enc.cfg.edges[e])
                .collect()
        })
        .collect();

    let slice_matches = |k: usize, p: &ParityMatrix| {
        layout.parity[k].iter().enumerate().all(|(i, row)| {
            row.iter()
                .enumerate()
                .all(|(j, &v)| model.var(v) == p.get(i, j))
        })
    };
    let mut parity = rep.initial.clone();
    if !slice_matches(0, &parity) {
        return Err(DecodeError::Inconsistent { step: 0 });
    }
    for (k, step) in steps.iter().enumerate() {
        for &(c, t) in step {
            parity.cnot_unchecked(c, t);
        }
        if !slice_matches(k + 1, &parity) {
            return Err(DecodeError::Inconsistent { step: k + 1 });
        }
    }

    let layers = match (&layout.layer, enc.cfg.mode) {
        (Some(d), _) => Some(
            d.iter()
                .map(|row| row.iter().position(|&v| model.var(v)).unwrap_or(0))
                .collect(),
        ),
        (None, Mode::Depth) => Some(
            steps
                .iter()
                .enumerate()
                .flat_map(|(k, s)| std::iter::repeat_n(k, s.len()))
                .collect(),
        ),
        (None, Mode::Cnot) => None,
    };
    let circuit = assemble(&rep.initial, &steps, &rep.table)?;
    Ok(Decoded {
        circuit,
        steps,
        layers,
    })
}

struct Search<'a> {
    req: &'a SynthesisRequest,
    deadline: Option<Instant>,
    stats: SolverStats,
}

impl Search<'_> {
    fn solve(
        &mut self,
        backend: &mut dyn SatBackend,
        inst: &SatInstance,
        phase: SearchPhase,
        bound: usize,
    ) -> Result<Option<SatModel>, SynthError> {
        let start = Instant::now();
        let outcome = backend.solve(inst, self.deadline);
        let status = match &outcome {
            Ok(SolveOutcome::Sat(_)) => SolveStatus::Sat,
            Ok(SolveOutcome::Unsat) => SolveStatus::Unsat,
            Err(SatError::Timeout) => SolveStatus::Timeout,
            Err(_) => SolveStatus::Unsat,
        };
        self.stats.records.push(SolveRecord {
            phase,
            bound,
            status,
            seconds: start.elapsed().as_secs_f64(),
            num_vars: inst.num_vars(),
            num_clauses: inst.num_clauses(),
        });
        log::debug!("{phase:?} bound {bound}: {status:?}");
        match outcome {
            Ok(SolveOutcome::Sat(m)) => Ok(Some(m)),
            Ok(SolveOutcome::Unsat) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

/// Runs the incremental search described by `req`.
pub fn hopps(req: &SynthesisRequest) -> Result<SynthesisResult, SynthError> {
    let start = Instant::now();
    let rep = req.rep.canonical_table();
    let n = rep.n();
    if n > req.cm.num_qubits() {
        return Err(SynthError::TooManyQubits {
            rep: n,
            map: req.cm.num_qubits(),
        });
    }
    let terms = rep.table.terms().to_vec();
    let k_max = req
        .k_max
        .unwrap_or_else(|| default_k_max(n, terms.len()));
    let mut search = Search {
        req,
        deadline: req.timeout.map(|t| start + t),
        stats: SolverStats::default(),
    };

    // Primary metric: the first satisfiable step count.
    let mut found = None;
    for k in lower_bound(&rep, req.mode)..=k_max {
        let cfg = EncodingConfig::new(req.mode, k, n, &req.cm);
        if k > 0 && cfg.edges.is_empty() {
            break;
        }
        let mut enc = encode(&rep.initial, &rep.final_parity, &terms, &cfg)?;
        enc.add_symmetry_breaking()?;
        let mut backend = search.req.solver.backend();
        match search.solve(backend.as_mut(), &enc.inst, SearchPhase::Primary, k) {
            Ok(Some(model)) => {
                found = Some((enc, backend, model));
                break;
            }
            Ok(None) => {}
            Err(SynthError::Sat(SatError::Timeout)) => return Err(SynthError::Timeout),
            Err(e) => return Err(e),
        }
    }
    let Some((mut enc, mut backend, model)) = found else {
        return Err(SynthError::NoSolutionWithinKmax { k_max });
    };
    let instance = req.keep_instance.then(|| enc.inst.clone());
    let mut best = decode_circuit(&model, &enc, &rep)?;
    let mut optimal = true;

    if req.doubly {
        let outcome = match req.mode {
            Mode::Cnot => {
                // Depth descent runs on a fresh instance without step ordering.
                enc = encode(&rep.initial, &rep.final_parity, &terms, &enc.cfg)?;
                backend = search.req.solver.backend();
                descend_depth(&mut search, &mut enc, backend.as_mut(), &rep, &mut best)
            }
            Mode::Depth => descend_count(&mut search, &mut enc, backend.as_mut(), &rep, &mut best),
        };
        match outcome {
            Ok(()) => {}
            Err(SynthError::Sat(SatError::Timeout)) => optimal = false,
            Err(e) => return Err(e),
        }
    }

    search.stats.total_seconds = start.elapsed().as_secs_f64();
    let circuit = best.circuit;
    Ok(SynthesisResult {
        cnot_count: circuit.cnot_count(),
        cnot_depth: circuit.cnot_depth(),
        circuit,
        optimal,
        layers: best.layers,
        stats: search.stats,
        instance,
    })
}

/// Fixes the CNOT count and lowers the layer bound until unsatisfiable.
fn descend_depth(
    search: &mut Search<'_>,
    enc: &mut Encoding,
    backend: &mut dyn SatBackend,
    rep: &PhasePolyRep,
    best: &mut Decoded,
) -> Result<(), SynthError> {
    if enc.cfg.steps == 0 {
        return Ok(());
    }
    enc.add_layer_assignment()?;
    let bound = enc.cfg.steps;
    let Some(model) = search.solve(backend, &enc.inst, SearchPhase::Secondary, bound)? else {
        unreachable!("layer assignment admits every CNOT sequence");
    };
    *best = decode_circuit(&model, enc, rep)?;
    loop {
        let depth = best
            .layers
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |&m| m + 1);
        if depth <= 1 {
            return Ok(());
        }
        enc.add_depth_limit(depth - 1)?;
        match search.solve(backend, &enc.inst, SearchPhase::Secondary, depth - 1)? {
            Some(model) => *best = decode_circuit(&model, enc, rep)?,
            None => return Ok(()),
        }
    }
}

/// Fixes the depth and lowers the CNOT budget until unsatisfiable.
fn descend_count(
    search: &mut Search<'_>,
    enc: &mut Encoding,
    backend: &mut dyn SatBackend,
    rep: &PhasePolyRep,
    best: &mut Decoded,
) -> Result<(), SynthError> {
    loop {
        let count = best.circuit.cnot_count();
        if count <= enc.cfg.steps {
            return Ok(());
        }
        enc.add_cnot_budget(count - 1)?;
        match search.solve(backend, &enc.inst, SearchPhase::Secondary, count - 1)? {
            Some(model) => *best = decode_circuit(&model, enc, rep)?,
            None => return Ok(()),
        }
    }
}

/// Writes the DIMACS form of `inst` to `path`.
pub fn dump_dimacs(inst: &SatInstance, path: &PathBuf) -> std::io::Result<()> {
    std::fs::write(path, crate::sat::dimacs::export(inst) + "\n")
}
