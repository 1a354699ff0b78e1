//! Exhaustive breadth-first search for minimal CNOT schedules on small
//! instances.
//!
//! States are `(parity, matched terms)`; a state's rows are packed one byte
//! per qubit into a `u64`, which limits the oracle to eight qubits.

use std::collections::HashMap;

use thiserror::Error;

use crate::circuit::Circuit;
use crate::coupling::CouplingMap;
use crate::encoder::Mode;
use crate::gf2::ParityMatrix;
use crate::phasepoly::PhasePolyRep;
use crate::synth::{assemble, DecodeError};

pub const MAX_QUBITS: usize = 8;
const MAX_TERMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle handles at most {MAX_QUBITS} qubits, got {0}")]
    TooManyQubits(usize),
    #[error("oracle handles at most {MAX_TERMS} distinct terms, got {0}")]
    TooManyTerms(usize),
    #[error("representation has {rep} qubits but the coupling map only {map}")]
    MapTooSmall { rep: usize, map: usize },
    #[error("search visited more than {0} states")]
    NodeCap(usize),
    #[error("more than {0} optimal schedules")]
    PathCap(usize),
    #[error("target is unreachable on this coupling map")]
    Unreachable,
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub node_cap: usize,
    pub path_cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            node_cap: 5_000_000,
            path_cap: 200_000,
        }
    }
}

/// All minimal schedules. Each schedule is a list of steps; a step is one
/// CNOT when minimizing count and one qubit-disjoint layer when minimizing
/// depth.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub mode: Mode,
    pub optimum: usize,
    pub schedules: Vec<Vec<Vec<(usize, usize)>>>,
}

impl OracleResult {
    pub fn circuits(&self, rep: &PhasePolyRep) -> Result<Vec<Circuit>, OracleError> {
        let table = rep.table.merged();
        self.schedules
            .iter()
            .map(|s| assemble(&rep.initial, s, &table).map_err(Into::into))
            .collect()
    }

    pub fn counts(&self) -> impl Iterator<Item = usize> + '_ {
        self.schedules
            .iter()
            .map(|s| s.iter().map(Vec::len).sum())
    }

    pub fn depths(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.schedules.iter().map(move |s| schedule_depth(n, s))
    }

    pub fn min_count(&self) -> usize {
        self.counts().min().unwrap_or(0)
    }

    pub fn min_depth(&self, n: usize) -> usize {
        self.depths(n).min().unwrap_or(0)
    }
}

fn schedule_depth(n: usize, steps: &[Vec<(usize, usize)>]) -> usize {
    let gates: Vec<_> = steps
        .iter()
        .flatten()
        .map(|&(c, t)| crate::circuit::Gate::cnot(c, t))
        .collect();
    crate::circuit::cnot_depth(n, &gates)
}

fn pack(m: &ParityMatrix) -> u64 {
    m.rows()
        .iter()
        .enumerate()
        .fold(0, |acc, (i, r)| acc | (r.as_mask() & 0xff) << (8 * i))
}

#[inline]
fn apply(state: u64, c: usize, t: usize) -> u64 {
    state ^ (((state >> (8 * c)) & 0xff) << (8 * t))
}

fn matched(state: u64, n: usize, terms: &[u64]) -> u64 {
    let mut mask = 0;
    for i in 0..n {
        let row = (state >> (8 * i)) & 0xff;
        for (ti, &t) in terms.iter().enumerate() {
            if row == t {
                mask |= 1 << ti;
            }
        }
    }
    mask
}

/// Every nonempty set of pairwise qubit-disjoint directed edges.
fn layer_moves(edges: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    fn go(
        edges: &[(usize, usize)],
        from: usize,
        used: u32,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        for i in from..edges.len() {
            let (a, b) = edges[i];
            let bits = 1 << a | 1 << b;
            if used & bits == 0 {
                cur.push((a, b));
                out.push(cur.clone());
                go(edges, i + 1, used | bits, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(edges, 0, 0, &mut Vec::new(), &mut out);
    out
}

pub fn oracle_min_count(
    rep: &PhasePolyRep,
    cm: &CouplingMap,
    cfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    search(rep, cm, cfg, Mode::Cnot)
}

pub fn oracle_min_depth(
    rep: &PhasePolyRep,
    cm: &CouplingMap,
    cfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    search(rep, cm, cfg, Mode::Depth)
}

pub fn oracle(
    rep: &PhasePolyRep,
    cm: &CouplingMap,
    mode: Mode,
    cfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    search(rep, cm, cfg, mode)
}

fn search(
    rep: &PhasePolyRep,
    cm: &CouplingMap,
    cfg: &OracleConfig,
    mode: Mode,
) -> Result<OracleResult, OracleError> {
    let n = rep.n();
    if n > MAX_QUBITS {
        return Err(OracleError::TooManyQubits(n));
    }
    if n > cm.num_qubits() {
        return Err(OracleError::MapTooSmall {
            rep: n,
            map: cm.num_qubits(),
        });
    }
    let table = rep.table.merged();
    if table.len() > MAX_TERMS {
        return Err(OracleError::TooManyTerms(table.len()));
    }
    let terms: Vec<u64> = table.terms().iter().map(|t| t.as_mask()).collect();
    let full = if terms.len() == 64 {
        u64::MAX
    } else {
        (1u64 << terms.len()) - 1
    };
    let edges: Vec<(usize, usize)> = cm
        .directed_edges()
        .into_iter()
        .filter(|&(a, b)| a < n && b < n)
        .collect();
    let moves: Vec<Vec<(usize, usize)>> = match mode {
        Mode::Cnot => edges.iter().map(|&e| vec![e]).collect(),
        Mode::Depth => layer_moves(&edges),
    };

    let goal_parity = pack(&rep.final_parity);
    let start_parity = pack(&rep.initial);
    let start = (start_parity, matched(start_parity, n, &terms));

    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut states = vec![start];
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    index.insert(start, 0);

    let mut level = vec![0usize];
    let mut depth = 0;
    let goals = loop {
        let goals: Vec<usize> = level
            .iter()
            .copied()
            .filter(|&s| states[s] == (goal_parity, full))
            .collect();
        if !goals.is_empty() {
            break goals;
        }
        if level.is_empty() {
            return Err(OracleError::Unreachable);
        }
        let mut next = Vec::new();
        for &s in &level {
            let (parity, mask) = states[s];
            for (mi, mv) in moves.iter().enumerate() {
                let p = mv.iter().fold(parity, |acc, &(c, t)| apply(acc, c, t));
                let key = (p, mask | matched(p, n, &terms));
                match index.get(&key) {
                    Some(&id) => {
                        // Only states first reached on this level take more parents.
                        if id >= states.len() - next.len() {
                            preds[id].push((s, mi));
                        }
                    }
                    None => {
                        let id = states.len();
                        if id >= cfg.node_cap {
                            return Err(OracleError::NodeCap(cfg.node_cap));
                        }
                        states.push(key);
                        preds.push(vec![(s, mi)]);
                        index.insert(key, id);
                        next.push(id);
                    }
                }
            }
        }
        level = next;
        depth += 1;
    };

    let mut schedules = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for g in goals {
        enumerate(g, &preds, &mut stack, &mut |path| {
            if schedules.len() >= cfg.path_cap {
                return Err(OracleError::PathCap(cfg.path_cap));
            }
            schedules.push(path.iter().rev().map(|&m| moves[m].clone()).collect());
            Ok(())
        })?;
    }
    schedules.sort();
    Ok(OracleResult {
        mode,
        optimum: depth,
        schedules,
    })
}

/// Walks every parent chain from `node` back to the root; `path` holds move
/// indices from the node backwards.
fn enumerate(
    node: usize,
    preds: &[Vec<(usize, usize)>],
    path: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]) -> Result<(), OracleError>,
) -> Result<(), OracleError> {
    if preds[node].is_empty() {
        return emit(path);
    }
    for &(p, m) in &preds[node] {
        path.push(m);
        enumerate(p, preds, path, emit)?;
        path.pop();
    }
    Ok(())
}
