//! Peephole resynthesis of maximal {CNOT, Rz} blocks.
//!
//! Blocks are found with a single scan. Each {CNOT, Rz} gate joins the open
//! blocks that own its qubits, merging them; any other gate seals every open
//! block it touches. Once sealed, a block takes no more gates, so no foreign
//! gate between a block's first and last gate touches a qubit the block
//! owned at that time. That makes it sound to move the whole block to the
//! position of its last gate when splicing.

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{cnot_count, cnot_depth, Circuit, CircuitError, Gate};
use crate::coupling::CouplingMap;
use crate::encoder::Mode;
use crate::gf2::ParityMatrix;
use crate::parallel::run_parallel;
use crate::phasepoly::{extract_rep, realizes, PhasePolyRep};
use crate::sat::SolverChoice;
use crate::synth::{hopps, SynthError, SynthesisRequest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeepholeError {
    #[error("input circuit does not respect the coupling map")]
    Topology,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// A {CNOT, Rz} subcircuit with local qubit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Physical qubits in ascending order; local qubit `i` is `qubits[i]`.
    pub qubits: Vec<usize>,
    pub gates: Vec<Gate>,
    /// Positions of the original gates in the parent circuit, ascending.
    pub indices: Vec<usize>,
}

impl Block {
    pub fn first(&self) -> usize {
        self.indices[0]
    }

    pub fn last(&self) -> usize {
        *self.indices.last().expect("blocks are nonempty")
    }

    pub fn width(&self) -> usize {
        self.qubits.len()
    }

    pub fn local_circuit(&self) -> Circuit {
        Circuit::from_gates(self.width(), self.gates.clone()).expect("local gates in range")
    }

    pub fn global_gates(&self) -> Vec<Gate> {
        self.gates
            .iter()
            .map(|g| g.relabel(|q| self.qubits[q]))
            .collect()
    }

    pub fn rep(&self) -> PhasePolyRep {
        extract_rep(&self.local_circuit(), &ParityMatrix::identity(self.width()))
            .expect("blocks hold only CNOT and Rz")
    }

    pub fn cnot_count(&self) -> usize {
        cnot_count(&self.gates)
    }

    pub fn cnot_depth(&self) -> usize {
        cnot_depth(self.width(), &self.gates)
    }

    /// Same block with `gates` (local indices) as its body.
    pub fn with_gates(&self, gates: Vec<Gate>) -> Block {
        Block {
            qubits: self.qubits.clone(),
            gates,
            indices: self.indices.clone(),
        }
    }
}

/// Limits applied while growing blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockCaps {
    pub max_qubits: usize,
    pub max_depth: usize,
    /// Position treated as an extra barrier, if any.
    pub cut_at: Option<usize>,
}

impl BlockCaps {
    pub const UNLIMITED: BlockCaps = BlockCaps {
        max_qubits: usize::MAX,
        max_depth: usize::MAX,
        cut_at: None,
    };
}

struct OpenBlock {
    qubits: Vec<(usize, usize)>,
    indices: Vec<usize>,
    levels: Vec<(usize, usize)>,
    depth: usize,
}

impl OpenBlock {
    fn level(&self, q: usize) -> usize {
        self.levels
            .iter()
            .find(|&&(p, _)| p == q)
            .map_or(0, |&(_, l)| l)
    }
}

/// Scan-line grouping of the {CNOT, Rz} gates of `c`.
pub fn scan_blocks(c: &Circuit, caps: BlockCaps) -> Vec<Block> {
    let gates = c.gates();
    let mut owner: Vec<Option<usize>> = vec![None; c.num_qubits()];
    let mut open: Vec<Option<OpenBlock>> = Vec::new();
    let mut sealed: Vec<OpenBlock> = Vec::new();

    fn seal(
        id: usize,
        owner: &mut [Option<usize>],
        open: &mut [Option<OpenBlock>],
        sealed: &mut Vec<OpenBlock>,
    ) {
        if let Some(b) = open[id].take() {
            for &(q, _) in &b.qubits {
                owner[q] = None;
            }
            sealed.push(b);
        }
    }

    for (pos, g) in gates.iter().enumerate() {
        if caps.cut_at == Some(pos) {
            for id in 0..open.len() {
                seal(id, &mut owner, &mut open, &mut sealed);
            }
        }
        let qs = g.qubits();
        let mut touched: Vec<usize> = qs.iter().filter_map(|&q| owner[q]).collect();
        touched.sort_unstable();
        touched.dedup();
        if !g.is_phase_poly() {
            for id in touched {
                seal(id, &mut owner, &mut open, &mut sealed);
            }
            continue;
        }

        let width: usize = touched
            .iter()
            .map(|&id| open[id].as_ref().unwrap().qubits.len())
            .sum::<usize>()
            + qs.iter().filter(|&&q| owner[q].is_none()).count();
        let level_of = |q: usize| owner[q].map_or(0, |id| open[id].as_ref().unwrap().level(q));
        let merged_depth = touched
            .iter()
            .map(|&id| open[id].as_ref().unwrap().depth)
            .max()
            .unwrap_or(0);
        let new_level = match g {
            Gate::Cnot { control, target } => Some(1 + level_of(*control).max(level_of(*target))),
            _ => None,
        };
        let depth = merged_depth.max(new_level.unwrap_or(0));

        let target = if width <= caps.max_qubits.max(qs.len()) && depth <= caps.max_depth.max(1) {
            // Merge everything touched into the lowest id.
            match touched.split_first() {
                Some((&keep, rest)) => {
                    for &id in rest {
                        let b = open[id].take().unwrap();
                        let k = open[keep].as_mut().unwrap();
                        k.qubits.extend(b.qubits);
                        k.indices.extend(b.indices);
                        k.levels.extend(b.levels);
                        k.depth = k.depth.max(b.depth);
                    }
                    let k = open[keep].as_mut().unwrap();
                    for &(q, _) in &k.qubits {
                        owner[q] = Some(keep);
                    }
                    keep
                }
                None => {
                    open.push(Some(OpenBlock {
                        qubits: Vec::new(),
                        indices: Vec::new(),
                        levels: Vec::new(),
                        depth: 0,
                    }));
                    open.len() - 1
                }
            }
        } else {
            for id in touched {
                seal(id, &mut owner, &mut open, &mut sealed);
            }
            open.push(Some(OpenBlock {
                qubits: Vec::new(),
                indices: Vec::new(),
                levels: Vec::new(),
                depth: 0,
            }));
            open.len() - 1
        };

        let b = open[target].as_mut().unwrap();
        for &q in &qs {
            if owner[q] != Some(target) {
                owner[q] = Some(target);
                b.qubits.push((q, pos));
            }
        }
        b.indices.push(pos);
        if let Some(l) = new_level {
            for &q in &qs {
                match b.levels.iter_mut().find(|(p, _)| *p == q) {
                    Some(entry) => entry.1 = l,
                    None => b.levels.push((q, l)),
                }
            }
            b.depth = b.depth.max(l);
        }
    }
    for id in 0..open.len() {
        seal(id, &mut owner, &mut open, &mut sealed);
    }

    let mut blocks: Vec<Block> = sealed
        .into_iter()
        .map(|mut b| {
            b.qubits.sort_unstable();
            b.indices.sort_unstable();
            let qubits: Vec<usize> = b.qubits.iter().map(|&(q, _)| q).collect();
            let mut local = vec![usize::MAX; c.num_qubits()];
            for (i, &q) in qubits.iter().enumerate() {
                local[q] = i;
            }
            let gates = b
                .indices
                .iter()
                .map(|&p| gates[p].relabel(|q| local[q]))
                .collect();
            Block {
                qubits,
                gates,
                indices: b.indices,
            }
        })
        .collect();
    blocks.sort_by_key(Block::first);
    blocks
}

/// Maximal {CNOT, Rz} blocks, ordered by first gate.
pub fn find_blocks(c: &Circuit) -> Vec<Block> {
    scan_blocks(c, BlockCaps::UNLIMITED)
}

/// Rebuilds `c` with each block's body emitted at the position of its last
/// original gate. Gates outside the blocks keep their places.
pub fn splice(c: &Circuit, blocks: &[Block]) -> Circuit {
    let mut at_last = vec![None; c.len()];
    let mut covered = vec![false; c.len()];
    for (bi, b) in blocks.iter().enumerate() {
        for &p in &b.indices {
            covered[p] = true;
        }
        at_last[b.last()] = Some(bi);
    }
    let mut out = Vec::with_capacity(c.len());
    for (p, g) in c.gates().iter().enumerate() {
        if let Some(bi) = at_last[p] {
            out.extend(blocks[bi].global_gates());
        } else if !covered[p] {
            out.push(g.clone());
        }
    }
    Circuit::from_gates(c.num_qubits(), out).expect("spliced gates stay in range")
}

#[derive(Debug, Clone, Serialize)]
pub struct ResynthSettings {
    pub mode: Mode,
    pub doubly: bool,
    pub timeout: Option<Duration>,
    #[serde(skip)]
    pub solver: SolverChoice,
}

impl ResynthSettings {
    pub fn new(mode: Mode) -> Self {
        ResynthSettings {
            mode,
            doubly: false,
            timeout: None,
            solver: SolverChoice::Internal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockStatus {
    Improved,
    Unchanged,
    NoCnots,
    Disconnected,
    Timeout,
    NoSolution,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct ResynthOutcome {
    pub block: Block,
    pub status: BlockStatus,
    pub before: (usize, usize),
    pub after: (usize, usize),
}

/// Whether `(count, depth)` of a candidate beats the original under `mode`:
/// the target metric drops, or it ties and the other metric drops.
pub fn accepts(mode: Mode, before: (usize, usize), after: (usize, usize)) -> bool {
    let key = |(c, d): (usize, usize)| match mode {
        Mode::Cnot => (c, d),
        Mode::Depth => (d, c),
    };
    let (b, a) = (key(before), key(after));
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Resynthesizes one block on the coupling map induced by its qubits. Any
/// failure returns the block unchanged with the reason recorded.
pub fn resynth_block(b: &Block, cm: &CouplingMap, settings: &ResynthSettings) -> ResynthOutcome {
    let before = (b.cnot_count(), b.cnot_depth());
    let unchanged = |status| ResynthOutcome {
        block: b.clone(),
        status,
        before,
        after: before,
    };
    if before.0 == 0 {
        return unchanged(BlockStatus::NoCnots);
    }
    let induced = match cm.induced(&b.qubits) {
        Ok(m) if m.is_connected() => m,
        Ok(_) => {
            log::info!("block at {} skipped: disconnected qubits {:?}", b.first(), b.qubits);
            return unchanged(BlockStatus::Disconnected);
        }
        Err(e) => return unchanged(BlockStatus::Failed(e.to_string())),
    };
    let rep = b.rep();
    let mut req = SynthesisRequest::new(rep.clone(), induced, settings.mode)
        .doubly(settings.doubly)
        .solver(settings.solver.clone());
    req.timeout = settings.timeout;
    let res = match hopps(&req) {
        Ok(r) => r,
        Err(SynthError::Timeout) => return unchanged(BlockStatus::Timeout),
        Err(SynthError::NoSolutionWithinKmax { .. }) => return unchanged(BlockStatus::NoSolution),
        Err(e) => return unchanged(BlockStatus::Failed(e.to_string())),
    };
    match realizes(&res.circuit, &rep) {
        Ok(true) => {}
        _ => return unchanged(BlockStatus::Failed("resynthesized block is not equivalent".into())),
    }
    let after = (res.cnot_count, res.cnot_depth);
    if accepts(settings.mode, before, after) {
        ResynthOutcome {
            block: b.with_gates(res.circuit.into_gates()),
            status: BlockStatus::Improved,
            before,
            after,
        }
    } else {
        unchanged(BlockStatus::Unchanged)
    }
}

#[derive(Debug, Clone)]
pub struct PeepholeReport {
    pub circuit: Circuit,
    /// Outcomes of the first round, one per maximal block of the input.
    pub outcomes: Vec<ResynthOutcome>,
    /// Rounds run, including the final one that changed nothing.
    pub rounds: usize,
}

impl PeepholeReport {
    pub fn improved(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.status == BlockStatus::Improved)
            .count()
    }
}

/// Upper limit on resynthesis rounds in one pass.
pub const MAX_ROUNDS: usize = 32;

/// Resynthesizes every maximal block of `c` (on `jobs` workers) and splices
/// the results back, repeating on the spliced circuit until a round
/// improves no block.
pub fn peephole_pass(
    c: &Circuit,
    cm: &CouplingMap,
    settings: &ResynthSettings,
    jobs: usize,
) -> Result<PeepholeReport, PeepholeError> {
    if !c.validate_topology(cm)? {
        return Err(PeepholeError::Topology);
    }
    let mut current = c.clone();
    let mut first = None;
    let mut rounds = 0;
    let mut settled = false;
    while !settled && rounds < MAX_ROUNDS {
        rounds += 1;
        let blocks = find_blocks(&current);
        let outcomes = resynth_blocks(&blocks, cm, settings, jobs, |_| None);
        let improved = outcomes.iter().any(|o| o.status == BlockStatus::Improved);
        if improved {
            let new_blocks: Vec<Block> = outcomes.iter().map(|o| o.block.clone()).collect();
            current = splice(&current, &new_blocks);
        }
        first.get_or_insert(outcomes);
        settled = !improved;
    }
    if !settled {
        log::warn!("peephole pass stopped after {MAX_ROUNDS} rounds");
    }
    Ok(PeepholeReport {
        circuit: current,
        outcomes: first.unwrap_or_default(),
        rounds,
    })
}

/// Runs [`resynth_block`] over `blocks` in parallel. `timeout_for` may
/// override the per-block budget.
pub fn resynth_blocks(
    blocks: &[Block],
    cm: &CouplingMap,
    settings: &ResynthSettings,
    jobs: usize,
    timeout_for: impl Fn(usize) -> Option<Duration> + Sync,
) -> Vec<ResynthOutcome> {
    let results = run_parallel(blocks, jobs, |i, b| {
        let mut s = settings.clone();
        if let Some(t) = timeout_for(i) {
            s.timeout = Some(t);
        }
        resynth_block(b, cm, &s)
    });
    results
        .into_iter()
        .zip(blocks)
        .map(|(r, b)| {
            r.unwrap_or_else(|panic| ResynthOutcome {
                block: b.clone(),
                status: BlockStatus::Failed(panic.to_string()),
                before: (b.cnot_count(), b.cnot_depth()),
                after: (b.cnot_count(), b.cnot_depth()),
            })
        })
        .collect()
}
