//! Iterative blockwise optimization of large circuits.
//!
//! Each round partitions the circuit into small blocks, resynthesizes them
//! in parallel, and splices the results back. A first stage repartitions the
//! whole circuit until the metrics stop moving; a second stage resynthesizes
//! random subsets of blocks cut at random positions.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError};
use crate::coupling::CouplingMap;
use crate::encoder::Mode;
use crate::metrics::CircuitMetrics;
use crate::parallel::default_jobs;
use crate::peephole::{
    resynth_blocks, scan_blocks, splice, Block, BlockCaps, BlockStatus, ResynthSettings,
};
use crate::sat::SolverChoice;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlockwiseError {
    #[error("input circuit does not respect the coupling map")]
    Topology,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone)]
pub struct BlockwiseConfig {
    pub max_block_qubits: usize,
    pub max_block_depth: usize,
    pub iters_full: usize,
    pub iters_sample: usize,
    pub sample_fraction: f64,
    pub seed: u64,
    pub jobs: usize,
    pub per_block_timeout: Option<Duration>,
    pub mode: Mode,
    pub doubly: bool,
    /// Checked between iterations.
    pub time_budget: Option<Duration>,
    pub solver: SolverChoice,
}

impl Default for BlockwiseConfig {
    fn default() -> Self {
        BlockwiseConfig {
            max_block_qubits: 3,
            max_block_depth: 20,
            iters_full: 5,
            iters_sample: 5,
            sample_fraction: 0.5,
            seed: 0,
            jobs: default_jobs(),
            per_block_timeout: Some(Duration::from_secs(60)),
            mode: Mode::Cnot,
            doubly: false,
            time_budget: Some(Duration::from_secs(24 * 3600)),
            solver: SolverChoice::Internal,
        }
    }
}

impl BlockwiseConfig {
    pub fn validate(&self) -> Result<(), BlockwiseError> {
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(BlockwiseError::Config(format!(
                "sample fraction {} outside (0, 1]",
                self.sample_fraction
            )));
        }
        if self.jobs == 0 {
            return Err(BlockwiseError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    fn caps(&self, cut_at: Option<usize>) -> BlockCaps {
        BlockCaps {
            max_qubits: self.max_block_qubits,
            max_depth: self.max_block_depth,
            cut_at,
        }
    }

    fn settings(&self) -> ResynthSettings {
        ResynthSettings {
            mode: self.mode,
            doubly: self.doubly,
            timeout: self.per_block_timeout,
            solver: self.solver.clone(),
        }
    }
}

/// Greedy scan-line partition under the configured qubit and depth caps.
pub fn partition(c: &Circuit, cfg: &BlockwiseConfig) -> Vec<Block> {
    scan_blocks(c, cfg.caps(None))
}

/// Partitions with an extra cut at a random position, then keeps a uniform
/// random `sample_fraction` of the blocks (rounded up), in circuit order.
pub fn sample_blocks(c: &Circuit, cfg: &BlockwiseConfig, rng: &mut impl Rng) -> Vec<Block> {
    if c.is_empty() {
        return Vec::new();
    }
    let offset = rng.gen_range(0..c.len());
    let blocks = scan_blocks(c, cfg.caps(Some(offset)));
    let keep = ((cfg.sample_fraction * blocks.len() as f64).ceil() as usize).min(blocks.len());
    let mut picked = sample(rng, blocks.len(), keep).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| blocks[i].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Full,
    Sample,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub stage: Stage,
    pub cnot_count: usize,
    pub cnot_depth: usize,
    pub blocks_attempted: usize,
    pub blocks_improved: usize,
    pub rolled_back: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub initial: CircuitMetrics,
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn final_metrics(&self) -> CircuitMetrics {
        self.records.last().map_or(self.initial, |r| CircuitMetrics {
            cnot_count: r.cnot_count,
            cnot_depth: r.cnot_depth,
        })
    }

    /// One JSON object per iteration.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iteration,stage,cnot_count,cnot_depth,blocks_attempted,blocks_improved,rolled_back,wall_time_s\n",
        );
        for r in &self.records {
            let stage = match r.stage {
                Stage::Full => "full",
                Stage::Sample => "sample",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:.6}",
                r.iteration,
                stage,
                r.cnot_count,
                r.cnot_depth,
                r.blocks_attempted,
                r.blocks_improved,
                r.rolled_back,
                r.wall_time_s
            );
        }
        out
    }
}

fn key(mode: Mode, m: CircuitMetrics) -> (usize, usize) {
    match mode {
        Mode::Cnot => (m.cnot_count, m.cnot_depth),
        Mode::Depth => (m.cnot_depth, m.cnot_count),
    }
}

/// Runs both stages and returns the optimized circuit with its trace.
pub fn iterate_optimize(
    c: &Circuit,
    cm: &CouplingMap,
    cfg: &BlockwiseConfig,
) -> Result<(Circuit, IterationTrace), BlockwiseError> {
    cfg.validate()?;
    if !c.validate_topology(cm)? {
        return Err(BlockwiseError::Topology);
    }
    let start = Instant::now();
    let settings = cfg.settings();
    let mut current = c.clone();
    let mut trace = IterationTrace {
        initial: CircuitMetrics::of(c),
        records: Vec::new(),
    };
    let out_of_time = || cfg.time_budget.is_some_and(|b| start.elapsed() >= b);

    let step = |current: &mut Circuit, blocks: Vec<Block>, stage: Stage, trace: &mut IterationTrace| {
        let t0 = Instant::now();
        let before = CircuitMetrics::of(current);
        let outcomes = resynth_blocks(&blocks, cm, &settings, cfg.jobs, |_| None);
        let improved = outcomes
            .iter()
            .filter(|o| o.status == BlockStatus::Improved)
            .count();
        let new_blocks: Vec<Block> = outcomes.into_iter().map(|o| o.block).collect();
        let candidate = splice(current, &new_blocks);
        let after = CircuitMetrics::of(&candidate);
        let rolled_back = key(cfg.mode, after) > key(cfg.mode, before);
        if !rolled_back {
            *current = candidate;
        }
        let m = CircuitMetrics::of(current);
        let record = IterationRecord {
            iteration: trace.records.len() + 1,
            stage,
            cnot_count: m.cnot_count,
            cnot_depth: m.cnot_depth,
            blocks_attempted: blocks.len(),
            blocks_improved: if rolled_back { 0 } else { improved },
            rolled_back,
            wall_time_s: t0.elapsed().as_secs_f64(),
        };
        log::info!(
            "iteration {} ({:?}): count {} depth {}, {}/{} blocks improved{}",
            record.iteration,
            stage,
            m.cnot_count,
            m.cnot_depth,
            record.blocks_improved,
            record.blocks_attempted,
            if rolled_back { ", rolled back" } else { "" }
        );
        trace.records.push(record);
        m != before
    };

    for _ in 0..cfg.iters_full {
        if out_of_time() {
            return Ok((current, trace));
        }
        let blocks = partition(&current, cfg);
        if !step(&mut current, blocks, Stage::Full, &mut trace) {
            break;
        }
    }
    for s in 0..cfg.iters_sample {
        if out_of_time() {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(s as u64));
        let blocks = sample_blocks(&current, cfg, &mut rng);
        step(&mut current, blocks, Stage::Sample, &mut trace);
    }
    Ok((current, trace))
}
