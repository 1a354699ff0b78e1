#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use hopps::circuit::{Circuit, Gate};
use hopps::coupling::CouplingMap;
use hopps::gf2::{Parity, ParityMatrix};
use hopps::phasepoly::{ParityTable, PhasePolyRep};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> ParityMatrix {
    loop {
        let rows = (0..n)
            .map(|_| Parity::from_mask(n, rng.gen_range(1..1u64 << n)))
            .collect();
        if let Ok(m) = ParityMatrix::from_rows(rows) {
            return m;
        }
    }
}

pub fn random_rep(rng: &mut ChaCha8Rng, n: usize, num_terms: usize) -> PhasePolyRep {
    let mut table = ParityTable::empty(n);
    let mut masks: Vec<u64> = (1..1u64 << n).collect();
    masks.shuffle(rng);
    for &m in masks.iter().take(num_terms) {
        let angle = rng.gen_range(0.05..3.0f64);
        table.push(Parity::from_mask(n, m), angle.into()).unwrap();
    }
    PhasePolyRep::new(ParityMatrix::identity(n), random_invertible(rng, n), table).unwrap()
}

pub fn topology(kind: usize, n: usize) -> (&'static str, CouplingMap) {
    match kind % 3 {
        0 => ("line", CouplingMap::line(n)),
        1 => ("ring", CouplingMap::ring(n)),
        _ => ("complete", CouplingMap::complete(n)),
    }
}

/// The worked three-qubit QAOA example: terms 101, 110, 011 and a final
/// parity that swaps the last two rows.
pub fn qaoa3_rep() -> PhasePolyRep {
    let terms = [[1u8, 0, 1], [1, 1, 0], [0, 1, 1]];
    let table = ParityTable::new(
        3,
        terms.iter().map(|t| Parity::from_bits(t).unwrap()).collect(),
        vec![0.1.into(), 0.2.into(), 0.3.into()],
    )
    .unwrap();
    let g = ParityMatrix::from_bits(&[vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]]).unwrap();
    PhasePolyRep::new(ParityMatrix::identity(3), g, table).unwrap()
}

/// Random {CNOT, Rz} circuit with `len` gates, CNOTs on the edges of `cm`.
pub fn random_phase_circuit(rng: &mut ChaCha8Rng, cm: &CouplingMap, n: usize, len: usize) -> Circuit {
    let edges: Vec<(usize, usize)> = cm
        .directed_edges()
        .into_iter()
        .filter(|&(a, b)| a < n && b < n)
        .collect();
    let gates = (0..len)
        .map(|_| {
            if edges.is_empty() || rng.gen_bool(0.4) {
                Gate::rz(rng.gen_range(0.05..3.0f64), rng.gen_range(0..n))
            } else {
                let (c, t) = *edges.choose(rng).unwrap();
                Gate::cnot(c, t)
            }
        })
        .collect();
    Circuit::from_gates(n, gates).unwrap()
}

/// Like [`random_phase_circuit`] with opaque one- and two-qubit gates mixed in.
pub fn random_mixed_circuit(rng: &mut ChaCha8Rng, cm: &CouplingMap, len: usize) -> Circuit {
    let n = cm.num_qubits();
    let edges = cm.directed_edges();
    let gates = (0..len)
        .map(|_| match rng.gen_range(0..10) {
            0 => Gate::opaque("h", vec![rng.gen_range(0..n)]),
            1 => {
                let (a, b) = *edges.choose(rng).unwrap();
                Gate::opaque("cz", vec![a, b])
            }
            2..=4 => Gate::rz(rng.gen_range(0.05..3.0f64), rng.gen_range(0..n)),
            _ => {
                let (c, t) = *edges.choose(rng).unwrap();
                Gate::cnot(c, t)
            }
        })
        .collect();
    Circuit::from_gates(n, gates).unwrap()
}

/// Ring QAOA cost and mixer layers on the snake embedding of a 2x4 grid,
/// with a SWAP applied twice on a grid rung after each cost layer.
pub fn qaoa_ring8_with_swap_pairs(layers: usize) -> Circuit {
    let ring = [0usize, 1, 2, 3, 7, 6, 5, 4];
    let mut gates = Vec::new();
    for layer in 0..layers {
        for q in 0..8 {
            gates.push(Gate::opaque("h", vec![q]));
        }
        for i in 0..8 {
            let (a, b) = (ring[i], ring[(i + 1) % 8]);
            gates.push(Gate::cnot(a, b));
            gates.push(Gate::rz(0.4 + 0.1 * layer as f64, b));
            gates.push(Gate::cnot(a, b));
        }
        let (a, b) = [(1, 5), (2, 6)][layer % 2];
        for _ in 0..2 {
            gates.extend([Gate::cnot(a, b), Gate::cnot(b, a), Gate::cnot(a, b)]);
        }
        for q in 0..8 {
            gates.push(Gate::opaque("rx", vec![q]));
        }
    }
    Circuit::from_gates(8, gates).unwrap()
}

const PYSAT_WRAPPER: &str = r#"#!/usr/bin/env python3
import sys
from pysat.formula import CNF
from pysat.solvers import Cadical153

cnf = CNF(from_file=sys.argv[1])
with Cadical153(bootstrap_with=cnf.clauses) as s:
    if s.solve():
        print("s SATISFIABLE")
        print("v " + " ".join(str(x) for x in s.get_model()) + " 0")
    else:
        print("s UNSATISFIABLE")
"#;

/// Writes a DIMACS-speaking wrapper around CaDiCaL (via python-sat) into
/// `dir`. None when python-sat is not importable.
pub fn external_solver(dir: &Path) -> Option<PathBuf> {
    let ok = Command::new("python3")
        .args(["-c", "import pysat.solvers"])
        .output()
        .is_ok_and(|o| o.status.success());
    if !ok {
        return None;
    }
    let path = dir.join("pysat_solver.py");
    std::fs::write(&path, PYSAT_WRAPPER).ok()?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).ok()?;
    }
    Some(path)
}
