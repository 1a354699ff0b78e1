//! Qubit connectivity graphs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CouplingError {
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a qubit outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("qubit {0} listed twice in subset")]
    DuplicateQubit(usize),
    #[error("malformed coupling map JSON: {0}")]
    Json(String),
}

/// Undirected coupling graph. Every edge can host a CNOT in either orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CouplingFile", into = "CouplingFile")]
pub struct CouplingMap {
    num_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct CouplingFile {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<CouplingFile> for CouplingMap {
    type Error = CouplingError;

    fn try_from(f: CouplingFile) -> Result<Self, Self::Error> {
        CouplingMap::new(f.num_qubits, f.edges.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<CouplingMap> for CouplingFile {
    fn from(cm: CouplingMap) -> Self {
        CouplingFile {
            num_qubits: cm.num_qubits,
            edges: cm.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl CouplingMap {
    pub fn new(
        num_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, CouplingError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(CouplingError::SelfLoop(a));
            }
            if a >= num_qubits || b >= num_qubits {
                return Err(CouplingError::OutOfRange(a, b, num_qubits));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(CouplingMap {
            num_qubits,
            edges: set,
        })
    }

    pub fn line(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("valid line")
    }

    pub fn ring(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Self::new(n, edges).expect("valid ring")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
        Self::new(n, edges).expect("valid complete graph")
    }

    /// Rectangular grid with qubit `r * cols + c` at row `r`, column `c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    edges.push((q, q + 1));
                }
                if r + 1 < rows {
                    edges.push((q, q + cols));
                }
            }
        }
        Self::new(rows * cols, edges).expect("valid grid")
    }

    pub fn from_json(text: &str) -> Result<Self, CouplingError> {
        serde_json::from_str(text).map_err(|e| CouplingError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coupling map serializes")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Undirected edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Both orientations of every edge, `(control, target)`, in a fixed order.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .collect()
    }

    pub fn neighbors(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == q {
                Some(b)
            } else if b == q {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn is_connected(&self) -> bool {
        if self.num_qubits <= 1 {
            return true;
        }
        let mut seen = vec![false; self.num_qubits];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(q) = stack.pop() {
            for nb in self.neighbors(q) {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Subgraph on `qubits`, relabeled so `qubits[i]` becomes `i`.
    pub fn induced(&self, qubits: &[usize]) -> Result<CouplingMap, CouplingError> {
        let mut local = vec![None; self.num_qubits];
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(CouplingError::OutOfRange(q, q, self.num_qubits));
            }
            if local[q].is_some() {
                return Err(CouplingError::DuplicateQubit(q));
            }
            local[q] = Some(i);
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|&(a, b)| Some((local[a]?, local[b]?)));
        CouplingMap::new(qubits.len(), edges)
    }
}
