//! Gate-list circuits and their CNOT metrics.

use thiserror::Error;

use crate::angle::Angle;
use crate::coupling::CouplingMap;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("gate touches qubit {qubit} but circuit has {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("gate uses qubit {0} twice")]
    RepeatedQubit(usize),
    #[error("circuit has {circuit} qubits but coupling map has {map}")]
    QubitCountMismatch { circuit: usize, map: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Cnot { control: usize, target: usize },
    Rz { angle: Angle, qubit: usize },
    /// Any other instruction, carried through untouched.
    Opaque {
        name: String,
        qubits: Vec<usize>,
        params: Vec<String>,
    },
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::Cnot { control, target }
    }

    pub fn rz(angle: impl Into<Angle>, qubit: usize) -> Gate {
        Gate::Rz {
            angle: angle.into(),
            qubit,
        }
    }

    pub fn opaque(name: impl Into<String>, qubits: Vec<usize>) -> Gate {
        Gate::Opaque {
            name: name.into(),
            qubits,
            params: Vec::new(),
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Rz { qubit, .. } => vec![*qubit],
            Gate::Opaque { qubits, .. } => qubits.clone(),
        }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// CNOT or Rz.
    pub fn is_phase_poly(&self) -> bool {
        !matches!(self, Gate::Opaque { .. })
    }

    /// Rewrites qubit indices through `map`.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::Cnot { control, target } => Gate::cnot(map(*control), map(*target)),
            Gate::Rz { angle, qubit } => Gate::Rz {
                angle: angle.clone(),
                qubit: map(*qubit),
            },
            Gate::Opaque {
                name,
                qubits,
                params,
            } => Gate::Opaque {
                name: name.clone(),
                qubits: qubits.iter().map(|&q| map(q)).collect(),
                params: params.clone(),
            },
        }
    }

    fn check(&self, n: usize) -> Result<(), CircuitError> {
        let qs = self.qubits();
        for (i, &q) in qs.iter().enumerate() {
            if q >= n {
                return Err(CircuitError::QubitOutOfRange { qubit: q, n });
            }
            if qs[..i].contains(&q) {
                return Err(CircuitError::RepeatedQubit(q));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        for g in &gates {
            g.check(num_qubits)?;
        }
        Ok(Circuit { num_qubits, gates })
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.check(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn into_gates(self) -> Vec<Gate> {
        self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn is_phase_poly(&self) -> bool {
        self.gates.iter().all(Gate::is_phase_poly)
    }

    pub fn cnot_count(&self) -> usize {
        cnot_count(&self.gates)
    }

    pub fn cnot_depth(&self) -> usize {
        cnot_depth(self.num_qubits, &self.gates)
    }

    /// Every two-qubit interaction sits on an edge of `cm`.
    ///
    /// Barriers are scheduling hints and are not checked. Opaque gates on
    /// three or more qubits are never directly executable and fail the check.
    /// A circuit narrower than the map occupies its first qubits.
    pub fn validate_topology(&self, cm: &CouplingMap) -> Result<bool, CircuitError> {
        if self.num_qubits > cm.num_qubits() {
            return Err(CircuitError::QubitCountMismatch {
                circuit: self.num_qubits,
                map: cm.num_qubits(),
            });
        }
        Ok(self.gates.iter().all(|g| match g {
            Gate::Cnot { control, target } => cm.has_edge(*control, *target),
            Gate::Rz { .. } => true,
            Gate::Opaque { name, qubits, .. } => match qubits.len() {
                0 | 1 => true,
                _ if name == "barrier" => true,
                2 => cm.has_edge(qubits[0], qubits[1]),
                _ => false,
            },
        }))
    }
}

pub fn cnot_count(gates: &[Gate]) -> usize {
    gates.iter().filter(|g| g.is_cnot()).count()
}

/// ASAP layering of the CNOTs only; Rz and opaque gates take no time.
pub fn cnot_depth(num_qubits: usize, gates: &[Gate]) -> usize {
    let mut level = vec![0usize; num_qubits];
    let mut depth = 0;
    for g in gates {
        if let Gate::Cnot { control, target } = *g {
            let l = 1 + level[control].max(level[target]);
            level[control] = l;
            level[target] = l;
            depth = depth.max(l);
        }
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: usize, gates: Vec<Gate>) -> Circuit {
        Circuit::from_gates(n, gates).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(Circuit::new(3).cnot_count(), 0);
        let circ = c(2, vec![Gate::cnot(0, 1), Gate::rz(0.3, 1), Gate::cnot(0, 1)]);
        assert_eq!(circ.cnot_count(), 2);
        assert_eq!(circ.cnot_depth(), 2);
    }

    #[test]
    fn depth_layers() {
        assert_eq!(c(3, vec![Gate::cnot(0, 1), Gate::cnot(1, 2)]).cnot_depth(), 2);
        assert_eq!(c(4, vec![Gate::cnot(0, 1), Gate::cnot(2, 3)]).cnot_depth(), 1);
        assert_eq!(Circuit::new(4).cnot_depth(), 0);
    }

    #[test]
    fn topology_checks() {
        let line = CouplingMap::line(3);
        assert!(!c(3, vec![Gate::cnot(0, 2)]).validate_topology(&line).unwrap());
        assert!(c(3, vec![Gate::cnot(0, 1)]).validate_topology(&line).unwrap());
        assert!(Circuit::new(3).validate_topology(&line).unwrap());
        assert!(c(3, vec![Gate::opaque("barrier", vec![0, 1, 2])])
            .validate_topology(&line)
            .unwrap());
        assert!(!c(3, vec![Gate::opaque("swap", vec![0, 2])])
            .validate_topology(&line)
            .unwrap());
        assert_eq!(
            Circuit::new(4).validate_topology(&line),
            Err(CircuitError::QubitCountMismatch { circuit: 4, map: 3 })
        );
        assert_eq!(
            Circuit::from_gates(2, vec![Gate::cnot(1, 0)])
                .unwrap()
                .validate_topology(&line),
            Ok(true)
        );
    }

    #[test]
    fn rejects_bad_gates() {
        assert_eq!(
            Circuit::from_gates(2, vec![Gate::cnot(1, 1)]),
            Err(CircuitError::RepeatedQubit(1))
        );
        assert_eq!(
            Circuit::from_gates(2, vec![Gate::rz(1.0, 2)]),
            Err(CircuitError::QubitOutOfRange { qubit: 2, n: 2 })
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_gates(n: usize) -> impl Strategy<Value = Vec<Gate>> {
            let gate = prop_oneof![
                (0..n, 1..n).prop_map(move |(a, d)| Gate::cnot(a, (a + d) % n)),
                (0..n, -3.0f64..3.0).prop_map(|(q, t)| Gate::rz(t, q)),
            ];
            prop::collection::vec(gate, 0..40)
        }

        proptest! {
            #[test]
            fn depth_bounded_by_count_and_blind_to_rz(gates in arb_gates(5)) {
                let d = cnot_depth(5, &gates);
                prop_assert!(d <= cnot_count(&gates));
                let stripped: Vec<Gate> = gates.iter().filter(|g| g.is_cnot()).cloned().collect();
                prop_assert_eq!(cnot_depth(5, &stripped), d);
            }
        }
    }
}
