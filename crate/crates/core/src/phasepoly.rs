//! Phase-polynomial representation of {CNOT, Rz} circuits.
//!
//! A circuit maps `|x>` to `exp(i p(x)) |Gx>` where `p` is a weighted sum of
//! parities of `x`. The parities at which rotations happen form the parity
//! table; `G` is the final parity matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::Angle;
use crate::circuit::{Circuit, Gate};
use crate::gf2::{Gf2Error, Parity, ParityMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhasePolyError {
    #[error("unsupported gate `{0}` in a {{CNOT, Rz}} circuit")]
    UnsupportedGate(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("parity table term {0} is the zero vector")]
    ZeroTerm(usize),
    #[error("{terms} terms but {angles} angles")]
    LengthMismatch { terms: usize, angles: usize },
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("malformed phase-polynomial JSON: {0}")]
    Json(String),
}

/// Rotation parities with their angles, in positional correspondence.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityTable {
    n: usize,
    terms: Vec<Parity>,
    angles: Vec<Angle>,
}

impl ParityTable {
    pub fn empty(n: usize) -> Self {
        ParityTable {
            n,
            terms: Vec::new(),
            angles: Vec::new(),
        }
    }

    pub fn new(n: usize, terms: Vec<Parity>, angles: Vec<Angle>) -> Result<Self, PhasePolyError> {
        if terms.len() != angles.len() {
            return Err(PhasePolyError::LengthMismatch {
                terms: terms.len(),
                angles: angles.len(),
            });
        }
        let mut table = ParityTable::empty(n);
        for (t, a) in terms.into_iter().zip(angles) {
            table.push(t, a)?;
        }
        Ok(table)
    }

    pub fn push(&mut self, term: Parity, angle: Angle) -> Result<(), PhasePolyError> {
        if term.len() != self.n {
            return Err(PhasePolyError::Dimension {
                expected: self.n,
                found: term.len(),
            });
        }
        if term.is_zero() {
            return Err(PhasePolyError::ZeroTerm(self.terms.len()));
        }
        self.terms.push(term);
        self.angles.push(angle);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Parity] {
        &self.terms
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Parity, &Angle)> {
        self.terms.iter().zip(&self.angles)
    }

    /// Sums the angles of repeated parities, keeping first-occurrence order,
    /// and drops entries that merge to a numeric zero rotation.
    pub fn merged(&self) -> ParityTable {
        let mut order: Vec<Parity> = Vec::new();
        let mut sums: BTreeMap<&Parity, Angle> = BTreeMap::new();
        for (t, a) in self.iter() {
            match sums.get_mut(t) {
                Some(acc) => *acc = acc.clone() + a.clone(),
                None => {
                    order.push(t.clone());
                    sums.insert(t, a.clone());
                }
            }
        }
        let mut out = ParityTable::empty(self.n);
        for t in order {
            let angle = sums[&t].normalized();
            if !angle.is_zero() {
                out.terms.push(t);
                out.angles.push(angle);
            }
        }
        out
    }
}

/// `(I, G, T)`: initial parity, final parity, and parity table.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePolyRep {
    pub initial: ParityMatrix,
    pub final_parity: ParityMatrix,
    pub table: ParityTable,
}

impl PhasePolyRep {
    pub fn new(
        initial: ParityMatrix,
        final_parity: ParityMatrix,
        table: ParityTable,
    ) -> Result<Self, PhasePolyError> {
        let n = initial.n();
        for found in [final_parity.n(), table.n()] {
            if found != n {
                return Err(PhasePolyError::Dimension { expected: n, found });
            }
        }
        if !initial.is_invertible() || !final_parity.is_invertible() {
            return Err(Gf2Error::NotInvertible.into());
        }
        Ok(PhasePolyRep {
            initial,
            final_parity,
            table,
        })
    }

    pub fn n(&self) -> usize {
        self.initial.n()
    }

    /// Same representation with duplicate terms merged and the table in
    /// parity order, so equal representations encode identically.
    pub fn canonical_table(&self) -> PhasePolyRep {
        let merged = self.table.merged();
        let mut entries: Vec<(Parity, Angle)> = merged.terms.into_iter().zip(merged.angles).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let (terms, angles) = entries.into_iter().unzip();
        PhasePolyRep {
            initial: self.initial.clone(),
            final_parity: self.final_parity.clone(),
            table: ParityTable {
                n: self.table.n,
                terms,
                angles,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RepFile::from(self)).expect("rep serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&RepFile::from(self)).expect("rep serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PhasePolyError> {
        let file: RepFile =
            serde_json::from_str(text).map_err(|e| PhasePolyError::Json(e.to_string()))?;
        file.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct RepFile {
    n: usize,
    initial: Vec<Vec<u8>>,
    #[serde(rename = "final")]
    final_parity: Vec<Vec<u8>>,
    terms: Vec<Vec<u8>>,
    angles: Vec<Angle>,
}

impl From<&PhasePolyRep> for RepFile {
    fn from(rep: &PhasePolyRep) -> Self {
        RepFile {
            n: rep.n(),
            initial: rep.initial.to_bits(),
            final_parity: rep.final_parity.to_bits(),
            terms: rep.table.terms().iter().map(Parity::to_bits).collect(),
            angles: rep.table.angles().to_vec(),
        }
    }
}

impl TryFrom<RepFile> for PhasePolyRep {
    type Error = PhasePolyError;

    fn try_from(f: RepFile) -> Result<Self, Self::Error> {
        let square = |m: &Vec<Vec<u8>>| -> Result<(), PhasePolyError> {
            if m.len() != f.n {
                return Err(PhasePolyError::Dimension {
                    expected: f.n,
                    found: m.len(),
                });
            }
            Ok(())
        };
        square(&f.initial)?;
        square(&f.final_parity)?;
        let initial = ParityMatrix::from_bits(&f.initial)?;
        let final_parity = ParityMatrix::from_bits(&f.final_parity)?;
        let terms = f
            .terms
            .iter()
            .map(|t| Parity::from_bits(t))
            .collect::<Result<Vec<_>, _>>()?;
        let table = ParityTable::new(f.n, terms, f.angles)?;
        PhasePolyRep::new(initial, final_parity, table)
    }
}

/// Normal form used for equivalence: final parity plus merged phase map.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalRep {
    pub final_parity: ParityMatrix,
    pub phase_map: BTreeMap<Parity, Angle>,
}

impl CanonicalRep {
    /// Exact parity comparison; angles within the shared tolerance.
    pub fn approx_eq(&self, other: &CanonicalRep) -> bool {
        self.final_parity == other.final_parity
            && self.phase_map.len() == other.phase_map.len()
            && self
                .phase_map
                .iter()
                .zip(&other.phase_map)
                .all(|((ka, va), (kb, vb))| ka == kb && va.approx_eq(vb))
    }
}

/// Tracks the circuit parity from `initial`, recording the active row at each Rz.
pub fn extract_rep(c: &Circuit, initial: &ParityMatrix) -> Result<PhasePolyRep, PhasePolyError> {
    let n = initial.n();
    if c.num_qubits() != n {
        return Err(PhasePolyError::Dimension {
            expected: n,
            found: c.num_qubits(),
        });
    }
    if !initial.is_invertible() {
        return Err(Gf2Error::NotInvertible.into());
    }
    let mut parity = initial.clone();
    let mut table = ParityTable::empty(n);
    for g in c.gates() {
        match g {
            Gate::Cnot { control, target } => parity.apply_cnot(*control, *target)?,
            Gate::Rz { angle, qubit } => table.push(parity.row(*qubit).clone(), angle.clone())?,
            Gate::Opaque { name, .. } => return Err(PhasePolyError::UnsupportedGate(name.clone())),
        }
    }
    Ok(PhasePolyRep {
        initial: initial.clone(),
        final_parity: parity,
        table,
    })
}

pub fn canonicalize(rep: &PhasePolyRep) -> CanonicalRep {
    let merged = rep.table.merged();
    CanonicalRep {
        final_parity: rep.final_parity.clone(),
        phase_map: merged
            .terms
            .into_iter()
            .zip(merged.angles)
            .collect(),
    }
}

pub fn equivalent(c1: &Circuit, c2: &Circuit, initial: &ParityMatrix) -> Result<bool, PhasePolyError> {
    if c1.num_qubits() != c2.num_qubits() {
        return Err(PhasePolyError::Dimension {
            expected: c1.num_qubits(),
            found: c2.num_qubits(),
        });
    }
    let a = canonicalize(&extract_rep(c1, initial)?);
    let b = canonicalize(&extract_rep(c2, initial)?);
    Ok(a.approx_eq(&b))
}

/// Checks a circuit against a representation it was synthesized from.
pub fn realizes(c: &Circuit, rep: &PhasePolyRep) -> Result<bool, PhasePolyError> {
    Ok(canonicalize(&extract_rep(c, &rep.initial)?).approx_eq(&canonicalize(rep)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bits(rows: &[&[u8]]) -> Vec<Vec<u8>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    fn p(b: &[u8]) -> Parity {
        Parity::from_bits(b).unwrap()
    }

    /// Three-qubit QAOA cost layer on a line, one ZZ rotation per edge pair.
    pub(crate) fn qaoa3() -> Circuit {
        Circuit::from_gates(
            3,
            vec![
                Gate::cnot(1, 2),
                Gate::rz(0.1, 2),
                Gate::cnot(0, 1),
                Gate::rz(0.2, 1),
                Gate::cnot(1, 2),
                Gate::rz(0.3, 2),
                Gate::cnot(1, 2),
                Gate::cnot(2, 1),
                Gate::cnot(0, 1),
                Gate::cnot(1, 2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn extraction_of_worked_example() {
        let rep = extract_rep(&qaoa3(), &ParityMatrix::identity(3)).unwrap();
        let mut terms: Vec<Vec<u8>> = rep.table.terms().iter().map(Parity::to_bits).collect();
        terms.sort();
        let mut expected = bits(&[&[1, 0, 1], &[1, 1, 0], &[0, 1, 1]]);
        expected.sort();
        assert_eq!(terms, expected);
        assert_eq!(
            rep.final_parity.to_bits(),
            bits(&[&[1, 0, 0], &[0, 0, 1], &[0, 1, 0]])
        );
    }

    #[test]
    fn empty_and_single_cnot() {
        let rep = extract_rep(&Circuit::new(3), &ParityMatrix::identity(3)).unwrap();
        assert!(rep.table.is_empty());
        assert_eq!(rep.final_parity, ParityMatrix::identity(3));

        let c = Circuit::from_gates(3, vec![Gate::cnot(1, 2), Gate::rz(0.7, 2)]).unwrap();
        let rep = extract_rep(&c, &ParityMatrix::identity(3)).unwrap();
        assert_eq!(rep.table.terms(), &[p(&[0, 1, 1])]);
        assert_eq!(rep.final_parity.row(2), &p(&[0, 1, 1]));
    }

    #[test]
    fn opaque_gate_rejected() {
        let c = Circuit::from_gates(1, vec![Gate::opaque("h", vec![0])]).unwrap();
        assert_eq!(
            extract_rep(&c, &ParityMatrix::identity(1)),
            Err(PhasePolyError::UnsupportedGate("h".into()))
        );
    }

    #[test]
    fn canonical_merging() {
        let id = ParityMatrix::identity(2);
        let t = p(&[1, 1]);
        let cancel = PhasePolyRep::new(
            id.clone(),
            id.clone(),
            ParityTable::new(2, vec![t.clone(), t.clone()], vec![0.4.into(), (-0.4).into()]).unwrap(),
        )
        .unwrap();
        assert!(canonicalize(&cancel).phase_map.is_empty());

        let t2 = p(&[0, 1]);
        let merged = PhasePolyRep::new(
            id.clone(),
            id.clone(),
            ParityTable::new(
                2,
                vec![t.clone(), t2.clone(), t.clone()],
                vec![1.0.into(), 2.0.into(), 6.0.into()],
            )
            .unwrap(),
        )
        .unwrap();
        let canon = canonicalize(&merged);
        assert_eq!(canon.phase_map.len(), 2);
        assert!((canon.phase_map[&t].constant() - (7.0 - 2.0 * PI)).abs() < 1e-12);
        assert_eq!(canon.phase_map[&t2].constant(), 2.0);
    }

    #[test]
    fn symbolic_terms_survive_merging() {
        let id = ParityMatrix::identity(1);
        let t = p(&[1]);
        let rep = PhasePolyRep::new(
            id.clone(),
            id,
            ParityTable::new(1, vec![t.clone(), t.clone()], vec![Angle::param("g"), (2.0 * PI).into()])
                .unwrap(),
        )
        .unwrap();
        assert_eq!(canonicalize(&rep).phase_map[&t], Angle::param("g"));
    }

    #[test]
    fn equivalence_cases() {
        let id = ParityMatrix::identity(3);
        let c = qaoa3();
        let mut padded = c.clone();
        padded.push(Gate::rz(0.0, 1)).unwrap();
        assert!(equivalent(&c, &padded, &id).unwrap());

        let mut gates = c.gates().to_vec();
        gates.remove(gates.len() - 1);
        let dropped = Circuit::from_gates(3, gates).unwrap();
        assert!(!equivalent(&c, &dropped, &id).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let rep = extract_rep(&qaoa3(), &ParityMatrix::identity(3)).unwrap();
        let back = PhasePolyRep::from_json(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
        let text = r#"{"n":2,"initial":[[1,0],[0,1]],"final":[[1,0],[1,1]],"terms":[[1,1]],"angles":["gamma"]}"#;
        let rep = PhasePolyRep::from_json(text).unwrap();
        assert_eq!(rep.table.angles()[0], Angle::param("gamma"));
        assert!(PhasePolyRep::from_json(
            r#"{"n":1,"initial":[[1]],"final":[[1]],"terms":[[0]],"angles":[1]}"#
        )
        .is_err());
        assert!(PhasePolyRep::from_json(
            r#"{"n":2,"initial":[[1,1],[1,1]],"final":[[1,0],[0,1]],"terms":[],"angles":[]}"#
        )
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_circuit(n: usize) -> impl Strategy<Value = Circuit> {
            let gate = prop_oneof![
                (0..n, 1..n).prop_map(move |(a, d)| Gate::cnot(a, (a + d) % n)),
                (0..n, -3.0f64..3.0).prop_map(|(q, t)| Gate::rz(t, q)),
            ];
            prop::collection::vec(gate, 0..30)
                .prop_map(move |g| Circuit::from_gates(n, g).unwrap())
        }

        proptest! {
            #[test]
            fn final_parity_is_product_of_row_ops(c in arb_circuit(4)) {
                let id = ParityMatrix::identity(4);
                let rep = extract_rep(&c, &id).unwrap();
                let mut product = ParityMatrix::identity(4);
                for g in c.gates() {
                    if let Gate::Cnot { control, target } = *g {
                        let e = ParityMatrix::identity(4).with_cnot(control, target).unwrap();
                        product = e.mul(&product).unwrap();
                    }
                }
                prop_assert_eq!(rep.final_parity, product);
            }

            #[test]
            fn equivalence_is_reflexive_and_symmetric(a in arb_circuit(3), b in arb_circuit(3)) {
                let id = ParityMatrix::identity(3);
                prop_assert!(equivalent(&a, &a, &id).unwrap());
                prop_assert_eq!(equivalent(&a, &b, &id).unwrap(), equivalent(&b, &a, &id).unwrap());
            }
        }
    }
}
