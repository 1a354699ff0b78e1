//! SAT-based, hardware-aware synthesis of {CNOT, Rz} circuits.
//!
//! A {CNOT, Rz} circuit is summarized by its phase-polynomial representation
//! ([`phasepoly::PhasePolyRep`]): the parity table of rotation terms and the
//! final parity matrix. [`synth::hopps`] finds a circuit realizing a
//! representation on a coupling map with the fewest CNOTs or the smallest
//! CNOT depth, optionally minimizing the other metric second. [`peephole`]
//! and [`blockwise`] apply it to blocks of larger circuits.

pub mod angle;
pub mod blockwise;
pub mod circuit;
pub mod coupling;
pub mod encoder;
pub mod gf2;
pub mod metrics;
pub mod oracle;
pub mod parallel;
pub mod peephole;
pub mod phasepoly;
pub mod qasm;
pub mod sat;
pub mod synth;
