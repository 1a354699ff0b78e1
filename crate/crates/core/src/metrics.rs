//! CNOT count, CNOT depth and relative improvement.

use serde::Serialize;

use crate::circuit::Circuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CircuitMetrics {
    pub cnot_count: usize,
    pub cnot_depth: usize,
}

impl CircuitMetrics {
    pub fn of(c: &Circuit) -> Self {
        CircuitMetrics {
            cnot_count: c.cnot_count(),
            cnot_depth: c.cnot_depth(),
        }
    }
}

/// `(baseline - ours) / baseline`; undefined for a zero baseline.
pub fn improvement_ratio(baseline: usize, ours: usize) -> Option<f64> {
    (baseline != 0).then(|| (baseline as f64 - ours as f64) / baseline as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Improvement {
    pub cnot_count: Option<f64>,
    pub cnot_depth: Option<f64>,
}

impl Improvement {
    pub fn between(baseline: CircuitMetrics, ours: CircuitMetrics) -> Self {
        Improvement {
            cnot_count: improvement_ratio(baseline.cnot_count, ours.cnot_count),
            cnot_depth: improvement_ratio(baseline.cnot_depth, ours.cnot_depth),
        }
    }
}
