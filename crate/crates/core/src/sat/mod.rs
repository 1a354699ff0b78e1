//! CNF construction, cardinality constraints, and solving.

mod backend;
mod card;
mod cdcl;
pub mod dimacs;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Not;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use backend::{ExternalSolver, InternalSolver, SatBackend, SolverChoice};
pub use cdcl::Cdcl;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("literal uses variable {var} but only {num_vars} are allocated")]
    UnallocatedVar { var: u32, num_vars: u32 },
    #[error("empty clause")]
    EmptyClause,
    #[error("cannot make {k} of {n} literals true")]
    Infeasible { k: usize, n: usize },
    #[error("name {family}{index:?} already bound")]
    DuplicateName { family: String, index: Vec<usize> },
    #[error("solver time budget exhausted")]
    Timeout,
    #[error("external solver: {0}")]
    External(String),
    #[error("DIMACS line {line}: {message}")]
    Dimacs { line: usize, message: String },
}

/// Positive 1-based variable id, as in DIMACS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    pub fn new(id: u32) -> Var {
        assert!(id >= 1, "variable ids start at 1");
        Var(id)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, true)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(var.0 << 1 | negated as u32)
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(x: i64) -> Lit {
        assert!(x != 0 && x.unsigned_abs() <= u32::MAX as u64 >> 1);
        Lit::new(Var(x.unsigned_abs() as u32), x < 0)
    }

    /// Dense 0-based code: `2 * (var - 1) + negated`.
    #[inline]
    pub(crate) fn code(self) -> usize {
        (self.0 - 2) as usize
    }

    #[cfg(test)]
    pub(crate) fn from_code(code: usize) -> Lit {
        Lit(code as u32 + 2)
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A CNF formula under construction, with named variable families.
#[derive(Debug, Clone, Default)]
pub struct SatInstance {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    names: BTreeMap<(String, Vec<usize>), Var>,
}

impl SatInstance {
    pub fn new() -> Self {
        SatInstance::default()
    }

    /// Instance with `num_vars` anonymous variables and the given clauses.
    pub fn from_clauses(num_vars: u32, clauses: Vec<Vec<Lit>>) -> Result<Self, SatError> {
        let mut inst = SatInstance {
            num_vars,
            ..Default::default()
        };
        for c in clauses {
            inst.check(&c)?;
            inst.clauses.push(c);
        }
        Ok(inst)
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, &[usize], Var)> {
        self.names
            .iter()
            .map(|((f, idx), v)| (f.as_str(), idx.as_slice(), *v))
    }

    pub fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        Var(self.num_vars)
    }

    pub fn new_named_var(&mut self, family: &str, index: &[usize]) -> Result<Var, SatError> {
        let key = (family.to_string(), index.to_vec());
        if self.names.contains_key(&key) {
            return Err(SatError::DuplicateName {
                family: key.0,
                index: key.1,
            });
        }
        let v = self.new_var();
        self.names.insert(key, v);
        Ok(v)
    }

    pub fn named(&self, family: &str, index: &[usize]) -> Option<Var> {
        self.names.get(&(family.to_string(), index.to_vec())).copied()
    }

    fn check(&self, lits: &[Lit]) -> Result<(), SatError> {
        match lits.iter().find(|l| l.var().0 > self.num_vars) {
            Some(l) => Err(SatError::UnallocatedVar {
                var: l.var().0,
                num_vars: self.num_vars,
            }),
            None => Ok(()),
        }
    }

    pub fn add_clause(&mut self, lits: &[Lit]) -> Result<(), SatError> {
        if lits.is_empty() {
            return Err(SatError::EmptyClause);
        }
        self.check(lits)?;
        self.clauses.push(lits.to_vec());
        Ok(())
    }

    pub(crate) fn push_clause(&mut self, lits: Vec<Lit>) {
        debug_assert!(!lits.is_empty());
        debug_assert!(self.check(&lits).is_ok());
        self.clauses.push(lits);
    }

    /// `a -> b`.
    pub fn add_implication(&mut self, a: Lit, b: Lit) -> Result<(), SatError> {
        self.add_clause(&[!a, b])
    }

    pub fn at_most_k(&mut self, lits: &[Lit], k: usize) -> Result<(), SatError> {
        self.check(lits)?;
        card::at_most_k(self, lits, k);
        Ok(())
    }

    pub fn at_least_k(&mut self, lits: &[Lit], k: usize) -> Result<(), SatError> {
        self.check(lits)?;
        card::at_least_k(self, lits, k)
    }

    pub fn exactly_one(&mut self, lits: &[Lit]) -> Result<(), SatError> {
        self.at_least_k(lits, 1)?;
        self.at_most_k(lits, 1)
    }

    /// Evaluates every clause under a full assignment.
    pub fn is_satisfied_by(&self, model: &SatModel) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| model.value(l)))
    }
}

/// Total assignment over the instance variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatModel {
    values: Vec<bool>,
}

impl SatModel {
    pub fn from_values(values: Vec<bool>) -> Self {
        SatModel { values }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn var(&self, v: Var) -> bool {
        self.values[(v.0 - 1) as usize]
    }

    pub fn value(&self, l: Lit) -> bool {
        self.var(l.var()) != l.is_negated()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(SatModel),
    Unsat,
}

impl SolveOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveOutcome::Sat(_))
    }

    pub fn model(&self) -> Option<&SatModel> {
        match self {
            SolveOutcome::Sat(m) => Some(m),
            SolveOutcome::Unsat => None,
        }
    }
}

/// Default per-call budget.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

/// One-shot solve with the internal solver.
pub fn solve(inst: &SatInstance, timeout: Option<Duration>) -> Result<SolveOutcome, SatError> {
    let deadline = timeout.map(|t| Instant::now() + t);
    InternalSolver::new().solve(inst, deadline)
}
