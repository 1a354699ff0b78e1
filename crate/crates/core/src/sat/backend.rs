//! Pluggable solver backends.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{dimacs, Cdcl, SatError, SatInstance, SatModel, SolveOutcome};

/// Environment variable selecting the solver: `internal` or a path to a
/// DIMACS solver executable.
pub const SOLVER_ENV: &str = "HOPPS_SOLVER";

pub trait SatBackend: Send {
    /// Solves `inst`. A backend may be called repeatedly with a growing
    /// instance.
    fn solve(
        &mut self,
        inst: &SatInstance,
        deadline: Option<Instant>,
    ) -> Result<SolveOutcome, SatError>;

    fn name(&self) -> &str;
}

/// In-process CDCL. Successive calls on the same instance only feed the
/// clauses added since the previous call, so learnt clauses carry over.
#[derive(Default)]
pub struct InternalSolver {
    cdcl: Cdcl,
    fed: usize,
    fed_vars: u32,
}

impl InternalSolver {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SatBackend for InternalSolver {
    fn solve(
        &mut self,
        inst: &SatInstance,
        deadline: Option<Instant>,
    ) -> Result<SolveOutcome, SatError> {
        if inst.num_clauses() < self.fed || inst.num_vars() < self.fed_vars {
            *self = InternalSolver::new();
        }
        self.cdcl.reserve_vars(inst.num_vars() as usize);
        for c in &inst.clauses()[self.fed..] {
            self.cdcl.add_clause(c);
        }
        self.fed = inst.num_clauses();
        self.fed_vars = inst.num_vars();
        if self.cdcl.solve(deadline)? {
            let mut values = self.cdcl.model().to_vec();
            values.truncate(inst.num_vars() as usize);
            Ok(SolveOutcome::Sat(SatModel::from_values(values)))
        } else {
            Ok(SolveOutcome::Unsat)
        }
    }

    fn name(&self) -> &str {
        "internal"
    }
}

/// Runs an external executable as `program <file.cnf>` and reads `s`/`v`
/// lines from its stdout.
pub struct ExternalSolver {
    program: PathBuf,
}

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalSolver {
            program: program.into(),
        }
    }
}

impl SatBackend for ExternalSolver {
    fn solve(
        &mut self,
        inst: &SatInstance,
        deadline: Option<Instant>,
    ) -> Result<SolveOutcome, SatError> {
        let io = |e: std::io::Error| SatError::External(e.to_string());
        let mut file = tempfile::Builder::new()
            .suffix(".cnf")
            .tempfile()
            .map_err(io)?;
        file.write_all(dimacs::export(inst).as_bytes()).map_err(io)?;
        file.write_all(b"\n").map_err(io)?;
        file.flush().map_err(io)?;

        let mut child = Command::new(&self.program)
            .arg(file.path())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SatError::External(format!("{}: {e}", self.program.display())))?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        loop {
            if child.try_wait().map_err(io)?.is_some() {
                break;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SatError::Timeout);
            }
            std::thread::sleep(Duration::from_millis(2));
        }
        let text = reader
            .join()
            .map_err(|_| SatError::External("output reader panicked".into()))?
            .map_err(io)?;
        dimacs::parse_solver_output(&text, inst.num_vars())
    }

    fn name(&self) -> &str {
        "external"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SolverChoice {
    #[default]
    Internal,
    External(PathBuf),
}

impl SolverChoice {
    pub fn parse(s: &str) -> Self {
        match s.trim() {
            "" | "internal" => SolverChoice::Internal,
            path => SolverChoice::External(PathBuf::from(path)),
        }
    }

    pub fn from_env() -> Self {
        std::env::var(SOLVER_ENV)
            .map(|s| SolverChoice::parse(&s))
            .unwrap_or_default()
    }

    pub fn backend(&self) -> Box<dyn SatBackend> {
        match self {
            SolverChoice::Internal => Box::new(InternalSolver::new()),
            SolverChoice::External(p) => Box::new(ExternalSolver::new(p.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incremental_feeding() {
        let mut inst = SatInstance::new();
        let a = inst.new_var();
        let b = inst.new_var();
        inst.add_clause(&[a.pos(), b.pos()]).unwrap();
        let mut s = InternalSolver::new();
        assert!(s.solve(&inst, None).unwrap().is_sat());
        inst.add_clause(&[a.neg()]).unwrap();
        let out = s.solve(&inst, None).unwrap();
        assert!(out.model().unwrap().var(b));
        inst.add_clause(&[b.neg()]).unwrap();
        assert_eq!(s.solve(&inst, None).unwrap(), SolveOutcome::Unsat);
        // A different, smaller instance resets the solver.
        let mut fresh = SatInstance::new();
        fresh.new_var();
        assert!(s.solve(&fresh, None).unwrap().is_sat());
    }

    #[test]
    fn expired_deadline() {
        let mut inst = SatInstance::new();
        inst.new_var();
        let past = Instant::now() - Duration::from_millis(1);
        assert_eq!(
            InternalSolver::new().solve(&inst, Some(past)),
            Err(SatError::Timeout)
        );
    }

    #[test]
    fn choice_parsing() {
        assert_eq!(SolverChoice::parse("internal"), SolverChoice::Internal);
        assert_eq!(
            SolverChoice::parse("/usr/bin/kissat"),
            SolverChoice::External("/usr/bin/kissat".into())
        );
    }

    #[test]
    fn missing_external_program() {
        let mut s = ExternalSolver::new("/nonexistent/solver");
        assert!(matches!(
            s.solve(&SatInstance::new(), None),
            Err(SatError::External(_))
        ));
    }
}
