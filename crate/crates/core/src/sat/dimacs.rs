//! DIMACS CNF export/import and competition-format solver output.

use std::fmt::Write as _;

use super::{Lit, SatError, SatInstance, SatModel, SolveOutcome};

/// Renders the instance. Named variables are listed as `c` lines ahead of the
/// header so that a model can be mapped back to the encoding.
pub fn export(inst: &SatInstance) -> String {
    let mut out = String::new();
    for (family, index, var) in inst.names() {
        let idx: Vec<String> = index.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "c {} {}[{}]", var.id(), family, idx.join(","));
    }
    let _ = write!(out, "p cnf {} {}", inst.num_vars(), inst.num_clauses());
    for clause in inst.clauses() {
        out.push('\n');
        for l in clause {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push('0');
    }
    out
}

/// Parses a DIMACS CNF file. Comment lines are ignored; clauses may span
/// lines.
pub fn parse(text: &str) -> Result<SatInstance, SatError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let err = |message: String| SatError::Dimacs {
            line: lineno,
            message,
        };
        let t = line.trim();
        if t.is_empty() || t.starts_with('c') || t.starts_with('%') {
            continue;
        }
        if t.starts_with('p') {
            if header.is_some() {
                return Err(err("duplicate header".into()));
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(err(format!("bad header `{t}`")));
            }
            let v = parts[2]
                .parse()
                .map_err(|_| err(format!("bad variable count `{}`", parts[2])))?;
            let c = parts[3]
                .parse()
                .map_err(|_| err(format!("bad clause count `{}`", parts[3])))?;
            header = Some((v, c));
            continue;
        }
        let (nv, _) = header.ok_or_else(|| err("clause before header".into()))?;
        for tok in t.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| err(format!("bad literal `{tok}`")))?;
            if x == 0 {
                if current.is_empty() {
                    return Err(err("empty clause".into()));
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                if x.unsigned_abs() > nv as u64 {
                    return Err(err(format!("literal {x} exceeds {nv} variables")));
                }
                current.push(Lit::from_dimacs(x));
            }
        }
    }
    let (nv, nc) = header.ok_or(SatError::Dimacs {
        line: 0,
        message: "missing header".into(),
    })?;
    if !current.is_empty() {
        clauses.push(current);
    }
    if clauses.len() != nc {
        return Err(SatError::Dimacs {
            line: 0,
            message: format!("header declares {nc} clauses, found {}", clauses.len()),
        });
    }
    SatInstance::from_clauses(nv, clauses)
}

/// Reads `s`/`v` lines as printed by competition solvers. Variables the
/// solver leaves out of the model default to false.
pub fn parse_solver_output(text: &str, num_vars: u32) -> Result<SolveOutcome, SatError> {
    let mut status = None;
    let mut values = vec![false; num_vars as usize];
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("s ") {
            status = Some(match rest.trim() {
                "SATISFIABLE" => true,
                "UNSATISFIABLE" => false,
                other => return Err(SatError::External(format!("solver status `{other}`"))),
            });
        } else if let Some(rest) = t.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let x: i64 = tok
                    .parse()
                    .map_err(|_| SatError::External(format!("bad model literal `{tok}`")))?;
                if x != 0 && x.unsigned_abs() <= num_vars as u64 {
                    values[(x.unsigned_abs() - 1) as usize] = x > 0;
                }
            }
        }
    }
    match status {
        Some(true) => Ok(SolveOutcome::Sat(SatModel::from_values(values))),
        Some(false) => Ok(SolveOutcome::Unsat),
        None => Err(SatError::External("no status line in solver output".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_instance_header_only() {
        assert_eq!(export(&SatInstance::new()), "p cnf 0 0");
    }

    #[test]
    fn round_trip() {
        let mut inst = SatInstance::new();
        let a = inst.new_named_var("cnot", &[0, 2]).unwrap();
        let b = inst.new_var();
        inst.add_clause(&[a.pos(), b.neg()]).unwrap();
        inst.add_clause(&[b.pos()]).unwrap();
        let text = export(&inst);
        assert_eq!(text, "c 1 cnot[0,2]\np cnf 2 2\n1 -2 0\n2 0");
        let back = parse(&text).unwrap();
        assert_eq!(back.num_vars(), 2);
        assert_eq!(back.clauses(), inst.clauses());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse("1 2 0"), Err(SatError::Dimacs { line: 1, .. })));
        assert!(matches!(
            parse("p cnf 2 1\n1 3 0"),
            Err(SatError::Dimacs { line: 2, .. })
        ));
        assert!(parse("p cnf 2 2\n1 2 0").is_err());
        assert!(parse("p dnf 2 0").is_err());
    }

    #[test]
    fn solver_output() {
        let out = parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3).unwrap();
        assert_eq!(out.model().unwrap(), &SatModel::from_values(vec![true, false, true]));
        assert_eq!(
            parse_solver_output("s UNSATISFIABLE\n", 3).unwrap(),
            SolveOutcome::Unsat
        );
        assert!(parse_solver_output("s UNKNOWN\n", 3).is_err());
        assert!(parse_solver_output("", 3).is_err());
    }
}
