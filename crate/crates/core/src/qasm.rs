//! OpenQASM 2.0 subset: `qreg`, `creg`, `cx`, `rz`, `barrier`, `measure`.
//!
//! Every other gate application becomes [`Gate::Opaque`] and is written back
//! verbatim. Multiple quantum registers are flattened in declaration order.

use std::fmt::Write as _;

use thiserror::Error;

use crate::angle::Angle;
use crate::circuit::{Circuit, Gate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct QasmError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// A parsed program: the circuit plus classical registers for `measure`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub circuit: Circuit,
    pub cregs: Vec<(String, usize)>,
}

pub fn parse(text: &str) -> Result<Program, QasmError> {
    Parser::new(text).program()
}

/// Parses a program and keeps only the circuit.
pub fn parse_circuit(text: &str) -> Result<Circuit, QasmError> {
    parse(text).map(|p| p.circuit)
}

pub fn write(circuit: &Circuit) -> String {
    write_program(&Program {
        circuit: circuit.clone(),
        cregs: Vec::new(),
    })
}

pub fn write_program(program: &Program) -> String {
    let c = &program.circuit;
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(out, "qreg q[{}];", c.num_qubits()).unwrap();
    for (name, size) in &program.cregs {
        writeln!(out, "creg {name}[{size}];").unwrap();
    }
    for g in c.gates() {
        match g {
            Gate::Cnot { control, target } => {
                writeln!(out, "cx q[{control}],q[{target}];").unwrap()
            }
            Gate::Rz { angle, qubit } => writeln!(out, "rz({angle}) q[{qubit}];").unwrap(),
            Gate::Opaque {
                name,
                qubits,
                params,
            } if name == "measure" => {
                let dest = params.first().map(String::as_str).unwrap_or("c[0]");
                writeln!(out, "measure q[{}] -> {dest};", qubits[0]).unwrap();
            }
            Gate::Opaque {
                name,
                qubits,
                params,
            } => {
                out.push_str(name);
                if !params.is_empty() {
                    write!(out, "({})", params.join(",")).unwrap();
                }
                let args: Vec<String> = qubits.iter().map(|q| format!("q[{q}]")).collect();
                writeln!(out, " {};", args.join(",")).unwrap();
            }
        }
    }
    out
}

struct Register {
    name: String,
    offset: usize,
    size: usize,
}

#[derive(Clone, Copy)]
enum Arg {
    Whole(usize, usize),
    Single(usize),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    qregs: Vec<Register>,
    cregs: Vec<(String, usize)>,
    gates: Vec<Gate>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            line: 1,
            col: 1,
            qregs: Vec::new(),
            cregs: Vec::new(),
            gates: Vec::new(),
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, QasmError> {
        Err(QasmError {
            line: self.line,
            col: self.col,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.src[self.pos..].starts_with("//") => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                Some('/') if self.src[self.pos..].starts_with("/*") => {
                    while self.peek().is_some() && !self.src[self.pos..].starts_with("*/") {
                        self.bump();
                    }
                    self.bump();
                    self.bump();
                }
                _ => return,
            }
        }
    }

    fn expect(&mut self, ch: char) -> Result<(), QasmError> {
        self.skip_trivia();
        match self.peek() {
            Some(c) if c == ch => {
                self.bump();
                Ok(())
            }
            Some(c) => self.err(format!("expected `{ch}`, found `{c}`")),
            None => self.err(format!("expected `{ch}`, found end of input")),
        }
    }

    fn ident(&mut self) -> Result<String, QasmError> {
        self.skip_trivia();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_alphabetic() || c == '_' => {}
            Some(c) => return self.err(format!("expected identifier, found `{c}`")),
            None => return self.err("expected identifier, found end of input"),
        }
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
            self.bump();
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn integer(&mut self) -> Result<usize, QasmError> {
        self.skip_trivia();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        self.src[start..self.pos]
            .parse()
            .or_else(|_| self.err("integer too large"))
    }

    fn program(mut self) -> Result<Program, QasmError> {
        loop {
            self.skip_trivia();
            if self.peek().is_none() {
                break;
            }
            self.statement()?;
        }
        let n = self.qregs.iter().map(|r| r.size).sum();
        let circuit = Circuit::from_gates(n, self.gates).map_err(|e| QasmError {
            line: self.line,
            col: self.col,
            message: e.to_string(),
        })?;
        Ok(Program {
            circuit,
            cregs: self.cregs,
        })
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let (line, col) = (self.line, self.col);
        let word = self.ident()?;
        match word.as_str() {
            "OPENQASM" => {
                self.skip_trivia();
                while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
                    self.bump();
                }
                self.expect(';')
            }
            "include" => {
                self.expect('"')?;
                while !matches!(self.peek(), None | Some('"')) {
                    self.bump();
                }
                self.expect('"')?;
                self.expect(';')
            }
            "qreg" | "creg" => {
                let name = self.ident()?;
                self.expect('[')?;
                let size = self.integer()?;
                self.expect(']')?;
                self.expect(';')?;
                if word == "qreg" {
                    if self.qregs.iter().any(|r| r.name == name) {
                        return Err(QasmError {
                            line,
                            col,
                            message: format!("register `{name}` declared twice"),
                        });
                    }
                    let offset = self.qregs.iter().map(|r| r.size).sum();
                    self.qregs.push(Register { name, offset, size });
                } else {
                    self.cregs.push((name, size));
                }
                Ok(())
            }
            "gate" | "opaque" | "if" => Err(QasmError {
                line,
                col,
                message: format!("unsupported statement `{word}`"),
            }),
            "measure" => {
                let qubits = self.expand_arg()?;
                self.skip_trivia();
                if !self.src[self.pos..].starts_with("->") {
                    return self.err("expected `->`");
                }
                self.bump();
                self.bump();
                self.skip_trivia();
                let start = self.pos;
                while !matches!(self.peek(), None | Some(';')) {
                    self.bump();
                }
                let dest = self.src[start..self.pos].trim().to_string();
                self.expect(';')?;
                if qubits.len() != 1 {
                    return Err(QasmError {
                        line,
                        col,
                        message: "register-wide measure is not supported".into(),
                    });
                }
                self.gates.push(Gate::Opaque {
                    name: "measure".into(),
                    qubits,
                    params: vec![dest],
                });
                Ok(())
            }
            _ => self.gate_application(word, line, col),
        }
    }

    fn params(&mut self) -> Result<Vec<String>, QasmError> {
        self.skip_trivia();
        if self.peek() != Some('(') {
            return Ok(Vec::new());
        }
        self.bump();
        let mut params = Vec::new();
        let mut depth = 0usize;
        let mut start = self.pos;
        loop {
            match self.peek() {
                None => return self.err("unterminated parameter list"),
                Some('(') => depth += 1,
                Some(')') if depth == 0 => {
                    let p = self.src[start..self.pos].trim();
                    if !p.is_empty() || !params.is_empty() {
                        params.push(p.to_string());
                    }
                    self.bump();
                    return Ok(params);
                }
                Some(')') => depth -= 1,
                Some(',') if depth == 0 => {
                    params.push(self.src[start..self.pos].trim().to_string());
                    self.bump();
                    start = self.pos;
                    continue;
                }
                _ => {}
            }
            self.bump();
        }
    }

    fn arg(&mut self) -> Result<Arg, QasmError> {
        let name = self.ident()?;
        let Some(reg) = self.qregs.iter().find(|r| r.name == name) else {
            return self.err(format!("unknown quantum register `{name}`"));
        };
        let (offset, size) = (reg.offset, reg.size);
        self.skip_trivia();
        if self.peek() == Some('[') {
            self.bump();
            let idx = self.integer()?;
            self.expect(']')?;
            if idx >= size {
                return self.err(format!("index {idx} out of range for `{name}[{size}]`"));
            }
            Ok(Arg::Single(offset + idx))
        } else {
            Ok(Arg::Whole(offset, size))
        }
    }

    fn expand_arg(&mut self) -> Result<Vec<usize>, QasmError> {
        Ok(match self.arg()? {
            Arg::Single(q) => vec![q],
            Arg::Whole(off, size) => (off..off + size).collect(),
        })
    }

    fn gate_application(&mut self, name: String, line: usize, col: usize) -> Result<(), QasmError> {
        let params = self.params()?;
        let mut args = vec![self.arg()?];
        loop {
            self.skip_trivia();
            if self.peek() == Some(',') {
                self.bump();
                args.push(self.arg()?);
            } else {
                break;
            }
        }
        self.expect(';')?;
        let fail = |message: String| QasmError { line, col, message };

        if name == "barrier" {
            let qubits = args
                .iter()
                .flat_map(|a| match *a {
                    Arg::Single(q) => q..q + 1,
                    Arg::Whole(off, size) => off..off + size,
                })
                .collect();
            self.gates.push(Gate::Opaque {
                name,
                qubits,
                params,
            });
            return Ok(());
        }

        // Register arguments broadcast; all whole registers must agree in size.
        let width = args.iter().try_fold(None, |acc, a| match (*a, acc) {
            (Arg::Single(_), acc) => Ok(acc),
            (Arg::Whole(_, s), None) => Ok(Some(s)),
            (Arg::Whole(_, s), Some(w)) if s == w => Ok(Some(w)),
            _ => Err(fail("mismatched register sizes in broadcast".into())),
        })?;
        let reps = width.unwrap_or(1);
        for rep in 0..reps {
            let qubits: Vec<usize> = args
                .iter()
                .map(|a| match *a {
                    Arg::Single(q) => q,
                    Arg::Whole(off, _) => off + rep,
                })
                .collect();
            let gate = match name.as_str() {
                "cx" | "CX" => {
                    if qubits.len() != 2 || !params.is_empty() {
                        return Err(fail("cx takes two qubits and no parameters".into()));
                    }
                    Gate::cnot(qubits[0], qubits[1])
                }
                "rz" => {
                    if qubits.len() != 1 || params.len() != 1 {
                        return Err(fail("rz takes one parameter and one qubit".into()));
                    }
                    let angle = Angle::parse(&params[0]).map_err(|e| fail(e.to_string()))?;
                    Gate::Rz {
                        angle,
                        qubit: qubits[0],
                    }
                }
                _ => Gate::Opaque {
                    name: name.clone(),
                    qubits,
                    params: params.clone(),
                },
            };
            let n: usize = self.qregs.iter().map(|r| r.size).sum();
            let mut probe = Circuit::new(n);
            probe.push(gate.clone()).map_err(|e| fail(e.to_string()))?;
            self.gates.push(gate);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subset() {
        let src = r#"
            OPENQASM 2.0;
            include "qelib1.inc";
            qreg q[3];
            creg c[3];
            // a comment
            cx q[0], q[1];
            rz(pi/2) q[1];
            h q[2];
            barrier q;
            u3(0.1, 0.2, 0.3) q[0];
            measure q[2] -> c[2];
        "#;
        let p = parse(src).unwrap();
        let g = p.circuit.gates();
        assert_eq!(p.circuit.num_qubits(), 3);
        assert_eq!(g[0], Gate::cnot(0, 1));
        assert!(matches!(&g[1], Gate::Rz { qubit: 1, .. }));
        assert_eq!(g[2], Gate::opaque("h", vec![2]));
        assert_eq!(g[3], Gate::opaque("barrier", vec![0, 1, 2]));
        assert!(matches!(&g[4], Gate::Opaque { params, .. } if params.len() == 3));
        assert_eq!(p.cregs, vec![("c".to_string(), 3)]);
        let again = parse(&write_program(&p)).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn flattens_registers_and_broadcasts() {
        let c = parse_circuit("qreg a[2]; qreg b[2]; cx a, b; h b[1];").unwrap();
        assert_eq!(c.num_qubits(), 4);
        assert_eq!(c.gates()[0], Gate::cnot(0, 2));
        assert_eq!(c.gates()[1], Gate::cnot(1, 3));
        assert_eq!(c.gates()[2], Gate::opaque("h", vec![3]));
    }

    #[test]
    fn symbolic_rz() {
        let c = parse_circuit("qreg q[1]; rz(2*gamma) q[0];").unwrap();
        let Gate::Rz { angle, .. } = &c.gates()[0] else {
            panic!()
        };
        assert_eq!(angle.params()["gamma"], 2.0);
        assert_eq!(write(&c).lines().last().unwrap(), "rz(2*gamma) q[0];");
    }

    #[test]
    fn errors_carry_position() {
        let e = parse("qreg q[2];\ncx q[0], q[5];").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("out of range"), "{e}");

        let e = parse("qreg q[2];\n  cx q[0] q[1];").unwrap_err();
        assert_eq!((e.line, e.col), (2, 11));

        let e = parse("qreg q[2]; cx q[0], q[0];").unwrap_err();
        assert!(e.message.contains("twice"));

        assert!(parse("gate foo a { x a; }").is_err());
        assert!(parse("qreg q[1]; rz(1, 2) q[0];").is_err());
    }

    #[test]
    fn empty_register_program() {
        let c = parse_circuit("OPENQASM 2.0;\nqreg q[2];\n").unwrap();
        assert_eq!(c.num_qubits(), 2);
        assert!(c.is_empty());
    }
}
