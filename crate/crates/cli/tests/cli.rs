use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

/// ZZ gadgets on the three qubit pairs followed by a SWAP of qubits 1 and 2.
const QAOA3_QASM: &str = "OPENQASM 2.0;
include \"qelib1.inc\";
qreg q[3];
cx q[0],q[2];
rz(0.1) q[2];
cx q[0],q[2];
cx q[0],q[1];
rz(0.2) q[1];
cx q[0],q[1];
cx q[1],q[2];
rz(0.3) q[2];
cx q[1],q[2];
cx q[1],q[2];
cx q[2],q[1];
cx q[1],q[2];
";

fn qaoa3_rep() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/qaoa3_rep.json")
}

fn hopps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopps"))
        .args(args)
        .env_remove("HOPPS_SOLVER")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn qasm(n: usize, body: &str) -> String {
    format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{n}];\n{body}")
}

#[test]
fn extract_recovers_terms_and_final_parity() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "qaoa3.qasm", QAOA3_QASM);
    let out = hopps(&["extract", &file]);
    assert!(out.status.success());
    let rep = stdout_json(&out);
    assert_eq!(rep["final"], serde_json::json!([[1, 0, 0], [0, 0, 1], [0, 1, 0]]));
    let terms = rep["terms"].as_array().unwrap();
    for t in [[1, 0, 1], [1, 1, 0], [0, 1, 1]] {
        assert!(terms.contains(&serde_json::json!(t)), "missing term {t:?}");
    }
    assert_eq!(terms.len(), 3);
}

#[test]
fn extract_empty_register() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "empty.qasm", &qasm(2, ""));
    let rep = stdout_json(&hopps(&["extract", &file]));
    assert_eq!(rep["final"], serde_json::json!([[1, 0], [0, 1]]));
    assert_eq!(rep["terms"], serde_json::json!([]));
}

#[test]
fn extract_rejects_hadamard() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "h.qasm", &qasm(2, "h q[0];\n"));
    let out = hopps(&["extract", &file]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported gate"));
}

#[test]
fn parse_errors_exit_2_and_usage_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "bad.qasm", &qasm(2, "cx q[0],q[7];\n"));
    assert_eq!(hopps(&["metrics", &file]).status.code(), Some(2));
    assert_eq!(hopps(&["synth"]).status.code(), Some(1));
    assert_eq!(hopps(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hopps(&["metrics", &file, "--coupling-map"]).status.code(), Some(1));
    assert_eq!(hopps(&["--help"]).status.code(), Some(0));
}

#[test]
fn synth_matches_oracle_pins() {
    let rep = qaoa3_rep();
    let pins = stdout_json(&hopps(&["oracle", rep.to_str().unwrap(), "--coupling-map", "line:3"]));
    let golden: Value =
        serde_json::from_str(include_str!("../../core/tests/data/qaoa3_line3_oracle.json")).unwrap();
    assert_eq!(pins, golden);

    let dir = TempDir::new().unwrap();
    let out_qasm = dir.path().join("out.qasm");
    let out = hopps(&[
        "synth",
        rep.to_str().unwrap(),
        "--coupling-map",
        "line:3",
        "--doubly",
        "-o",
        out_qasm.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["cnot_count"], pins["cnot"]["min_count"]);
    assert_eq!(report["cnot_depth"], pins["cnot"]["min_depth"]);
    assert_eq!(report["optimal"], true);
    assert!(report["solve_time_s"].as_f64().unwrap() >= 0.0);
    let text = fs::read_to_string(&out_qasm).unwrap();
    assert_eq!(text.matches("cx ").count(), 5);
}

#[test]
fn synth_identity_is_empty() {
    let dir = TempDir::new().unwrap();
    let rep = write(
        &dir,
        "id.json",
        r#"{"n":2,"initial":[[1,0],[0,1]],"final":[[1,0],[0,1]],"terms":[],"angles":[]}"#,
    );
    let report = stdout_json(&hopps(&["synth", &rep, "--coupling-map", "line:2"]));
    assert_eq!(report["cnot_count"], 0);
    assert_eq!(report["cnot_depth"], 0);
    assert!(!report["qasm"].as_str().unwrap().contains("cx"));
}

#[test]
fn synth_exit_codes() {
    let dir = TempDir::new().unwrap();
    let swap = write(
        &dir,
        "swap.json",
        r#"{"n":2,"initial":[[1,0],[0,1]],"final":[[0,1],[1,0]],"terms":[],"angles":[]}"#,
    );
    assert_eq!(hopps(&["synth", &swap, "--kmax", "2"]).status.code(), Some(3));
    assert!(hopps(&["synth", &swap, "--kmax", "3"]).status.success());
    let rep = qaoa3_rep();
    let rep = rep.to_str().unwrap();
    assert_eq!(hopps(&["synth", rep, "--coupling-map", "line:3", "--timeout", "0"]).status.code(), Some(4));
}

#[test]
fn metrics_report() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "c.qasm", &qasm(3, "cx q[0],q[1];\ncx q[1],q[2];\n"));
    let out = hopps(&["metrics", &file]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), r#"{"cnot_count":2,"cnot_depth":2}"#);
}

#[test]
fn metrics_baseline_ratios() {
    let dir = TempDir::new().unwrap();
    let chain = |count: usize, depth: usize| {
        let mut body = "cx q[0],q[1];\n".repeat(depth);
        body += &"cx q[2],q[3];\n".repeat(count - depth);
        qasm(4, &body)
    };
    let baseline = write(&dir, "base.qasm", &chain(8, 7));
    let ours = write(&dir, "ours.qasm", &chain(6, 5));
    let report = stdout_json(&hopps(&["metrics", &ours, "--baseline", &baseline]));
    assert_eq!(report["baseline"]["cnot_count"], 8);
    assert_eq!(report["baseline"]["cnot_depth"], 7);
    let count = report["improvement"]["cnot_count"].as_f64().unwrap();
    let depth = report["improvement"]["cnot_depth"].as_f64().unwrap();
    assert!((count - 0.25).abs() < 1e-9);
    assert!((depth - 2.0 / 7.0).abs() < 1e-9);
}

#[test]
fn verify_accepts_peephole_output() {
    let dir = TempDir::new().unwrap();
    let body = "cx q[0],q[1];\nrz(0.5) q[1];\ncx q[1],q[2];\ncx q[2],q[1];\ncx q[1],q[2];\ncx q[1],q[2];\ncx q[2],q[1];\ncx q[1],q[2];\ncx q[0],q[1];\n";
    let input = write(&dir, "in.qasm", &qasm(3, body));
    let output = dir.path().join("out.qasm");
    let out = hopps(&[
        "peephole",
        &input,
        "--coupling-map",
        "line:3",
        "--jobs",
        "2",
        "-o",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["before"]["cnot_count"], 8);
    assert_eq!(report["after"]["cnot_count"], 2);

    let out = hopps(&["verify", &input, output.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["equivalent"], true);

    let other = write(&dir, "other.qasm", &qasm(3, "cx q[0],q[1];\n"));
    let out = hopps(&["verify", &input, &other]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["equivalent"], false);
}

#[test]
fn blockwise_writes_trace() {
    let dir = TempDir::new().unwrap();
    let body = "h q[0];\ncx q[0],q[1];\nrz(0.5) q[1];\ncx q[1],q[2];\ncx q[2],q[1];\ncx q[1],q[2];\ncx q[1],q[2];\ncx q[2],q[1];\ncx q[1],q[2];\ncx q[0],q[1];\nh q[0];\n";
    let input = write(&dir, "in.qasm", &qasm(3, body));
    for (name, header) in [("trace.csv", "iteration,stage"), ("trace.jsonl", "{")] {
        let trace = dir.path().join(name);
        let out = hopps(&[
            "blockwise",
            &input,
            "--coupling-map",
            "line:3",
            "--iters-sample",
            "2",
            "--seed",
            "3",
            "--trace-out",
            trace.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report = stdout_json(&out);
        assert_eq!(report["after"]["cnot_count"], 2);
        assert!(report["qasm"].as_str().unwrap().contains("h q[0];"));
        assert!(fs::read_to_string(&trace).unwrap().starts_with(header));
    }
    let out = hopps(&["blockwise", &input, "--sample-fraction", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn coupling_map_from_file() {
    let dir = TempDir::new().unwrap();
    let map = write(&dir, "map.json", r#"{"num_qubits":3,"edges":[[0,1],[1,2]]}"#);
    let input = write(&dir, "c.qasm", &qasm(3, "cx q[0],q[2];\n"));
    let out = hopps(&["peephole", &input, "--coupling-map", &map]);
    assert_eq!(out.status.code(), Some(2));
    let input = write(&dir, "c.qasm", &qasm(3, "cx q[0],q[1];\n"));
    assert!(hopps(&["peephole", &input, "--coupling-map", &map]).status.success());
}

/// A DIMACS-speaking wrapper around CaDiCaL via python-sat, if available.
fn external_solver(dir: &TempDir) -> Option<PathBuf> {
    let ok = Command::new("python3")
        .args(["-c", "import pysat.solvers"])
        .output()
        .is_ok_and(|o| o.status.success());
    if !ok {
        return None;
    }
    let script = "#!/usr/bin/env python3
import sys
from pysat.formula import CNF
from pysat.solvers import Cadical153

cnf = CNF(from_file=sys.argv[1])
with Cadical153(bootstrap_with=cnf.clauses) as s:
    if s.solve():
        print('s SATISFIABLE')
        print('v ' + ' '.join(str(x) for x in s.get_model()) + ' 0')
    else:
        print('s UNSATISFIABLE')
";
    let path = dir.path().join("solver.py");
    fs::write(&path, script).unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    }
    Some(path)
}

#[test]
fn dimacs_dump_agrees_with_external_solver() {
    let dir = TempDir::new().unwrap();
    let Some(solver) = external_solver(&dir) else {
        eprintln!("python-sat not importable; skipping external differential");
        return;
    };
    let rep = qaoa3_rep();
    let cnf = dir.path().join("qaoa3.cnf");
    let out = hopps(&[
        "synth",
        rep.to_str().unwrap(),
        "--coupling-map",
        "line:3",
        "--dimacs-out",
        cnf.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&cnf).unwrap();
    assert!(text.lines().any(|l| l.starts_with("p cnf ")));
    assert!(text.lines().any(|l| l.starts_with("c ") && l.contains("cnot[")));

    let ext = Command::new(&solver).arg(&cnf).output().unwrap();
    assert!(String::from_utf8_lossy(&ext.stdout).contains("s SATISFIABLE"));

    let internal = stdout_json(&out);
    let out = Command::new(env!("CARGO_BIN_EXE_hopps"))
        .args(["synth", rep.to_str().unwrap(), "--coupling-map", "line:3"])
        .env("HOPPS_SOLVER", &solver)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["cnot_count"], internal["cnot_count"]);
}
