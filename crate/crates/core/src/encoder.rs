//! CNF encoding of the synthesis problem.
//!
//! Variables: `cnot[k][e]` selects directed edge `e` at step `k < K`;
//! `P[k][i][j]` is bit `j` of row `i` of the circuit parity after `k` steps;
//! `match[t][k][i]` witnesses that term `t` is row `i` of slice `k`. The
//! layer assignment adds `D[k][l]` (step `k` sits in layer `l`), `L[l][e]`
//! (layer `l` uses edge `e`) and the products `z[k][l][e] = D[k][l] ∧ cnot[k][e]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::CouplingMap;
use crate::gf2::{Parity, ParityMatrix};
use crate::sat::{Lit, SatError, SatInstance, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One CNOT per step; the step count is the CNOT count.
    Cnot,
    /// A qubit-disjoint set of CNOTs per step; the step count is the depth.
    Depth,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cnot" => Ok(Mode::Cnot),
            "depth" => Ok(Mode::Depth),
            _ => Err(format!("unknown mode `{s}` (expected cnot or depth)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Cnot => "cnot",
            Mode::Depth => "depth",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("term {0} is the zero vector")]
    ZeroTerm(usize),
    #[error("operation requires {expected} mode")]
    WrongMode { expected: Mode },
    #[error("no layer assignment present")]
    NoLayering,
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingConfig {
    pub mode: Mode,
    pub steps: usize,
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl EncodingConfig {
    /// Directed edges of `cm` restricted to qubits `0..n`.
    pub fn new(mode: Mode, steps: usize, n: usize, cm: &CouplingMap) -> Self {
        let edges = cm
            .directed_edges()
            .into_iter()
            .filter(|&(a, b)| a < n && b < n)
            .collect();
        EncodingConfig {
            mode,
            steps,
            n,
            edges,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VarLayout {
    pub cnot: Vec<Vec<Var>>,
    pub parity: Vec<Vec<Vec<Var>>>,
    pub matches: Vec<Vec<Vec<Var>>>,
    pub layer: Option<Vec<Vec<Var>>>,
    pub layer_edge: Option<Vec<Vec<Var>>>,
    /// For each row, the term equal to its final value, if any.
    pub final_term: Vec<Option<usize>>,
}

/// An instance together with its variable layout.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub inst: SatInstance,
    pub layout: VarLayout,
    pub cfg: EncodingConfig,
}

fn fix_matrix(inst: &mut SatInstance, slice: &[Vec<Var>], m: &ParityMatrix) {
    for (i, row) in slice.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let lit = if m.get(i, j) { v.pos() } else { v.neg() };
            inst.push_clause(vec![lit]);
        }
    }
}

/// Builds the constraints shared by both modes: boundary parities, term
/// matching, and CNOT transitions.
pub fn encode_common(
    initial: &ParityMatrix,
    final_parity: &ParityMatrix,
    terms: &[Parity],
    cfg: &EncodingConfig,
) -> Result<Encoding, EncodeError> {
    let n = cfg.n;
    for found in [initial.n(), final_parity.n()] {
        if found != n {
            return Err(EncodeError::Dimension { expected: n, found });
        }
    }
    for (i, t) in terms.iter().enumerate() {
        if t.len() != n {
            return Err(EncodeError::Dimension {
                expected: n,
                found: t.len(),
            });
        }
        if t.is_zero() {
            return Err(EncodeError::ZeroTerm(i));
        }
    }
    let k_steps = cfg.steps;
    let mut inst = SatInstance::new();

    let cnot = (0..k_steps)
        .map(|k| {
            (0..cfg.edges.len())
                .map(|e| inst.new_named_var("cnot", &[k, e]))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let parity = (0..=k_steps)
        .map(|k| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| inst.new_named_var("P", &[k, i, j]))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    fix_matrix(&mut inst, &parity[0], initial);
    fix_matrix(&mut inst, &parity[k_steps], final_parity);

    let mut matches = Vec::with_capacity(terms.len());
    for (ti, t) in terms.iter().enumerate() {
        let mut per_term = Vec::with_capacity(k_steps + 1);
        let mut any = Vec::new();
        for (k, slice) in parity.iter().enumerate() {
            let mut per_slice = Vec::with_capacity(n);
            for (i, row) in slice.iter().enumerate() {
                let m = inst.new_named_var("match", &[ti, k, i])?;
                for (j, &p) in row.iter().enumerate() {
                    let lit = if t.get(j) { p.pos() } else { p.neg() };
                    inst.push_clause(vec![m.neg(), lit]);
                }
                per_slice.push(m);
                any.push(m.pos());
            }
            per_term.push(per_slice);
        }
        inst.at_least_k(&any, 1)?;
        matches.push(per_term);
    }

    for k in 0..k_steps {
        let (cur, next) = (&parity[k], &parity[k + 1]);
        for (e, &(c, tg)) in cfg.edges.iter().enumerate() {
            let sel = cnot[k][e].neg();
            for j in 0..n {
                let pc = cur[c][j];
                let po = cur[tg][j];
                let pn = next[tg][j];
                // Control bit set: target bit flips.
                inst.push_clause(vec![sel, pc.neg(), pn.pos(), po.pos()]);
                inst.push_clause(vec![sel, pc.neg(), pn.neg(), po.neg()]);
                // Control bit clear: target bit is kept.
                inst.push_clause(vec![sel, pc.pos(), pn.neg(), po.pos()]);
                inst.push_clause(vec![sel, pc.pos(), pn.pos(), po.neg()]);
            }
        }
        // A row no selected CNOT targets keeps its value.
        for i in 0..n {
            let targeting: Vec<Lit> = cfg
                .edges
                .iter()
                .enumerate()
                .filter(|(_, &(_, tg))| tg == i)
                .map(|(e, _)| cnot[k][e].pos())
                .collect();
            for j in 0..n {
                let (po, pn) = (cur[i][j], next[i][j]);
                let mut keep_a = targeting.clone();
                keep_a.extend([po.neg(), pn.pos()]);
                inst.push_clause(keep_a);
                let mut keep_b = targeting.clone();
                keep_b.extend([po.pos(), pn.neg()]);
                inst.push_clause(keep_b);
            }
        }
    }

    Ok(Encoding {
        inst,
        layout: VarLayout {
            cnot,
            parity,
            matches,
            layer: None,
            layer_edge: None,
            final_term: final_parity
                .rows()
                .iter()
                .map(|r| terms.iter().position(|t| t == r))
                .collect(),
        },
        cfg: cfg.clone(),
    })
}

/// Common constraints plus the mode constraints selected by `cfg.mode`.
pub fn encode(
    initial: &ParityMatrix,
    final_parity: &ParityMatrix,
    terms: &[Parity],
    cfg: &EncodingConfig,
) -> Result<Encoding, EncodeError> {
    let mut enc = encode_common(initial, final_parity, terms, cfg)?;
    match cfg.mode {
        Mode::Cnot => enc.add_cnot_mode()?,
        Mode::Depth => enc.add_depth_mode()?,
    }
    Ok(enc)
}

impl Encoding {
    fn require(&self, mode: Mode) -> Result<(), EncodeError> {
        if self.cfg.mode == mode {
            Ok(())
        } else {
            Err(EncodeError::WrongMode { expected: mode })
        }
    }

    /// Exactly one CNOT per step.
    pub fn add_cnot_mode(&mut self) -> Result<(), EncodeError> {
        self.require(Mode::Cnot)?;
        for step in &self.layout.cnot {
            let lits: Vec<Lit> = step.iter().map(|v| v.pos()).collect();
            self.inst.exactly_one(&lits)?;
        }
        self.add_distance_bounds(1)
    }

    /// At least one CNOT per step and at most one per qubit per step.
    pub fn add_depth_mode(&mut self) -> Result<(), EncodeError> {
        self.require(Mode::Depth)?;
        for step in &self.layout.cnot {
            let lits: Vec<Lit> = step.iter().map(|v| v.pos()).collect();
            self.inst.at_least_k(&lits, 1)?;
            for q in 0..self.cfg.n {
                let touching: Vec<Lit> = self
                    .cfg
                    .edges
                    .iter()
                    .zip(step)
                    .filter(|(&(a, b), _)| a == q || b == q)
                    .map(|(_, v)| v.pos())
                    .collect();
                self.inst.at_most_k(&touching, 1)?;
            }
        }
        self.add_distance_bounds(self.cfg.n / 2)
    }

    /// Implied bounds on the remaining work at every slice. Each CNOT gives
    /// one row a new value, so with `r` steps of at most `per_step` CNOTs
    /// left, at most `r * per_step` rows may still differ from their final
    /// value. The same budget must also cover every term still waiting for
    /// its first match plus every differing row whose final value is not
    /// one of those terms.
    fn add_distance_bounds(&mut self, per_step: usize) -> Result<(), EncodeError> {
        let k_steps = self.cfg.steps;
        let n = self.cfg.n;
        for k in 1..k_steps {
            let budget = (k_steps - k) * per_step;
            let mut differs = Vec::with_capacity(n);
            for i in 0..n {
                let d = self.inst.new_var();
                let rows = self.layout.parity[k][i].iter().zip(&self.layout.parity[k_steps][i]);
                for (&p, &q) in rows {
                    self.inst.push_clause(vec![p.neg(), q.pos(), d.pos()]);
                    self.inst.push_clause(vec![p.pos(), q.neg(), d.pos()]);
                }
                differs.push(d);
            }
            let lits: Vec<Lit> = differs.iter().map(|d| d.pos()).collect();
            self.inst.at_most_k(&lits, budget)?;

            let mut waiting = Vec::with_capacity(self.layout.matches.len());
            for per_term in &self.layout.matches {
                let w = self.inst.new_var();
                let mut clause = vec![w.pos()];
                clause.extend(per_term[..=k].iter().flatten().map(|m| m.pos()));
                self.inst.push_clause(clause);
                waiting.push(w);
            }
            let mut owed: Vec<Lit> = waiting.iter().map(|w| w.pos()).collect();
            for (i, d) in differs.iter().enumerate() {
                let e = self.inst.new_var();
                let mut clause = vec![d.neg(), e.pos()];
                if let Some(t) = self.layout.final_term[i] {
                    clause.push(waiting[t].pos());
                }
                self.inst.push_clause(clause);
                owed.push(e.pos());
            }
            self.inst.at_most_k(&owed, budget)?;
        }
        Ok(())
    }

    /// Restricts solutions to one representative per commutation class.
    ///
    /// In CNOT mode two adjacent CNOTs that commute without disturbing any
    /// parity the pair exposes (disjoint qubits, or a shared control) must
    /// appear in edge order. In depth mode every CNOT after the first layer
    /// must share a qubit with some CNOT of the previous layer, so no gate
    /// could have been scheduled earlier. Neither restriction changes the
    /// optimum of the mode's own metric, but the CNOT-mode ordering is not
    /// compatible with [`Encoding::add_layer_assignment`].
    pub fn add_symmetry_breaking(&mut self) -> Result<(), EncodeError> {
        if self.layout.layer.is_some() {
            return Err(EncodeError::WrongMode { expected: Mode::Depth });
        }
        let edges = &self.cfg.edges;
        let cnot = &self.layout.cnot;
        match self.cfg.mode {
            Mode::Cnot => {
                let commute = |(c1, t1): (usize, usize), (c2, t2): (usize, usize)| {
                    t1 != t2 && t1 != c2 && t2 != c1
                };
                for k in 1..cnot.len() {
                    for (e, &ge) in edges.iter().enumerate() {
                        for (f, &gf) in edges.iter().enumerate().take(e) {
                            if commute(ge, gf) {
                                self.inst.push_clause(vec![cnot[k - 1][e].neg(), cnot[k][f].neg()]);
                            }
                        }
                    }
                }
            }
            Mode::Depth => {
                let touch = |(c1, t1): (usize, usize), (c2, t2): (usize, usize)| {
                    c1 == c2 || c1 == t2 || t1 == c2 || t1 == t2
                };
                for k in 1..cnot.len() {
                    for (e, &ge) in edges.iter().enumerate() {
                        let mut clause = vec![cnot[k][e].neg()];
                        clause.extend(
                            edges
                                .iter()
                                .enumerate()
                                .filter(|&(_, &gf)| touch(ge, gf))
                                .map(|(f, _)| cnot[k - 1][f].pos()),
                        );
                        self.inst.push_clause(clause);
                    }
                }
            }
        }
        Ok(())
    }

    /// Assigns every step of a CNOT-mode instance to a layer so that layers
    /// are contiguous, non-decreasing in step order, and qubit-disjoint.
    pub fn add_layer_assignment(&mut self) -> Result<(), EncodeError> {
        self.require(Mode::Cnot)?;
        if self.layout.layer.is_some() {
            return Ok(());
        }
        let k_steps = self.cfg.steps;
        let num_edges = self.cfg.edges.len();
        let inst = &mut self.inst;
        let d = (0..k_steps)
            .map(|k| {
                (0..k_steps)
                    .map(|l| inst.new_named_var("D", &[k, l]))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        for row in &d {
            let lits: Vec<Lit> = row.iter().map(|v| v.pos()).collect();
            inst.exactly_one(&lits)?;
        }
        for k in 0..k_steps {
            for l in 0..k_steps {
                // Two steps in layer l force every step between them into l.
                if k + 1 < k_steps {
                    for later in k + 2..k_steps {
                        inst.push_clause(vec![d[k][l].neg(), d[later][l].neg(), d[k + 1][l].pos()]);
                    }
                    // The next step cannot fall back to an earlier layer.
                    for lower in 0..l {
                        inst.push_clause(vec![d[k][l].neg(), d[k + 1][lower].neg()]);
                    }
                }
            }
        }

        let mut z = vec![vec![Vec::with_capacity(num_edges); k_steps]; k_steps];
        for k in 0..k_steps {
            for l in 0..k_steps {
                for e in 0..num_edges {
                    let v = inst.new_named_var("z", &[k, l, e])?;
                    let (dv, cv) = (d[k][l], self.layout.cnot[k][e]);
                    inst.push_clause(vec![v.neg(), dv.pos()]);
                    inst.push_clause(vec![v.neg(), cv.pos()]);
                    inst.push_clause(vec![v.pos(), dv.neg(), cv.neg()]);
                    z[k][l].push(v);
                }
            }
        }
        let mut layer_edge = Vec::with_capacity(k_steps);
        for l in 0..k_steps {
            let mut row = Vec::with_capacity(num_edges);
            for e in 0..num_edges {
                let lv = inst.new_named_var("L", &[l, e])?;
                let mut def = vec![lv.neg()];
                for zk in z.iter() {
                    inst.push_clause(vec![zk[l][e].neg(), lv.pos()]);
                    def.push(zk[l][e].pos());
                }
                inst.push_clause(def);
                // The same directed edge cannot appear twice in one layer.
                let uses: Vec<Lit> = z.iter().map(|zk| zk[l][e].pos()).collect();
                inst.at_most_k(&uses, 1)?;
                row.push(lv);
            }
            for q in 0..self.cfg.n {
                let touching: Vec<Lit> = self
                    .cfg
                    .edges
                    .iter()
                    .zip(&row)
                    .filter(|(&(a, b), _)| a == q || b == q)
                    .map(|(_, v)| v.pos())
                    .collect();
                inst.at_most_k(&touching, 1)?;
            }
            layer_edge.push(row);
        }
        self.layout.layer = Some(d);
        self.layout.layer_edge = Some(layer_edge);
        Ok(())
    }

    /// Restricts every step to layers `0..d`.
    pub fn add_depth_limit(&mut self, d: usize) -> Result<(), EncodeError> {
        let layer = self.layout.layer.as_ref().ok_or(EncodeError::NoLayering)?;
        for row in layer {
            for v in row.iter().skip(d) {
                self.inst.push_clause(vec![v.neg()]);
            }
        }
        Ok(())
    }

    /// At most `budget` CNOTs over all steps.
    pub fn add_cnot_budget(&mut self, budget: usize) -> Result<(), EncodeError> {
        self.require(Mode::Depth)?;
        let all: Vec<Lit> = self.layout.cnot.iter().flatten().map(|v| v.pos()).collect();
        self.inst.at_most_k(&all, budget)?;
        Ok(())
    }
}
