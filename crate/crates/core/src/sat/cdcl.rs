//! Conflict-driven clause learning solver.
//!
//! Two watched literals per clause, first-UIP learning with recursive
//! minimization, VSIDS branching with phase saving, Luby restarts, and
//! activity-based learnt clause reduction. Clauses may be added between
//! calls to [`Cdcl::solve`]; learnt clauses are kept across calls.

use std::time::Instant;

use super::{Lit, SatError};

const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;
const RESTART_UNIT: u64 = 100;
const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;

struct Clause {
    lits: Vec<u32>,
    learnt: bool,
    deleted: bool,
    activity: f64,
    lbd: u32,
}

#[derive(Clone, Copy)]
struct Watch {
    cref: u32,
    blocker: u32,
}

/// Max-heap of variables keyed by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<usize>,
}

const NOT_IN_HEAP: usize = usize::MAX;

impl VarHeap {
    fn grow(&mut self) {
        self.pos.push(NOT_IN_HEAP);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] != NOT_IN_HEAP
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = self.heap.len();
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top as usize] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.pos[self.heap[0] as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.pos[v as usize], act);
        }
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv as usize] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[child];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.pos[cv as usize] = i;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }
}

pub struct Cdcl {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    seen: Vec<bool>,
    heap: VarHeap,
    trail: Vec<u32>,
    trail_lim: Vec<usize>,
    qhead: usize,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    ok: bool,
    conflicts: u64,
    last_model: Vec<bool>,
    level_seen: Vec<u64>,
    lbd_stamp: u64,
}

impl Default for Cdcl {
    fn default() -> Self {
        Self::new()
    }
}

#[inline]
fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

impl Cdcl {
    pub fn new() -> Self {
        Cdcl {
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            phase: Vec::new(),
            activity: Vec::new(),
            seen: Vec::new(),
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 0.0,
            ok: true,
            conflicts: 0,
            last_model: Vec::new(),
            level_seen: vec![0],
            lbd_stamp: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    /// Assignment found by the last satisfiable [`Cdcl::solve`] call,
    /// indexed by 0-based variable.
    pub fn model(&self) -> &[bool] {
        &self.last_model
    }

    /// Grows the variable set to at least `n` variables.
    pub fn reserve_vars(&mut self, n: usize) {
        while self.assigns.len() < n {
            let v = self.assigns.len() as u32;
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(NO_REASON);
            self.phase.push(false);
            self.activity.push(0.0);
            self.seen.push(false);
            self.level_seen.push(0);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.heap.grow();
            self.heap.insert(v, &self.activity);
        }
    }

    #[inline]
    fn value(&self, lit: u32) -> u8 {
        let a = self.assigns[(lit >> 1) as usize];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (lit & 1) as u8
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, lit: u32, reason: u32) {
        let v = (lit >> 1) as usize;
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = 1 - (lit & 1) as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    /// Adds a clause at decision level 0. Returns false once the formula is
    /// known unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let max_var = lits.iter().map(|l| l.var().id() as usize).max().unwrap_or(0);
        self.reserve_vars(max_var);

        let mut c: Vec<u32> = lits.iter().map(|l| l.code() as u32).collect();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return true;
        }
        if c.iter().any(|&l| self.value(l) == 1) {
            return true;
        }
        c.retain(|&l| self.value(l) == UNDEF);
        match c.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(c, false);
            }
        }
        self.ok
    }

    fn attach(&mut self, lits: Vec<u32>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[(lits[0] ^ 1) as usize].push(Watch {
            cref,
            blocker: lits[1],
        });
        self.watches[(lits[1] ^ 1) as usize].push(Watch {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
            lbd: 0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[p as usize]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                let lits = &mut self.clauses[cref].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                let first_val = {
                    let a = self.assigns[(first >> 1) as usize];
                    if a == UNDEF {
                        UNDEF
                    } else {
                        a ^ (first & 1) as u8
                    }
                };
                if first != w.blocker && first_val == 1 {
                    ws[j] = Watch {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..lits.len() {
                    let l = lits[k];
                    let a = self.assigns[(l >> 1) as usize];
                    if a == UNDEF || a ^ (l & 1) as u8 == 1 {
                        lits.swap(1, k);
                        let new_watch = lits[1] ^ 1;
                        self.watches[new_watch as usize].push(Watch {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                j += 1;
                if first_val == 0 {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[p as usize] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<u32>, u32) {
        let mut learnt = vec![0u32];
        let mut path = 0usize;
        let mut p: Option<u32> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level();

        loop {
            let cref = confl as usize;
            if self.clauses[cref].learnt {
                self.bump_clause(cref);
            }
            let start = usize::from(p.is_some());
            for k in start..self.clauses[cref].lits.len() {
                let q = self.clauses[cref].lits[k];
                let v = (q >> 1) as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[(self.trail[idx] >> 1) as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            let v = (lit >> 1) as usize;
            p = Some(lit);
            confl = self.reason[v];
            self.seen[v] = false;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = p.expect("conflict has a UIP") ^ 1;

        // Drop literals implied by other literals of the clause.
        let abs = learnt[1..]
            .iter()
            .fold(0u32, |a, &l| a | self.abstract_level((l >> 1) as usize));
        let mut to_clear: Vec<usize> = learnt[1..].iter().map(|&l| (l >> 1) as usize).collect();
        let mut out = vec![learnt[0]];
        for &l in &learnt[1..] {
            if self.reason[(l >> 1) as usize] == NO_REASON || !self.lit_redundant(l, abs, &mut to_clear) {
                out.push(l);
            }
        }
        for v in to_clear {
            self.seen[v] = false;
        }

        let bt = if out.len() == 1 {
            0
        } else {
            let (max_i, _) = out
                .iter()
                .enumerate()
                .skip(1)
                .max_by_key(|(_, &l)| self.level[(l >> 1) as usize])
                .unwrap();
            out.swap(1, max_i);
            self.level[(out[1] >> 1) as usize]
        };
        (out, bt)
    }

    #[inline]
    fn abstract_level(&self, v: usize) -> u32 {
        1 << (self.level[v] & 31)
    }

    /// True when `p` follows from literals already marked as seen.
    fn lit_redundant(&mut self, p: u32, abs: u32, to_clear: &mut Vec<usize>) -> bool {
        let top = to_clear.len();
        let mut stack = vec![p];
        while let Some(q) = stack.pop() {
            let r = self.reason[(q >> 1) as usize] as usize;
            for i in 1..self.clauses[r].lits.len() {
                let l = self.clauses[r].lits[i];
                let v = (l >> 1) as usize;
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                if self.reason[v] != NO_REASON && self.abstract_level(v) & abs != 0 {
                    self.seen[v] = true;
                    stack.push(l);
                    to_clear.push(v);
                } else {
                    for &u in &to_clear[top..] {
                        self.seen[u] = false;
                    }
                    to_clear.truncate(top);
                    return false;
                }
            }
        }
        true
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let lit = self.trail[i];
            let v = (lit >> 1) as usize;
            self.phase[v] = lit & 1 == 0;
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<u32> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                let positive = self.phase[v as usize];
                return Some(v << 1 | u32::from(!positive));
            }
        }
        None
    }

    /// Number of distinct decision levels among the literals.
    fn lbd(&mut self, lits: &[u32]) -> u32 {
        self.lbd_stamp += 1;
        let mut count = 0;
        for &l in lits {
            let lv = self.level[(l >> 1) as usize] as usize;
            if self.level_seen[lv] != self.lbd_stamp {
                self.level_seen[lv] = self.lbd_stamp;
                count += 1;
            }
        }
        count
    }

    fn locked(&self, cref: u32) -> bool {
        let l = self.clauses[cref as usize].lits[0];
        let v = (l >> 1) as usize;
        self.reason[v] == cref && self.value(l) == 1
    }

    fn reduce_db(&mut self) {
        let mut learnts = std::mem::take(&mut self.learnts);
        learnts.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd.cmp(&ca.lbd).then(ca.activity.total_cmp(&cb.activity))
        });
        let half = learnts.len() / 2;
        let mut kept = Vec::with_capacity(learnts.len());
        for (i, &cref) in learnts.iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if i < half && c.lits.len() > 2 && c.lbd > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = Vec::new();
            } else {
                kept.push(cref);
            }
        }
        self.learnts = kept;
        for ws in &mut self.watches {
            ws.retain(|w| !self.clauses[w.cref as usize].deleted);
        }
    }

    /// `Ok(true)` with a model available via [`Cdcl::model`], `Ok(false)`
    /// when unsatisfiable, `Err(Timeout)` when the deadline passes.
    pub fn solve(&mut self, deadline: Option<Instant>) -> Result<bool, SatError> {
        self.last_model.clear();
        if !self.ok {
            return Ok(false);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(SatError::Timeout);
        }
        self.max_learnts = self.max_learnts.max(self.clauses.len() as f64 / 3.0 + 1000.0);
        let mut restart = 0u64;
        loop {
            let budget = (luby(2.0, restart) * RESTART_UNIT as f64) as u64;
            restart += 1;
            match self.search(budget, deadline) {
                Ok(Some(sat)) => {
                    if sat {
                        self.last_model = self.assigns.iter().map(|&a| a == 1).collect();
                    }
                    self.cancel_until(0);
                    return Ok(sat);
                }
                Ok(None) => {
                    self.max_learnts *= 1.05;
                }
                Err(e) => {
                    self.cancel_until(0);
                    return Err(e);
                }
            }
        }
    }

    fn search(&mut self, budget: u64, deadline: Option<Instant>) -> Result<Option<bool>, SatError> {
        let mut local_conflicts = 0u64;
        let mut decisions = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                local_conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Ok(Some(false));
                }
                let (learnt, bt) = self.analyze(confl);
                let lbd = self.lbd(&learnt);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.clauses[cref as usize].lbd = lbd;
                    self.bump_clause(cref as usize);
                    self.enqueue(first, cref);
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
                if self.conflicts.is_multiple_of(256) && deadline.is_some_and(|d| Instant::now() >= d) {
                    return Err(SatError::Timeout);
                }
            } else {
                if local_conflicts >= budget {
                    self.cancel_until(0);
                    return Ok(None);
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                decisions += 1;
                if decisions.is_multiple_of(4096) && deadline.is_some_and(|d| Instant::now() >= d) {
                    return Err(SatError::Timeout);
                }
                match self.pick_branch() {
                    None => return Ok(Some(true)),
                    Some(lit) => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(lit, NO_REASON);
                    }
                }
            }
        }
    }
}
