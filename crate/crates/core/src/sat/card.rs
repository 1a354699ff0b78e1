//! Cardinality encodings: pairwise for small at-most-one, sequential counter
//! otherwise.

use super::{Lit, SatError, SatInstance};

const PAIRWISE_LIMIT: usize = 6;

pub(super) fn at_most_k(inst: &mut SatInstance, lits: &[Lit], k: usize) {
    let n = lits.len();
    if k >= n {
        return;
    }
    if k == 0 {
        for &l in lits {
            inst.push_clause(vec![!l]);
        }
        return;
    }
    if k == 1 && n <= PAIRWISE_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                inst.push_clause(vec![!lits[i], !lits[j]]);
            }
        }
        return;
    }
    sequential_counter(inst, lits, k);
}

pub(super) fn at_least_k(inst: &mut SatInstance, lits: &[Lit], k: usize) -> Result<(), SatError> {
    let n = lits.len();
    if k > n {
        return Err(SatError::Infeasible { k, n });
    }
    match k {
        0 => {}
        1 => inst.push_clause(lits.to_vec()),
        _ => {
            let negated: Vec<Lit> = lits.iter().map(|&l| !l).collect();
            at_most_k(inst, &negated, n - k);
        }
    }
    Ok(())
}

/// Sinz's sequential counter: `s[i][j]` holds when at least `j + 1` of the
/// first `i + 1` literals are true.
fn sequential_counter(inst: &mut SatInstance, x: &[Lit], k: usize) {
    let n = x.len();
    let s: Vec<Vec<Lit>> = (0..n - 1)
        .map(|_| (0..k).map(|_| inst.new_var().pos()).collect())
        .collect();

    inst.push_clause(vec![!x[0], s[0][0]]);
    for j in 1..k {
        inst.push_clause(vec![!s[0][j]]);
    }
    for i in 1..n - 1 {
        inst.push_clause(vec![!x[i], s[i][0]]);
        inst.push_clause(vec![!s[i - 1][0], s[i][0]]);
        for j in 1..k {
            inst.push_clause(vec![!x[i], !s[i - 1][j - 1], s[i][j]]);
            inst.push_clause(vec![!s[i - 1][j], s[i][j]]);
        }
        inst.push_clause(vec![!x[i], !s[i - 1][k - 1]]);
    }
    inst.push_clause(vec![!x[n - 1], !s[n - 2][k - 1]]);
}
