use hopps::sat::{self, dimacs, InternalSolver, Lit, SatBackend, SatInstance, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_force_sat(num_vars: u32, clauses: &[Vec<Lit>]) -> bool {
    (0u64..1 << num_vars).any(|m| {
        clauses.iter().all(|c| {
            c.iter()
                .any(|l| ((m >> (l.var().id() - 1)) & 1 == 1) != l.is_negated())
        })
    })
}

fn random_cnf(rng: &mut ChaCha8Rng, num_vars: u32, num_clauses: usize, width: usize) -> Vec<Vec<Lit>> {
    (0..num_clauses)
        .map(|_| {
            (0..width)
                .map(|_| Lit::new(Var::new(rng.gen_range(1..=num_vars)), rng.gen()))
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn agrees_with_brute_force(seed in any::<u64>(), nv in 3u32..14, ratio in 2.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nc = (nv as f64 * ratio) as usize;
        let clauses = random_cnf(&mut rng, nv, nc, 3);
        let inst = SatInstance::from_clauses(nv, clauses.clone()).unwrap();
        let out = sat::solve(&inst, None).unwrap();
        prop_assert_eq!(out.is_sat(), brute_force_sat(nv, &clauses));
        if let Some(m) = out.model() {
            prop_assert!(inst.is_satisfied_by(m));
        }
    }
}

#[test]
fn incremental_matches_fresh_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let nv = 12;
        let clauses = random_cnf(&mut rng, nv, 70, 3);
        let mut inc = InternalSolver::new();
        let mut inst = SatInstance::from_clauses(nv, vec![]).unwrap();
        for chunk in clauses.chunks(10) {
            for c in chunk {
                inst.add_clause(c).unwrap();
            }
            let a = inc.solve(&inst, None).unwrap();
            let b = brute_force_sat(nv, inst.clauses());
            assert_eq!(a.is_sat(), b);
            if let Some(m) = a.model() {
                assert!(inst.is_satisfied_by(m));
            }
        }
    }
}

#[test]
fn pigeonhole_unsat_with_sequential_counter() {
    // 7 pigeons, 6 holes; at-most-one over 7 literals uses the counter.
    let mut inst = SatInstance::new();
    let x: Vec<Vec<Lit>> = (0..7)
        .map(|_| (0..6).map(|_| inst.new_var().pos()).collect())
        .collect();
    for p in &x {
        inst.add_clause(p).unwrap();
    }
    for h in 0..6 {
        let hole: Vec<Lit> = x.iter().map(|p| p[h]).collect();
        inst.at_most_k(&hole, 1).unwrap();
    }
    assert!(!sat::solve(&inst, None).unwrap().is_sat());
}

#[test]
fn cardinality_counts_exhaustive() {
    for n in 1..=7usize {
        for k in 0..=n {
            let mut inst = SatInstance::new();
            let x: Vec<Lit> = (0..n).map(|_| inst.new_var().pos()).collect();
            inst.at_most_k(&x, k).unwrap();
            // Every assignment of the primary literals: satisfiable iff popcount <= k.
            for m in 0u32..1 << n {
                let mut fixed = inst.clone();
                for (i, &l) in x.iter().enumerate() {
                    fixed.add_clause(&[if m >> i & 1 == 1 { l } else { !l }]).unwrap();
                }
                let sat = sat::solve(&fixed, None).unwrap().is_sat();
                assert_eq!(sat, m.count_ones() as usize <= k, "n={n} k={k} m={m:b}");
            }
            let mut at_least = SatInstance::new();
            let y: Vec<Lit> = (0..n).map(|_| at_least.new_var().pos()).collect();
            at_least.at_least_k(&y, k).unwrap();
            for m in 0u32..1 << n {
                let mut fixed = at_least.clone();
                for (i, &l) in y.iter().enumerate() {
                    fixed.add_clause(&[if m >> i & 1 == 1 { l } else { !l }]).unwrap();
                }
                let sat = sat::solve(&fixed, None).unwrap().is_sat();
                assert_eq!(sat, m.count_ones() as usize >= k, "n={n} k={k} m={m:b}");
            }
        }
    }
}

#[test]
fn dimacs_round_trip_preserves_answers() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let clauses = random_cnf(&mut rng, 10, 42, 3);
        let inst = SatInstance::from_clauses(10, clauses).unwrap();
        let back = dimacs::parse(&dimacs::export(&inst)).unwrap();
        assert_eq!(back.clauses(), inst.clauses());
        assert_eq!(
            sat::solve(&inst, None).unwrap().is_sat(),
            sat::solve(&back, None).unwrap().is_sat()
        );
    }
}

#[test]
fn larger_random_instances_are_consistent() {
    // Near the phase transition, beyond brute force; check models and that
    // UNSAT answers hold up under clause shuffling.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let clauses = random_cnf(&mut rng, 120, 510, 3);
        let inst = SatInstance::from_clauses(120, clauses.clone()).unwrap();
        let out = sat::solve(&inst, None).unwrap();
        match out.model() {
            Some(m) => assert!(inst.is_satisfied_by(m)),
            None => {
                let mut rev = clauses;
                rev.reverse();
                let inst2 = SatInstance::from_clauses(120, rev).unwrap();
                assert!(!sat::solve(&inst2, None).unwrap().is_sat());
            }
        }
    }
}
