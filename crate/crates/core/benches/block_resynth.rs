use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hopps::blockwise::{partition, BlockwiseConfig};
use hopps::circuit::{Circuit, Gate};
use hopps::coupling::CouplingMap;
use hopps::encoder::Mode;
use hopps::parallel::{run_parallel, run_sequential};
use hopps::peephole::{resynth_block, ResynthSettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn workload() -> (Circuit, CouplingMap) {
    let cm = CouplingMap::grid(2, 4);
    let edges: Vec<(usize, usize)> = cm.edges().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut gates = Vec::new();
    for _ in 0..160 {
        if rng.gen_bool(0.4) {
            gates.push(Gate::rz(rng.gen_range(0.1..3.0), rng.gen_range(0..8)));
        } else {
            let (a, b) = edges[rng.gen_range(0..edges.len())];
            gates.push(if rng.gen_bool(0.5) { Gate::cnot(a, b) } else { Gate::cnot(b, a) });
        }
    }
    (Circuit::from_gates(8, gates).unwrap(), cm)
}

fn bench(c: &mut Criterion) {
    let (circuit, cm) = workload();
    let cfg = BlockwiseConfig::default();
    let blocks = partition(&circuit, &cfg);
    let settings = ResynthSettings::new(Mode::Cnot);
    let jobs = hopps::parallel::default_jobs().max(2);

    let mut group = c.benchmark_group("block_resynth");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_sequential(black_box(&blocks), |_, blk| resynth_block(blk, &cm, &settings)))
    });
    group.bench_function(format!("parallel_{jobs}"), |b| {
        b.iter(|| run_parallel(black_box(&blocks), jobs, |_, blk| resynth_block(blk, &cm, &settings)))
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
