use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use diskalloc::allocator::{exact_solve, ExactOptions, StageProblem};
use diskalloc::experiment::heuristic_gap_sweep;
use diskalloc::io::{generate_instance, GeneratorParams};
use diskalloc::model::Instance;
use diskalloc::restructuring::{restructure_one_stage, RestructureMode, RestructuringProblem};
use diskalloc::{heuristic_solve, Parallelism};
use std::hint::black_box;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn instance(n_files: u32, gamma: u32, seed: u64) -> Instance {
    generate_instance(&GeneratorParams {
        n_files,
        gamma,
        n_stages: 2,
        edge_density: 0.3,
        size_range: (1, 2),
        capacity_slack: 1.2,
        seed,
    })
    .unwrap()
    .to_instance()
    .unwrap()
}

fn exact(c: &mut Criterion) {
    let inst = instance(12, 3, 1);
    let problem = StageProblem::from_instance(&inst, 1).unwrap();
    let mut group = c.benchmark_group("exact_solve_12x3");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exact_solve(black_box(&problem), ExactOptions { cap: 12, parallelism: mode }).unwrap())
        });
    }
    group.finish();
}

fn restructure(c: &mut Criterion) {
    let inst = instance(12, 3, 2);
    let first = StageProblem::from_instance(&inst, 1).unwrap();
    let previous = heuristic_solve(&first, true).unwrap().allocation;
    let target = StageProblem::from_instance(&inst, 2).unwrap();
    let rp = RestructuringProblem::new(previous, target, 4.0, 1.0, 12, Parallelism::Parallel).unwrap();
    let mut group = c.benchmark_group("restructure_exact_12x3_budget4");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| restructure_one_stage(black_box(&rp), RestructureMode::Exact, mode).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let template = GeneratorParams {
        n_files: 8,
        gamma: 3,
        n_stages: 2,
        edge_density: 0.3,
        ..GeneratorParams::default()
    };
    let seeds: Vec<u64> = (0..64).collect();
    let mut group = c.benchmark_group("oracle_sweep_64_seeds");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                heuristic_gap_sweep(black_box(&template), &seeds, ExactOptions { cap: 12, parallelism: mode }).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, exact, restructure, sweep);
criterion_main!(benches);
