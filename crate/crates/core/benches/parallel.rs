//! Sequential versus rayon execution on the two data-parallel workloads:
//! exhaustive search and the experiment runner.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gdp_core::bench::experiment::{run_experiment, Cell, ExperimentConfig};
use gdp_core::bench::gen::{gen_random, GenProfile};
use gdp_core::gdp::{make_variant, Variant};
use gdp_core::ilp::Mode;
use gdp_core::oracle::brute_force_with;
use gdp_core::par::Execution;
use gdp_core::query::parse_query;
use gdp_core::relcore::Semantics;

const EXECUTIONS: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn oracle(c: &mut Criterion) {
    let q = parse_query("Q(x) :- R(x,y), S(y,z).").unwrap();
    let mut p = GenProfile::new(q.clone(), 16, 7);
    p.max_domain = 4;
    let db = gen_random(&p).unwrap();
    let inst = make_variant(&db, &q, Variant::Swp, None, None).unwrap();
    let mut g = c.benchmark_group("oracle_16_tuples");
    g.sample_size(10);
    for exec in EXECUTIONS {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| brute_force_with(&inst, 20, exec).unwrap())
        });
    }
    g.finish();
}

fn experiment(c: &mut Criterion) {
    let cell = Cell {
        name: "star".into(),
        variant: Variant::Swp,
        query: "Q(a) :- R(a,b), S(a,c), T(a,d).".into(),
        modes: vec![Mode::Naive, Mode::Smoothed],
        semantics: Semantics::Set,
        sizes: vec![250, 500],
        ladder: None,
        max_domains: vec![1000],
        max_bag: 1,
        repetitions: 4,
        seed: 1,
        k: None,
    };
    let mut g = c.benchmark_group("experiment_16_jobs");
    g.sample_size(10);
    for exec in EXECUTIONS {
        let cfg = ExperimentConfig { cells: vec![cell.clone()], execution: exec, ..ExperimentConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| run_experiment(cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle, experiment);
criterion_main!(benches);
