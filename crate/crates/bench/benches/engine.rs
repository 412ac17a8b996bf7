use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sbmconf::credconf::{credible_set, enlarge};
use sbmconf::mcmc::run_chain;
use sbmconf::posterior::enumerate_posterior_with;
use sbmconf::sbm::sample_graph;
use sbmconf::{Assignment, ChainConfig, EngineConfig, Graph, SbmParams};

fn graph(n: usize, params: &SbmParams) -> Graph {
    sample_graph(params, Assignment::blocks(n, n / 2).unwrap().labels(), 42)
}

fn enumeration(c: &mut Criterion) {
    let params = SbmParams::new(0.7, 0.3).unwrap();
    let mut group = c.benchmark_group("enumerate_posterior");
    group.sample_size(10);
    for n in [16, 20] {
        let g = graph(n, &params);
        for threads in [1, 4] {
            let config = EngineConfig { n_max: 26, threads };
            group.bench_with_input(BenchmarkId::new(format!("threads_{threads}"), n), &g, |b, g| {
                b.iter(|| enumerate_posterior_with(black_box(g), &params, &config).unwrap())
            });
        }
    }
    group.finish();
}

fn chain(c: &mut Criterion) {
    let params = SbmParams::new(0.9, 0.1).unwrap();
    let g = graph(40, &params);
    let config = ChainConfig::with_defaults(100_000, 1).unwrap();
    c.bench_function("run_chain/n40_1e5_steps", |b| b.iter(|| run_chain(black_box(&g), &params, &config).unwrap()));
}

fn sets(c: &mut Criterion) {
    let params = SbmParams::new(0.6, 0.4).unwrap();
    let g = graph(18, &params);
    let table = enumerate_posterior_with(&g, &params, &EngineConfig::default()).unwrap();
    c.bench_function("credible_set/n18_level_0.9", |b| b.iter(|| credible_set(black_box(&table), 0.9).unwrap()));
    let set = credible_set(&table, 0.5).unwrap();
    c.bench_function("enlarge/n18_radius_2", |b| b.iter(|| enlarge(black_box(&set), 2, 18).unwrap()));
}

criterion_group!(benches, enumeration, chain, sets);
criterion_main!(benches);
