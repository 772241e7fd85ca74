use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lado::harness::{synthetic_instance, SyntheticConfig};
use lado::lado::{project_to_robust_set, RobustSetHalfspaceData};
use lado::policies::ExpertPolicy;
use lado::{simulate, smoothness_of, solve_opt, Combiner, MlPolicy, RobustnessConfig, SimOptions};

fn projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("projection");
    for dim in [1usize, 4, 16] {
        let a = vec![1.0; dim];
        let b = vec![-2.0; dim];
        let e = vec![0.5; dim];
        let set = RobustSetHalfspaceData::from_squared_terms(&[(1.0, &a), (2.0, &b), (3.0, &e)], &e, 40.0 * dim as f64);
        let target = vec![9.0; dim];
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |bench, _| {
            bench.iter(|| project_to_robust_set(black_box(&target), black_box(&set)).unwrap())
        });
    }
    group.finish();
}

fn lado_episode(c: &mut Criterion) {
    let mut group = c.benchmark_group("lado_episode");
    for agents in [3usize, 10] {
        let config = SyntheticConfig { agents, horizon: 24, dim: 2, offset_std: 0.3, ..Default::default() };
        let instance = synthetic_instance(&config, 7).unwrap();
        let opt = solve_opt(&instance).unwrap();
        let advice = MlPolicy::perturbed_opt(&opt, 0.5, 3).unwrap();
        let combiner = Combiner::Lado {
            config: RobustnessConfig::optimal(1.0).unwrap(),
            smoothness: smoothness_of(&instance),
        };
        group.bench_with_input(BenchmarkId::from_parameter(agents), &agents, |bench, _| {
            bench.iter(|| {
                simulate(black_box(&instance), &ExpertPolicy, Some(&advice), combiner, &SimOptions::default()).unwrap()
            })
        });
    }
    group.finish();
}

fn offline_opt(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_opt");
    for (agents, horizon) in [(3usize, 24usize), (10, 72), (30, 96)] {
        let config = SyntheticConfig { agents, horizon, dim: 1, edges: Some((1..agents).map(|v| (v - 1, v)).collect()), ..Default::default() };
        let instance = synthetic_instance(&config, 11).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{agents}x{horizon}")),
            &instance,
            |bench, inst| bench.iter(|| solve_opt(black_box(inst)).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, projection, lado_episode, offline_opt);
criterion_main!(benches);
