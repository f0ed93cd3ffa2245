use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use softcoap::experiment::{parse_config, run_experiment};
use softcoap::linklevel::{build_pool, PhyParams};
use softcoap::par::Execution;

const SWEEP: &str = "[experiment]
name = \"bench\"
sweep = \"n_sensors\"
values = [5, 10, 20, 30]
replications = 2

[system]
m = [4, 8]
rounds = 2000

[decode]
p_primary = 0.6
p_secondary = 0.8
p_joint = [0.3, 0.5, 0.6, 0.65, 0.7, 0.7, 0.7, 0.7]
";

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn phy_pool(c: &mut Criterion) {
    let params = PhyParams {
        info_bytes: 24,
        ..PhyParams::default()
    };
    let mut group = c.benchmark_group("build_pool");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, 64), &exec, |b, &exec| {
            b.iter(|| build_pool(&params, &[3.0, 4.0], 64, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let spec = parse_config(SWEEP, Path::new(".")).unwrap();
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, spec.values.len()), &exec, |b, &exec| {
            b.iter(|| run_experiment(&spec, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, phy_pool, sweep);
criterion_main!(benches);
