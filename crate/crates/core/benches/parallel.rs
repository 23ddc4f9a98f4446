use convexmin::exec::Execution;
use convexmin::rational;
use convexmin::stochastic::{
    simulate, uniqueness_diagnostics, DataLaw, ProcessModel, SimulationOptions, Stage,
    UniquenessOptions, WidthLaw,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [
    ("parallel", Execution::Parallel),
    ("sequential", Execution::Sequential),
];

fn ensemble(c: &mut Criterion) {
    let model = ProcessModel::EmpiricalLad {
        data: DataLaw::Uniform,
    };
    let mut group = c.benchmark_group("simulate_uniform_lad_n200");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = SimulationOptions {
            exec,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate(&model, 2000, Stage::N(200), 1, &opts).unwrap())
        });
    }
    group.finish();
}

fn fubini(c: &mut Criterion) {
    let model = ProcessModel::TiltedFlat {
        width: WidthLaw::Uniform {
            lo: rational::int(0),
            hi: rational::int(1),
        },
        tilt: rational::int(0),
    };
    let grid: Vec<f64> = (0..=800).map(|i| -1.0 + i as f64 / 400.0).collect();
    let mut group = c.benchmark_group("uniqueness_tilted_flat");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = UniquenessOptions {
            exec,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| uniqueness_diagnostics(&model, 5000, Stage::Limit, &grid, 1, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble, fubini);
criterion_main!(benches);
