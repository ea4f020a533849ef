use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use trimer_core::exec::Execution;
use trimer_core::model::{CouplingSet, Thermo};
use trimer_core::oracle::{enumerate_chain, FiniteChainSpec};
use trimer_core::scan::{run_grid, AxisSpec, ScanSpec};

fn strategies() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_h_T");
    group.sample_size(10);
    for steps in [50usize, 200] {
        let spec = ScanSpec {
            axis1: Some(AxisSpec::parse(&format!("h:0:3:{steps}")).unwrap()),
            axis2: Some(AxisSpec::parse(&format!("T:0.01:0.5:{steps}")).unwrap()),
            ..ScanSpec::default()
        };
        for (name, exec) in strategies() {
            group.bench_with_input(BenchmarkId::new(name, steps), &spec, |b, spec| {
                b.iter(|| black_box(run_grid(spec, exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumeration");
    group.sample_size(10);
    let t = Thermo::from_beta(1.0).unwrap();
    for cells in [12usize, 16] {
        let spec = FiniteChainSpec::new(cells, CouplingSet::new(1.0, 1.0, 0.3).unwrap()).unwrap();
        for (name, exec) in strategies() {
            group.bench_with_input(BenchmarkId::new(name, cells), &spec, |b, spec| {
                b.iter(|| black_box(enumerate_chain(spec, &t, exec).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, grid, enumeration);
criterion_main!(benches);
