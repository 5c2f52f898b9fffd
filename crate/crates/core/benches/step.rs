use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ugks::{initialize_state, Execution, OperatorKind, Scenario, Ugks};

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(20);
    for preset in ["intermediate", "diffusive"] {
        for kind in OperatorKind::ALL {
            let mut s = Scenario::preset(preset).unwrap();
            s.operator = kind;
            let grid = s.grid().unwrap();
            let op = kind.build(&grid).unwrap();
            let solver = Ugks::new(grid, op, s.scheme_params().unwrap()).unwrap();
            let state = initialize_state(&s).unwrap();
            for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
                let solver = solver.clone().with_execution(exec);
                group.bench_with_input(
                    BenchmarkId::new(format!("{preset}/{kind}"), label),
                    &state,
                    |b, state| b.iter(|| solver.step(state).unwrap()),
                );
            }
        }
    }
    group.finish();
}

criterion_group!(benches, step);
criterion_main!(benches);
