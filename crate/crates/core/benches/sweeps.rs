use std::time::Duration;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use impulse_game::oracle::{backward_induction_lower, DiscreteGameSpec};
use impulse_game::qvi::residual_report;
use impulse_game::solver::bellman_operator_with;
use impulse_game::{
    solve_fixed_point, ActionSet, BoxDomain, Cost, Drift, Execution, Gain, GameProblem, Grid,
    GridFunction, SolverConfig,
};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn planar() -> GameProblem {
    let moves = vec![vec![0.5, 0.0], vec![0.0, 0.5], vec![-0.5, 0.0], vec![0.0, -0.5]];
    GameProblem::new(
        2,
        Drift::SaturatedAffine {
            matrix: vec![vec![-0.5, 0.2], vec![-0.2, -0.5]],
            offset: vec![0.0, 0.1],
            saturation: 3.0,
        },
        Gain::Peak { center: vec![0.0, 0.0] },
        1.0,
        ActionSet::new(moves.clone(), Cost::Proportional { k1: 0.4 }).unwrap(),
        ActionSet::new(moves, Cost::FixedPlusProportional { k0: 0.3, k1: 0.2 }).unwrap(),
    )
    .unwrap()
}

fn grid(n: usize) -> Grid {
    Grid::on(BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(), vec![n, n]).unwrap()
}

fn sweep(c: &mut Criterion) {
    let p = planar();
    let mut g = c.benchmark_group("bellman_sweep");
    for n in [41, 121, 241] {
        let gf = GridFunction::from_fn(grid(n), |x| (x[0] * x[1]).sin());
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n * n), &gf, |b, gf| {
                b.iter(|| bellman_operator_with(&p, black_box(gf), 0.02, exec))
            });
        }
    }
    g.finish();
}

fn residuals(c: &mut Criterion) {
    let p = planar();
    let value = solve_fixed_point(
        &p,
        &grid(81),
        &SolverConfig { dt: Some(0.05), tol: 1e-6, ..Default::default() },
    )
    .unwrap()
    .value;
    let mut g = c.benchmark_group("residual_report");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| residual_report(&p, black_box(&value), 0.6, 1e-3, exec))
        });
    }
    g.finish();
}

fn induction(c: &mut Criterion) {
    let mut g = c.benchmark_group("backward_induction");
    for (name, exec) in MODES {
        let mut spec = DiscreteGameSpec::new(planar(), grid(61), 0.05, 40).unwrap();
        spec.exec = exec;
        g.bench_function(name, |b| b.iter(|| backward_induction_lower(black_box(&spec))));
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let p = planar();
    let gr = grid(61);
    let mut g = c.benchmark_group("solve_fixed_point");
    for (name, exec) in MODES {
        let cfg = SolverConfig { dt: Some(0.05), tol: 1e-6, exec, ..Default::default() };
        g.bench_function(name, |b| b.iter(|| solve_fixed_point(&p, &gr, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(
    name = benches;
    config = Criterion::default()
        .warm_up_time(Duration::from_millis(500))
        .measurement_time(Duration::from_secs(2))
        .sample_size(10);
    targets = sweep, residuals, induction, solve
);
criterion_main!(benches);
