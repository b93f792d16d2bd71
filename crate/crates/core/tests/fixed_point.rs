use impulse_game::oracle::{backward_induction_lower, backward_induction_upper, value_gap, DiscreteGameSpec};
use impulse_game::qvi::{boundary_margin, h_inf_chi, h_sup_c};
use impulse_game::solver::continuity_modulus_check;
use impulse_game::{
    solve_fixed_point, validate_h1, value_bound, ActionSet, BoxDomain, Cost, Drift, Execution, Gain,
    GameProblem, Grid, GridFunction, InitialGuess, Region, SolverConfig,
};

fn asymmetric() -> GameProblem {
    GameProblem::new(
        1,
        Drift::SaturatedAffine {
            matrix: vec![vec![-0.5]],
            offset: vec![0.2],
            saturation: 2.0,
        },
        Gain::Peak { center: vec![0.3] },
        0.7,
        ActionSet::new(
            vec![vec![-0.4], vec![0.6]],
            Cost::FixedPlusProportional { k0: 0.05, k1: 0.3 },
        )
        .unwrap(),
        ActionSet::new(
            vec![vec![0.5], vec![-0.8]],
            Cost::FixedPlusProportional { k0: 0.1, k1: 0.1 },
        )
        .unwrap(),
    )
    .unwrap()
}

fn solve(p: &GameProblem, g: &Grid, dt: f64, guess: InitialGuess) -> GridFunction {
    let cfg = SolverConfig {
        dt: Some(dt),
        initial_guess: guess,
        ..Default::default()
    };
    let r = solve_fixed_point(p, g, &cfg).unwrap();
    assert!(r.converged);
    r.value
}

#[test]
fn solver_tracks_the_oracle_with_drift() {
    let p = asymmetric();
    let g = Grid::new(vec![-3.0], vec![3.0], vec![121]).unwrap();
    let dt = 0.02;
    let v = solve(&p, &g, dt, InitialGuess::UpperBound);
    let spec = DiscreteGameSpec::new(p.clone(), g.clone(), dt, 1500).unwrap();
    let lower = backward_induction_lower(&spec);
    let upper = backward_induction_upper(&spec);
    let mask = g.interior_mask(boundary_margin(&p, dt));
    assert!(spec.tail_bound() < 1e-6);
    assert!(value_gap(&lower, &upper, &mask).unwrap() <= 1e-12);
    let d = v.masked_sup_distance(&lower, &mask).unwrap();
    assert!(d < 5e-2, "solver vs oracle {d}");
}

#[test]
fn obstacle_invariants_and_policy_partition() {
    let p = asymmetric();
    let g = Grid::new(vec![-3.0], vec![3.0], vec![121]).unwrap();
    let dt = 0.02;
    let cfg = SolverConfig { dt: Some(dt), ..Default::default() };
    let r = solve_fixed_point(&p, &g, &cfg).unwrap();
    let v = &r.value;
    for k in 0..g.len() {
        let x = g.point(k);
        let inf = h_inf_chi(&p, v, &x).value;
        let sup = h_sup_c(&p, v, &x).value;
        let val = v.value(k);
        assert!(val - inf <= 1e-6);
        if inf - val > 1e-3 {
            assert!(sup - val <= 1e-6);
        }
        // the active branch reproduces the value
        match r.policy[k].region {
            Region::XiImpulse => assert!((val - sup).abs() < 1e-6),
            Region::EtaImpulse => assert!((val - inf).abs() < 1e-6),
            Region::Continue => assert!(val > sup - 1e-6 && val < inf + 1e-6),
        }
    }
}

#[test]
fn fixed_point_stays_within_the_value_bound() {
    let p = asymmetric();
    let g = Grid::new(vec![-3.0], vec![3.0], vec![61]).unwrap();
    let bound = value_bound(&p);
    for guess in [InitialGuess::UpperBound, InitialGuess::LowerBound, InitialGuess::Zero] {
        let v = solve(&p, &g, 0.05, guess);
        assert!(v.values().iter().all(|x| x.abs() <= bound + 1e-12));
    }
}

#[test]
fn guesses_meet_at_one_fixed_point() {
    let p = asymmetric();
    let g = Grid::new(vec![-3.0], vec![3.0], vec![61]).unwrap();
    let a = solve(&p, &g, 0.05, InitialGuess::UpperBound);
    let b = solve(&p, &g, 0.05, InitialGuess::LowerBound);
    let c = solve(&p, &g, 0.05, InitialGuess::Given(GridFunction::from_fn(g.clone(), |x| x[0].sin())));
    let d = a.sup_distance(&b).unwrap();
    assert!(d <= 2e-8, "{d}");
    assert!(a.sup_distance(&c).unwrap() <= 2e-8);
}

#[test]
fn constant_gain_scales_with_discount() {
    let set = ActionSet::new(vec![vec![-0.5], vec![0.5]], Cost::FixedPlusProportional { k0: 5.0, k1: 0.0 }).unwrap();
    let g = Grid::new(vec![-1.0], vec![1.0], vec![21]).unwrap();
    for lambda in [0.5, 1.0, 4.0] {
        let p = GameProblem::new(1, Drift::Zero, Gain::Constant { value: 0.7 }, lambda, set.clone(), set.clone())
            .unwrap();
        let v = solve(&p, &g, 0.05, InitialGuess::Zero);
        assert!(v.values().iter().all(|x| (x - 0.7 / lambda).abs() < 1e-7));
    }
}

#[test]
fn solved_value_respects_continuity_modulus() {
    let p = asymmetric();
    let g = Grid::new(vec![-3.0], vec![3.0], vec![121]).unwrap();
    let dt = 0.02;
    let v = solve(&p, &g, dt, InitialGuess::UpperBound);
    let report = validate_h1(&p, g.domain(), 256, 5).unwrap();
    let mask = g.interior_mask(boundary_margin(&p, dt));
    let m = continuity_modulus_check(&p, &report, &v, &mask, 1e-6);
    assert!(m.pairs_checked > 0);
    assert!(m.passed, "{m:?}");
}

#[test]
fn sequential_and_parallel_solves_agree_bitwise() {
    let p = asymmetric();
    let g = Grid::new(vec![-3.0], vec![3.0], vec![61]).unwrap();
    let run = |exec| {
        let cfg = SolverConfig { dt: Some(0.05), exec, ..Default::default() };
        solve_fixed_point(&p, &g, &cfg).unwrap()
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}

#[test]
fn two_dimensional_solve_converges() {
    let set = ActionSet::new(
        vec![vec![0.5, 0.0], vec![0.0, 0.5], vec![-0.5, 0.0], vec![0.0, -0.5]],
        Cost::FixedPlusProportional { k0: 0.1, k1: 0.4 },
    )
    .unwrap();
    let p = GameProblem::new(
        2,
        Drift::Constant { velocity: vec![0.3, -0.2] },
        Gain::Peak { center: vec![0.0, 0.0] },
        1.0,
        set.clone(),
        set,
    )
    .unwrap();
    let domain = BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
    let g = Grid::on(domain, vec![21, 21]).unwrap();
    let v = solve(&p, &g, 0.1, InitialGuess::UpperBound);
    assert!(v.values().iter().all(|x| x.abs() <= value_bound(&p)));
}
