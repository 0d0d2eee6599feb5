use nalgebra::{DVector, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcmpc::dynamics::RelativeState;
use tcmpc::*;

fn short_spec(horizon: usize) -> OcpSpec {
    OcpSpec {
        horizon,
        ..OcpSpec::reference()
    }
}

fn random_instance(seed: u64, horizon: usize) -> (State13, ControlSequence) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = |b: f64| rng.gen_range(-b..b);
    let q = Quaternion::new(v(1.0), Vector3::new(v(1.0), v(1.0), v(1.0)))
        .try_normalize()
        .unwrap();
    let x0 = RelativeState::from_parts(
        Vector3::new(v(1.5), v(1.5), v(1.5)),
        Vector3::new(v(1e-3), v(1e-3), v(1e-3)),
        q,
        Vector3::new(v(2e-3), v(2e-3), v(2e-3)),
    );
    // Warm starts deliberately straddle the box so projection matters.
    let bounds = OcpSpec::reference().upper.0;
    let flat = DVector::from_fn(horizon * 6, |k, _| 2.0 * v(bounds[k % 6]));
    (x0, ControlSequence::from_flat(flat).unwrap())
}

fn within_box(u: &ControlSequence, spec: &OcpSpec) -> bool {
    u.iter()
        .all(|c| (0..6).all(|j| c.0[j] >= spec.lower.0[j] && c.0[j] <= spec.upper.0[j]))
}

#[test]
fn projection_examples() {
    let spec = short_spec(2);
    let inside = ControlSequence::from_controls(&[
        Control6::symmetric(5e-3, -5e-5),
        Control6::symmetric(-1e-2, 1e-4),
    ]);
    assert_eq!(project_box(&inside, &spec.lower, &spec.upper), inside);

    let mut wild = ControlSequence::zeros(2);
    wild.set(
        0,
        &Control6::new(Vector3::new(0.5, -0.5, 0.0), Vector3::new(1.0, 0.0, -1.0)),
    );
    let p = project_box(&wild, &spec.lower, &spec.upper);
    assert_eq!(p.get(0).0[0], 1e-2);
    assert_eq!(p.get(0).0[1], -1e-2);
    assert_eq!(p.get(0).0[3], 1e-4);
    assert_eq!(p.get(0).0[5], -1e-4);
    assert_eq!(project_box(&p, &spec.lower, &spec.upper), p);
}

#[test]
fn equilibrium_is_optimal_without_iterating() {
    let spec = OcpSpec::reference();
    let out = solve(
        &spec,
        &State13::docked(),
        &ControlSequence::zeros(spec.horizon),
        &SolverConfig::default(),
    )
    .unwrap();
    assert_eq!(out.reason, Termination::OptimalityTol);
    assert_eq!(out.iterations, 0);
    assert!(out.useq.as_flat().iter().all(|v| *v == 0.0));
}

#[test]
fn budget_of_three_is_respected() {
    let spec = short_spec(20);
    for seed in 0..5 {
        let (x0, warm) = random_instance(seed, 20);
        let out = solve(
            &spec,
            &x0,
            &warm,
            &SolverConfig::with_budget(Budget::Limited(3)),
        )
        .unwrap();
        assert!(out.iterations <= 3);
        assert!(matches!(
            out.reason,
            Termination::IterationCap | Termination::OptimalityTol | Termination::LineSearchStall
        ));
    }
}

#[test]
fn solves_descend_from_the_projected_warm_start() {
    for seed in 0..20 {
        let horizon = [5usize, 10, 20][seed as usize % 3];
        let mut spec = short_spec(horizon);
        if seed % 2 == 1 {
            spec.integrator = Integrator::Rk4;
        }
        let (x0, warm) = random_instance(100 + seed, horizon);
        let start = cost(&x0, &project_box(&warm, &spec.lower, &spec.upper), &spec).unwrap();
        let out = solve(
            &spec,
            &x0,
            &warm,
            &SolverConfig::with_budget(Budget::Limited(10)),
        )
        .unwrap();
        let end = cost(&x0, &out.useq, &spec).unwrap();
        assert_eq!(end, out.cost);
        assert!(end < start, "seed {seed}: {end} !< {start}");
        assert!(out.is_monotone());
        assert!(within_box(&out.useq, &spec));
    }
}

#[test]
fn larger_budgets_extend_the_same_iterate_sequence() {
    let spec = short_spec(20);
    let (x0, warm) = random_instance(7, 20);
    let runs: Vec<SolveOutcome> = [1usize, 2, 4, 8, 16]
        .iter()
        .map(|j| {
            solve(
                &spec,
                &x0,
                &warm,
                &SolverConfig::with_budget(Budget::Limited(*j)),
            )
            .unwrap()
        })
        .collect();
    for pair in runs.windows(2) {
        assert!(pair[0].cost >= pair[1].cost);
        let n = pair[0].cost_history.len();
        assert_eq!(pair[0].cost_history[..], pair[1].cost_history[..n]);
    }
}

#[test]
fn unbounded_budget_uses_the_ceiling() {
    let spec = short_spec(10);
    let (x0, warm) = random_instance(3, 10);
    let cfg = SolverConfig {
        max_iterations: 25,
        ..SolverConfig::default()
    };
    let out = solve(&spec, &x0, &warm, &cfg).unwrap();
    assert!(out.iterations <= 25);
}

#[test]
fn box_scaled_metric_also_descends() {
    let spec = short_spec(10);
    let (x0, warm) = random_instance(12, 10);
    let mut cfg = SolverConfig::with_budget(Budget::Limited(20));
    cfg.line_search.box_scaled = true;
    let start = cost(&x0, &project_box(&warm, &spec.lower, &spec.upper), &spec).unwrap();
    let out = solve(&spec, &x0, &warm, &cfg).unwrap();
    assert!(out.cost < start);
    assert!(out.is_monotone());
    assert!(within_box(&out.useq, &spec));
}

#[test]
fn budget_parsing() {
    assert_eq!("optimal".parse::<Budget>().unwrap(), Budget::Unbounded);
    assert_eq!("16".parse::<Budget>().unwrap(), Budget::Limited(16));
    assert!("0".parse::<Budget>().is_err());
    assert!("soon".parse::<Budget>().is_err());
    assert_eq!(Budget::Limited(4).to_string(), "4");
    assert_eq!(Budget::Unbounded.to_string(), "optimal");
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = SolverConfig::default();
    cfg.line_search.shrink = 1.0;
    assert!(cfg.validate().is_err());
    let cfg = SolverConfig {
        opt_tol: 0.0,
        ..SolverConfig::default()
    };
    assert!(cfg.validate().is_err());
    assert!(SolverConfig::with_budget(Budget::Limited(0))
        .validate()
        .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iteration_cap_and_feasibility_hold(seed in 0u64..10_000, budget in 1usize..6) {
        let spec = short_spec(6);
        let (x0, warm) = random_instance(seed, 6);
        let out = solve(&spec, &x0, &warm, &SolverConfig::with_budget(Budget::Limited(budget))).unwrap();
        prop_assert!(out.iterations <= budget);
        prop_assert!(within_box(&out.useq, &spec));
        prop_assert!(out.is_monotone());
    }
}
