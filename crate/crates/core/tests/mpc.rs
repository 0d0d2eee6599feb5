use nalgebra::Vector3;
use tcmpc::dynamics::RelativeState;
use tcmpc::*;

fn preset() -> State13 {
    let mut x = RelativeState::from_slice(&[
        1.5, -1.77, 3.0, 1e-3, 3.4e-3, 0.0, 0.772, 0.463, 0.309, 0.309, -2.15e-4, 1e-3, -4.6e-3,
    ])
    .unwrap();
    x.normalize_attitude();
    x
}

fn short_mission(steps: usize) -> MissionConfig {
    MissionConfig {
        max_steps: steps,
        ..MissionConfig::default()
    }
}

#[test]
fn docking_test_examples() {
    let xd = State13::docked();
    assert!(is_docked(&xd, &Control6::zero(), 1e-3));

    let mut off = xd;
    off.0[0] = 2e-3;
    assert!(!is_docked(&off, &Control6::zero(), 1e-3));

    let mut edge = xd;
    edge.0[6] = 1.0 - 1e-3;
    assert!(is_docked(&edge, &Control6::zero(), 1e-3));

    let thrusting = Control6::new(Vector3::new(2e-3, 0.0, 0.0), Vector3::zeros());
    assert!(!is_docked(&xd, &thrusting, 1e-3));
}

#[test]
fn warm_start_modes() {
    let a = Control6::symmetric(1e-3, 1e-5);
    let b = Control6::symmetric(2e-3, 2e-5);
    let c = Control6::symmetric(-3e-3, -3e-5);
    let seq = ControlSequence::from_controls(&[a, b, c]);
    assert_eq!(
        warm_start_next(&seq, WarmStart::Shift),
        ControlSequence::from_controls(&[b, c, c])
    );
    assert_eq!(warm_start_next(&seq, WarmStart::Hold), seq);
}

#[test]
fn starting_docked_finishes_immediately() {
    let spec = OcpSpec::reference();
    let rec = run_closed_loop(
        &State13::docked(),
        &spec,
        &SolverConfig::default(),
        &MissionConfig::default(),
        0,
    )
    .unwrap();
    assert!(rec.docked);
    assert_eq!(rec.dock_step, Some(0));
    assert_eq!(rec.steps.len(), 1);
    assert_eq!(rec.steps[0].control, Control6::zero());
    assert_eq!(rec.final_state, State13::docked());
}

#[test]
fn unbounded_mpc_docks_from_a_mild_offset() {
    let spec = OcpSpec::reference();
    let mut x0 = State13::docked();
    x0.0[0] = 0.1;
    let rec = run_closed_loop(
        &x0,
        &spec,
        &SolverConfig::default(),
        &MissionConfig::default(),
        0,
    )
    .unwrap();
    assert!(rec.docked, "final error {}", state_error(&rec.final_state));
    let k = rec.dock_step.unwrap();
    assert!(rec.steps[k].docked);
    assert!(rec.steps[..k].iter().all(|s| !s.docked));
}

#[test]
fn closed_loop_is_deterministic_under_noise() {
    let spec = OcpSpec::reference();
    let mcfg = MissionConfig {
        perturbation: Perturbation::reference(),
        ..short_mission(15)
    };
    let scfg = SolverConfig::with_budget(Budget::Limited(4));
    let a = run_closed_loop(&preset(), &spec, &scfg, &mcfg, 42).unwrap();
    let b = run_closed_loop(&preset(), &spec, &scfg, &mcfg, 42).unwrap();
    assert_eq!(a.states(), b.states());
    assert_eq!(a.controls(), b.controls());
    let c = run_closed_loop(&preset(), &spec, &scfg, &mcfg, 43).unwrap();
    assert_ne!(a.final_state, c.final_state);
}

#[test]
fn plant_matches_prediction_without_noise() {
    for integrator in [Integrator::Euler, Integrator::Rk4] {
        let spec = OcpSpec {
            integrator,
            horizon: 20,
            ..OcpSpec::reference()
        };
        let mcfg = MissionConfig {
            plant_integrator: integrator,
            ..short_mission(10)
        };
        let rec = run_closed_loop(
            &preset(),
            &spec,
            &SolverConfig::with_budget(Budget::Limited(3)),
            &mcfg,
            0,
        )
        .unwrap();
        let states = rec.states();
        for (k, s) in rec.steps.iter().enumerate() {
            let predicted = rollout(
                &s.state,
                &ControlSequence::from_controls(&[s.control]),
                &OcpSpec {
                    horizon: 1,
                    ..spec.clone()
                },
            )
            .unwrap();
            assert_eq!(predicted[1], states[k + 1]);
        }
    }
}

#[test]
fn records_respect_budget_bounds_and_norms() {
    let spec = OcpSpec::reference();
    let mcfg = MissionConfig {
        perturbation: Perturbation::reference(),
        ..short_mission(30)
    };
    let rec = run_closed_loop(
        &preset(),
        &spec,
        &SolverConfig::with_budget(Budget::Limited(2)),
        &mcfg,
        9,
    )
    .unwrap();
    assert_eq!(rec.states().len(), rec.controls().len() + 1);
    for s in &rec.steps {
        assert!(s.iterations <= 2);
        assert!(s.descent_ok);
        for j in 0..6 {
            assert!(s.control.0[j].abs() <= spec.upper.0[j]);
        }
    }
    for x in rec.states() {
        assert!((x.attitude().norm() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn hold_and_shift_warm_starts_both_run() {
    let spec = OcpSpec {
        horizon: 30,
        ..OcpSpec::reference()
    };
    for mode in [WarmStart::Shift, WarmStart::Hold] {
        let mcfg = MissionConfig {
            warm_start: mode,
            ..short_mission(5)
        };
        let rec = run_closed_loop(
            &preset(),
            &spec,
            &SolverConfig::with_budget(Budget::Limited(2)),
            &mcfg,
            0,
        )
        .unwrap();
        assert_eq!(rec.steps.len(), 5);
    }
}

#[test]
fn open_loop_plays_back_the_offline_sequence() {
    let spec = OcpSpec {
        horizon: 20,
        integrator: Integrator::Rk4,
        ..OcpSpec::reference()
    };
    let offline = SolverConfig {
        max_iterations: 50,
        ..SolverConfig::default()
    };
    let mcfg = MissionConfig {
        plant_integrator: Integrator::Rk4,
        perturbation: Perturbation::reference(),
        ..MissionConfig::default()
    };
    let (rec, useq) = run_open_loop(&preset(), &spec, &offline, &mcfg, 1).unwrap();
    assert_eq!(rec.steps.len(), 20);
    for (k, s) in rec.steps.iter().enumerate() {
        assert_eq!(s.control, useq.get(k));
    }
    assert!(rec.steps[0].iterations > 0);
    assert!(rec.steps[1..]
        .iter()
        .all(|s| s.iterations == 0 && s.reason.is_none()));
}

#[test]
fn invalid_missions_are_rejected() {
    let spec = OcpSpec::reference();
    let bad = MissionConfig {
        max_steps: 0,
        ..MissionConfig::default()
    };
    assert!(run_closed_loop(&preset(), &spec, &SolverConfig::default(), &bad, 0).is_err());
    let bad = MissionConfig {
        perturbation: Perturbation::Uniform {
            w_max: -1.0,
            symmetric: false,
        },
        ..MissionConfig::default()
    };
    assert!(bad.validate().is_err());
}
