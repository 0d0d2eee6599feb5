//! Open-loop playback versus closed-loop MPC from one initial state, under
//! one perturbation realization.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tcmpc::{
    run_closed_loop, run_open_loop, state_error, Budget, Integrator, MissionConfig, OcpSpec,
    Perturbation, SolverConfig, State13, TrialRecord,
};

use crate::campaign::write_json;
use crate::records::write_trial;
use crate::HarnessError;

pub const OPEN_LOOP_FILE: &str = "open_loop.csv";
pub const CLOSED_LOOP_FILE: &str = "closed_loop.csv";
pub const COMPARISON_FILE: &str = "comparison.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub x0: State13,
    pub spec: OcpSpec,
    /// Used for the offline solve and for every closed-loop solve.
    pub solver: SolverConfig,
    pub mission: MissionConfig,
    pub seed: u64,
}

impl ComparisonConfig {
    /// Preset initial state, RK4 model and plant, `U[0, 1e-4)` noise, and an
    /// unbudgeted box-scaled solver with a 10000-iteration ceiling.
    pub fn reference() -> Self {
        let mut solver = SolverConfig::with_budget(Budget::Unbounded);
        solver.line_search.box_scaled = true;
        solver.max_iterations = 10_000;
        Self {
            x0: crate::preset_initial_state(),
            spec: OcpSpec {
                integrator: Integrator::Rk4,
                ..OcpSpec::reference()
            },
            solver,
            mission: MissionConfig {
                plant_integrator: Integrator::Rk4,
                perturbation: Perturbation::reference(),
                ..MissionConfig::default()
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub perturbation: Perturbation,
    pub seed: u64,
    pub open_loop_final_error: f64,
    pub closed_loop_final_error: f64,
    pub open_loop_docked: bool,
    pub closed_loop_docked: bool,
    pub closed_loop_dock_step: Option<usize>,
    /// Open-loop final error over closed-loop final error.
    pub error_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub open_loop: TrialRecord,
    pub closed_loop: TrialRecord,
    pub result: ComparisonResult,
}

pub fn run_comparison(
    cfg: &ComparisonConfig,
    out: Option<&Path>,
) -> Result<Comparison, HarnessError> {
    let (open_loop, _) = run_open_loop(&cfg.x0, &cfg.spec, &cfg.solver, &cfg.mission, cfg.seed)?;
    let closed_loop = run_closed_loop(&cfg.x0, &cfg.spec, &cfg.solver, &cfg.mission, cfg.seed)?;
    let open_err = state_error(&open_loop.final_state);
    let closed_err = state_error(&closed_loop.final_state);
    let result = ComparisonResult {
        perturbation: cfg.mission.perturbation,
        seed: cfg.seed,
        open_loop_final_error: open_err,
        closed_loop_final_error: closed_err,
        open_loop_docked: open_loop.docked,
        closed_loop_docked: closed_loop.docked,
        closed_loop_dock_step: closed_loop.dock_step,
        error_ratio: open_err / closed_err,
    };
    if let Some(dir) = out {
        let budget = cfg.solver.budget;
        write_trial(
            &dir.join(OPEN_LOOP_FILE),
            0,
            Budget::Unbounded,
            cfg.spec.dt,
            &open_loop,
        )?;
        write_trial(
            &dir.join(CLOSED_LOOP_FILE),
            0,
            budget,
            cfg.spec.dt,
            &closed_loop,
        )?;
        write_json(&dir.join(COMPARISON_FILE), &result)?;
    }
    Ok(Comparison {
        open_loop,
        closed_loop,
        result,
    })
}
