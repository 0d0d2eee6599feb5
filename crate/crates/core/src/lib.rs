//! Time-constrained model predictive control for six-degree-of-freedom
//! rendezvous and docking of a deputy spacecraft with an uncontrolled chief
//! in a circular orbit.
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the campaign tooling uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod mpc;
pub mod ocp;
pub mod scalar;
pub mod solver;

pub use dynamics::{
    cw_analytic_transition, full_deriv, quat_to_rotation, skew, step, Integrator, UnitsMode,
};
pub use error::{ConfigError, OcpError};
pub use mpc::{
    is_docked, run_closed_loop, run_open_loop, state_error, warm_start_next, MissionConfig,
    Perturbation, StepRecord, WarmStart,
};
pub use ocp::{cost, cost_gradient, rollout};
pub use scalar::Real;
pub use solver::{project_box, solve, Budget, LineSearch, Termination};

pub type Quaternion = dynamics::Quat<f64>;
pub type State13 = dynamics::RelativeState<f64>;
pub type Control6 = dynamics::Control<f64>;
pub type PhysicalParams = dynamics::PhysicalParams<f64>;
pub type OcpSpec = ocp::OcpSpec<f64>;
pub type ControlSequence = ocp::ControlSequence<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
pub type SolveOutcome = solver::SolveOutcome<f64>;
pub type TrialRecord = mpc::TrialRecord<f64>;
