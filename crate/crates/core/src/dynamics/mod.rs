//! Quaternion algebra and the 13-state relative motion model.

mod cw;
mod integrate;
mod model;
mod quaternion;
mod state;

pub use cw::{cw_analytic_transition, Translation};
pub use integrate::{linearize, step, Integrator};
pub use model::{full_deriv, InputJacobian, StateJacobian};
pub use quaternion::{quat_to_rotation, skew, Quat, Rotation, UNIT_NORM_FLAG_TOL};
pub use state::{
    Control, ControlVector, PhysicalParams, RelativeState, StateVector, UnitsMode, CONTROL_DIM,
    STATE_DIM,
};

pub(crate) use integrate::{step_vec, step_vjp};
