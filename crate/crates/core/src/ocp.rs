//! Single-shooting finite-horizon optimal control subproblem.
//!
//! Decision variables are the `N` inputs only; states come from rolling the
//! discrete model forward from the measured state. The objective is
//!
//! ```text
//! J = Σ_{i=0}^{N-1} (x_i − x_d)ᵀ Q (x_i − x_d) + (u_i − u_d)ᵀ R (u_i − u_d)
//! ```
//!
//! with no terminal term. The gradient is computed by a backward adjoint
//! sweep through the exact step Jacobians (renormalization included).

use nalgebra::{DVector, SVector, Vector6};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    step_vec, step_vjp, Control, Integrator, PhysicalParams, RelativeState, StateVector,
    CONTROL_DIM, STATE_DIM,
};
use crate::error::OcpError;
use crate::scalar::Real;

/// One MPC subproblem: horizon, model, weights and input box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct OcpSpec<T: Real> {
    pub horizon: usize,
    /// Step length in seconds.
    pub dt: T,
    /// Diagonal of the stage state weight.
    pub state_weights: SVector<T, STATE_DIM>,
    /// Diagonal of the stage input weight.
    pub input_weights: Vector6<T>,
    pub target: RelativeState<T>,
    pub input_target: Control<T>,
    pub lower: Control<T>,
    pub upper: Control<T>,
    pub integrator: Integrator,
    pub params: PhysicalParams<T>,
}

impl<T: Real> OcpSpec<T> {
    /// Rendezvous problem with the reference weights: 100 steps of 10 s,
    /// `Q = diag(1e5·1₃, 1e2·1₃, 1e6·1₄, 1e7·1₃)`,
    /// `R = diag(1e5·1₃, 1e10·1₃)`, thrust within ±1e-2 and torque within
    /// ±1e-4, forward Euler.
    pub fn reference() -> Self {
        let mut q = SVector::<T, STATE_DIM>::zeros();
        for (i, w) in q.iter_mut().enumerate() {
            *w = T::lit(match i {
                0..=2 => 1e5,
                3..=5 => 1e2,
                6..=9 => 1e6,
                _ => 1e7,
            });
        }
        let r = Vector6::new(
            T::lit(1e5),
            T::lit(1e5),
            T::lit(1e5),
            T::lit(1e10),
            T::lit(1e10),
            T::lit(1e10),
        );
        let upper = Control::symmetric(T::lit(1e-2), T::lit(1e-4));
        Self {
            horizon: 100,
            dt: T::lit(10.0),
            state_weights: q,
            input_weights: r,
            target: RelativeState::docked(),
            input_target: Control::zero(),
            lower: Control(-upper.0),
            upper,
            integrator: Integrator::Euler,
            params: PhysicalParams::reference(),
        }
    }

    pub fn validate(&self) -> Result<(), OcpError> {
        let bad = |what: &str| Err(OcpError::InvalidSpec(what.to_string()));
        if self.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        if !(self.dt > T::zero()) {
            return bad("dt must be positive");
        }
        if self.state_weights.iter().any(|w| !(*w >= T::zero()))
            || self.input_weights.iter().any(|w| !(*w >= T::zero()))
        {
            return bad("cost weights must be nonnegative");
        }
        if self
            .lower
            .0
            .iter()
            .zip(self.upper.0.iter())
            .any(|(l, u)| !(l <= u))
        {
            return bad("input lower bound exceeds upper bound");
        }
        if !self.params.is_valid() {
            return bad("mass and inertia must be positive");
        }
        Ok(())
    }

    /// Stage cost of a single `(x, u)` pair.
    pub fn stage_cost(&self, x: &RelativeState<T>, u: &Control<T>) -> T {
        stage_cost_vec(self, &x.0, &u.0)
    }

    /// Same problem with every weight multiplied by `factor`.
    pub fn with_scaled_weights(&self, factor: T) -> Self {
        Self {
            state_weights: self.state_weights * factor,
            input_weights: self.input_weights * factor,
            ..self.clone()
        }
    }
}

impl<T: Real> Default for OcpSpec<T> {
    fn default() -> Self {
        Self::reference()
    }
}

/// `N` inputs stored flat as `6N` scalars, element 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct ControlSequence<T: Real> {
    flat: DVector<T>,
}

impl<T: Real> ControlSequence<T> {
    pub fn zeros(horizon: usize) -> Self {
        Self {
            flat: DVector::zeros(horizon * CONTROL_DIM),
        }
    }

    pub fn from_controls(controls: &[Control<T>]) -> Self {
        let mut s = Self::zeros(controls.len());
        for (i, c) in controls.iter().enumerate() {
            s.set(i, c);
        }
        s
    }

    pub fn from_flat(flat: DVector<T>) -> Result<Self, OcpError> {
        if !flat.len().is_multiple_of(CONTROL_DIM) {
            return Err(OcpError::FlatLength(flat.len()));
        }
        Ok(Self { flat })
    }

    /// Number of inputs `N`.
    pub fn len(&self) -> usize {
        self.flat.len() / CONTROL_DIM
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn get(&self, i: usize) -> Control<T> {
        Control(
            self.flat
                .fixed_rows::<CONTROL_DIM>(i * CONTROL_DIM)
                .into_owned(),
        )
    }

    pub fn set(&mut self, i: usize, c: &Control<T>) {
        self.flat
            .fixed_rows_mut::<CONTROL_DIM>(i * CONTROL_DIM)
            .copy_from(&c.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = Control<T>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn as_flat(&self) -> &DVector<T> {
        &self.flat
    }

    pub(crate) fn flat_mut(&mut self) -> &mut DVector<T> {
        &mut self.flat
    }

    pub fn into_flat(self) -> DVector<T> {
        self.flat
    }
}

fn check_len<T: Real>(useq: &ControlSequence<T>, spec: &OcpSpec<T>) -> Result<(), OcpError> {
    if useq.len() != spec.horizon {
        return Err(OcpError::LengthMismatch {
            expected: spec.horizon,
            got: useq.len(),
        });
    }
    Ok(())
}

#[inline]
fn stage_cost_vec<T: Real>(spec: &OcpSpec<T>, x: &StateVector<T>, u: &nalgebra::Vector6<T>) -> T {
    let dx = x - spec.target.0;
    let du = u - spec.input_target.0;
    dx.component_mul(&dx).dot(&spec.state_weights) + du.component_mul(&du).dot(&spec.input_weights)
}

/// States `x_0 … x_N` produced by applying `useq` from `x0`.
pub fn rollout<T: Real>(
    x0: &RelativeState<T>,
    useq: &ControlSequence<T>,
    spec: &OcpSpec<T>,
) -> Result<Vec<RelativeState<T>>, OcpError> {
    check_len(useq, spec)?;
    let mut out = Vec::with_capacity(spec.horizon + 1);
    let mut x = x0.0;
    out.push(*x0);
    for i in 0..spec.horizon {
        x = step_vec(&x, &useq.get(i).0, spec.dt, spec.integrator, &spec.params);
        out.push(RelativeState(x));
    }
    Ok(out)
}

pub fn cost<T: Real>(
    x0: &RelativeState<T>,
    useq: &ControlSequence<T>,
    spec: &OcpSpec<T>,
) -> Result<T, OcpError> {
    check_len(useq, spec)?;
    Ok(cost_unchecked(x0, useq.as_flat(), spec))
}

/// Gradient of [`cost`] with respect to the flattened input sequence.
pub fn cost_gradient<T: Real>(
    x0: &RelativeState<T>,
    useq: &ControlSequence<T>,
    spec: &OcpSpec<T>,
) -> Result<DVector<T>, OcpError> {
    check_len(useq, spec)?;
    Ok(cost_and_gradient(x0, useq.as_flat(), spec).1)
}

pub(crate) fn cost_unchecked<T: Real>(
    x0: &RelativeState<T>,
    flat: &DVector<T>,
    spec: &OcpSpec<T>,
) -> T {
    let mut x = x0.0;
    let mut total = T::zero();
    for i in 0..spec.horizon {
        let u = flat.fixed_rows::<CONTROL_DIM>(i * CONTROL_DIM).into_owned();
        total += stage_cost_vec(spec, &x, &u);
        if i + 1 < spec.horizon {
            x = step_vec(&x, &u, spec.dt, spec.integrator, &spec.params);
        }
    }
    total
}

pub(crate) fn cost_and_gradient<T: Real>(
    x0: &RelativeState<T>,
    flat: &DVector<T>,
    spec: &OcpSpec<T>,
) -> (T, DVector<T>) {
    let n = spec.horizon;
    let two = T::lit(2.0);
    // Forward sweep over the costed states x_0 … x_{N−1}.
    let mut states: Vec<StateVector<T>> = Vec::with_capacity(n);
    let mut x = x0.0;
    let mut total = T::zero();
    for i in 0..n {
        let u = flat.fixed_rows::<CONTROL_DIM>(i * CONTROL_DIM).into_owned();
        total += stage_cost_vec(spec, &x, &u);
        states.push(x);
        if i + 1 < n {
            x = step_vec(&x, &u, spec.dt, spec.integrator, &spec.params);
        }
    }

    // Backward sweep: λ_i = ∂J/∂x_i accumulated from stages i … N−1.
    let mut grad = DVector::zeros(n * CONTROL_DIM);
    let mut lambda = StateVector::<T>::zeros();
    for i in (0..n).rev() {
        let u = flat.fixed_rows::<CONTROL_DIM>(i * CONTROL_DIM).into_owned();
        let du = (u - spec.input_target.0).component_mul(&spec.input_weights) * two;
        let dx = (states[i] - spec.target.0).component_mul(&spec.state_weights) * two;
        let g = if i + 1 < n {
            let (lx, lu) = step_vjp(
                &states[i],
                &u,
                spec.dt,
                spec.integrator,
                &spec.params,
                &lambda,
            );
            lambda = dx + lx;
            du + lu
        } else {
            lambda = dx;
            du
        };
        grad.fixed_rows_mut::<CONTROL_DIM>(i * CONTROL_DIM)
            .copy_from(&g);
    }
    (total, grad)
}
