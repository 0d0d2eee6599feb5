use serde::{Deserialize, Serialize};

use super::model::{deriv, deriv_vjp, deriv_with_jacobians, InputJacobian, StateJacobian};
use super::state::{
    normalize_quaternion_block, Control, ControlVector, PhysicalParams, RelativeState, StateVector,
};
use crate::scalar::Real;

/// Fixed-step integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

impl std::str::FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Self::Euler),
            "rk4" => Ok(Self::Rk4),
            other => Err(format!(
                "unknown integrator `{other}` (expected euler or rk4)"
            )),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Euler => "euler",
            Self::Rk4 => "rk4",
        })
    }
}

/// Advances the state by `dt` seconds under constant input, then projects
/// the quaternion back onto the unit sphere.
pub fn step<T: Real>(
    x: &RelativeState<T>,
    u: &Control<T>,
    dt: T,
    method: Integrator,
    p: &PhysicalParams<T>,
) -> RelativeState<T> {
    RelativeState(step_vec(&x.0, &u.0, dt, method, p))
}

#[inline]
pub(crate) fn step_vec<T: Real>(
    x: &StateVector<T>,
    u: &ControlVector<T>,
    dt: T,
    method: Integrator,
    p: &PhysicalParams<T>,
) -> StateVector<T> {
    let mut y = match method {
        Integrator::Euler => x + deriv(x, u, p) * dt,
        Integrator::Rk4 => {
            let half = dt * T::lit(0.5);
            let k1 = deriv(x, u, p);
            let k2 = deriv(&(x + k1 * half), u, p);
            let k3 = deriv(&(x + k2 * half), u, p);
            let k4 = deriv(&(x + k3 * dt), u, p);
            x + (k1 + (k2 + k3) * T::lit(2.0) + k4) * (dt / T::lit(6.0))
        }
    };
    normalize_quaternion_block(&mut y);
    y
}

/// One step together with `∂x⁺/∂x` and `∂x⁺/∂u`, including the
/// renormalization.
pub fn linearize<T: Real>(
    x: &StateVector<T>,
    u: &ControlVector<T>,
    dt: T,
    method: Integrator,
    p: &PhysicalParams<T>,
) -> (StateVector<T>, StateJacobian<T>, InputJacobian<T>) {
    let (y, mut a, mut b) = match method {
        Integrator::Euler => {
            let (f, fx, fu) = deriv_with_jacobians(x, u, p);
            (x + f * dt, StateJacobian::identity() + fx * dt, fu * dt)
        }
        Integrator::Rk4 => {
            let half = dt * T::lit(0.5);
            let id = StateJacobian::<T>::identity();
            let (k1, f1, g1) = deriv_with_jacobians(x, u, p);
            let (k2, f2, g2) = deriv_with_jacobians(&(x + k1 * half), u, p);
            let (k3, f3, g3) = deriv_with_jacobians(&(x + k2 * half), u, p);
            let (k4, f4, g4) = deriv_with_jacobians(&(x + k3 * dt), u, p);

            let k1x = f1;
            let k1u = g1;
            let k2x = f2 * (id + k1x * half);
            let k2u = f2 * k1u * half + g2;
            let k3x = f3 * (id + k2x * half);
            let k3u = f3 * k2u * half + g3;
            let k4x = f4 * (id + k3x * dt);
            let k4u = f4 * k3u * dt + g4;

            let w = dt / T::lit(6.0);
            let two = T::lit(2.0);
            (
                x + (k1 + (k2 + k3) * two + k4) * w,
                id + (k1x + (k2x + k3x) * two + k4x) * w,
                (k1u + (k2u + k3u) * two + k4u) * w,
            )
        }
    };

    // q̂ = q/|q| has Jacobian (I − q̂q̂ᵀ)/|q|.
    let q = y.fixed_rows::<4>(6).into_owned();
    let norm = q.norm();
    let mut out = y;
    if norm > T::zero() {
        let qh = q / norm;
        let proj = (nalgebra::Matrix4::identity() - qh * qh.transpose()) / norm;
        let rows_a = proj * a.fixed_rows::<4>(6);
        let rows_b = proj * b.fixed_rows::<4>(6);
        a.fixed_rows_mut::<4>(6).copy_from(&rows_a);
        b.fixed_rows_mut::<4>(6).copy_from(&rows_b);
    }
    normalize_quaternion_block(&mut out);
    (out, a, b)
}

/// Pulls the adjoint `λ` of `x⁺ = step(x, u)` back to `(λᵀ ∂x⁺/∂x, λᵀ ∂x⁺/∂u)`.
/// Stage states are recomputed rather than stored.
pub(crate) fn step_vjp<T: Real>(
    x: &StateVector<T>,
    u: &ControlVector<T>,
    dt: T,
    method: Integrator,
    p: &PhysicalParams<T>,
    lambda: &StateVector<T>,
) -> (StateVector<T>, ControlVector<T>) {
    match method {
        Integrator::Euler => {
            let y = x + deriv(x, u, p) * dt;
            let mu = normalization_vjp(&y, lambda);
            let (gx, gu) = deriv_vjp(x, u, p, &(mu * dt));
            (mu + gx, gu)
        }
        Integrator::Rk4 => {
            let half = dt * T::lit(0.5);
            let two = T::lit(2.0);
            let k1 = deriv(x, u, p);
            let s2 = x + k1 * half;
            let k2 = deriv(&s2, u, p);
            let s3 = x + k2 * half;
            let k3 = deriv(&s3, u, p);
            let s4 = x + k3 * dt;
            let k4 = deriv(&s4, u, p);
            let y = x + (k1 + (k2 + k3) * two + k4) * (dt / T::lit(6.0));

            let mu = normalization_vjp(&y, lambda);
            let w = mu * (dt / T::lit(6.0));
            let mut gx = mu;
            let (s4x, s4u) = deriv_vjp(&s4, u, p, &w);
            gx += s4x;
            let (s3x, s3u) = deriv_vjp(&s3, u, p, &(w * two + s4x * dt));
            gx += s3x;
            let (s2x, s2u) = deriv_vjp(&s2, u, p, &(w * two + s3x * half));
            gx += s2x;
            let (s1x, s1u) = deriv_vjp(x, u, p, &(w + s2x * half));
            gx += s1x;
            (gx, s1u + s2u + s3u + s4u)
        }
    }
}

/// Adjoint of the quaternion renormalization at the pre-normalized `y`.
#[inline]
fn normalization_vjp<T: Real>(y: &StateVector<T>, lambda: &StateVector<T>) -> StateVector<T> {
    let q = y.fixed_rows::<4>(6).into_owned();
    let norm = q.norm();
    let mut mu = *lambda;
    if norm > T::zero() {
        let qh = q / norm;
        let l = lambda.fixed_rows::<4>(6).into_owned();
        let pulled = (l - qh * qh.dot(&l)) / norm;
        mu.fixed_rows_mut::<4>(6).copy_from(&pulled);
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::quaternion::Quat;
    use approx::assert_relative_eq;
    use nalgebra::{Vector3, Vector6};

    #[test]
    fn equilibrium_is_exact() {
        let p = PhysicalParams::<f64>::reference();
        let xd = RelativeState::docked();
        for m in [Integrator::Euler, Integrator::Rk4] {
            for dt in [0.1, 1.0, 10.0] {
                assert_eq!(step(&xd, &Control::zero(), dt, m, &p), xd);
            }
        }
    }

    #[test]
    fn one_euler_step_from_radial_offset() {
        let p = PhysicalParams::<f64>::reference();
        let mut x = RelativeState::docked();
        x.0[0] = 1.0;
        let y = step(&x, &Control::zero(), 10.0, Integrator::Euler, &p);
        assert_relative_eq!(y.0[3], 3.63e-5, epsilon = 1e-17);
        assert_eq!(y.0[0], 1.0);
    }

    #[test]
    fn steps_keep_unit_quaternion() {
        let p = PhysicalParams::<f64>::reference();
        let mut x = RelativeState::from_parts(
            Vector3::zeros(),
            Vector3::zeros(),
            Quat::new(0.8, Vector3::new(0.6, 0.0, 0.0)),
            Vector3::new(2e-3, -1e-3, 3e-3),
        );
        let u = Control::new(Vector3::zeros(), Vector3::new(1e-4, -1e-4, 5e-5));
        for _ in 0..200 {
            x = step(&x, &u, 10.0, Integrator::Euler, &p);
            assert!((x.attitude().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_jacobians_match_differences() {
        let p = PhysicalParams::<f64>::reference();
        let x = StateVector::from_column_slice(&[
            0.4, -1.1, 0.7, 2e-3, -1e-3, 5e-4, 0.5, -0.5, 0.3, 0.6, 0.02, -0.03, 0.01,
        ]);
        let mut xn = x;
        normalize_quaternion_block(&mut xn);
        let u = Vector6::new(5e-3, -2e-3, 7e-3, 4e-5, -6e-5, 9e-5);
        for m in [Integrator::Euler, Integrator::Rk4] {
            let (y, a, b) = linearize(&xn, &u, 10.0, m, &p);
            for seed in 0..5 {
                let lambda = StateVector::from_fn(|i, _| ((i * 5 + seed) % 7) as f64 - 3.0);
                let (gx, gu) = step_vjp(&xn, &u, 10.0, m, &p, &lambda);
                assert_relative_eq!(gx, a.tr_mul(&lambda), epsilon = 1e-10, max_relative = 1e-10);
                assert_relative_eq!(gu, b.tr_mul(&lambda), epsilon = 1e-10, max_relative = 1e-10);
            }
            assert_eq!(y, step_vec(&xn, &u, 10.0, m, &p));
            let h = 1e-7;
            for j in 0..13 {
                let (mut xp, mut xm) = (xn, xn);
                xp[j] += h;
                xm[j] -= h;
                let col =
                    (step_vec(&xp, &u, 10.0, m, &p) - step_vec(&xm, &u, 10.0, m, &p)) / (2.0 * h);
                assert_relative_eq!(a.column(j).into_owned(), col, epsilon = 1e-6);
            }
            for j in 0..6 {
                let (mut up, mut um) = (u, u);
                up[j] += h;
                um[j] -= h;
                let col =
                    (step_vec(&xn, &up, 10.0, m, &p) - step_vec(&xn, &um, 10.0, m, &p)) / (2.0 * h);
                assert_relative_eq!(b.column(j).into_owned(), col, epsilon = 1e-6);
            }
        }
    }
}
