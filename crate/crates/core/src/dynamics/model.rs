//! Continuous-time relative motion: Clohessy-Wiltshire translation coupled to
//! rigid-body attitude through the body-frame thrust direction.
//!
//! The angular acceleration is assembled from Euler's equation in the deputy
//! frame and rotated into the chief frame:
//!
//! ```text
//! ω_b   = Rᵀ (δω + ω_orb)
//! ω̇_b   = J⁻¹ (τ − ω_b × J ω_b)
//! δω̇    = R ω̇_b − ω_orb × δω
//! ```
//!
//! where `R` maps deputy-frame vectors to the chief frame.

use nalgebra::{Matrix3, SMatrix, Vector3};

use super::quaternion::skew;
use super::state::{
    Control, ControlVector, PhysicalParams, RelativeState, StateVector, CONTROL_DIM, STATE_DIM,
};
use crate::scalar::Real;

pub type StateJacobian<T> = SMatrix<T, STATE_DIM, STATE_DIM>;
pub type InputJacobian<T> = SMatrix<T, STATE_DIM, CONTROL_DIM>;

/// Time derivative of the 13-dimensional relative state.
///
/// The rotation is evaluated from the stored quaternion components without
/// renormalization; integrators keep the quaternion on the unit sphere at
/// step boundaries.
pub fn full_deriv<T: Real>(
    x: &RelativeState<T>,
    u: &Control<T>,
    p: &PhysicalParams<T>,
) -> StateVector<T> {
    deriv(&x.0, &u.0, p)
}

struct Parts<T: Real> {
    eta: T,
    rho: Vector3<T>,
    omega: Vector3<T>,
    thrust: Vector3<T>,
    torque: Vector3<T>,
    rot: Matrix3<T>,
}

impl<T: Real> Parts<T> {
    #[inline]
    fn split(x: &StateVector<T>, u: &ControlVector<T>) -> Self {
        let eta = x[6];
        let rho = Vector3::new(x[7], x[8], x[9]);
        let s = skew(&rho);
        let two = T::lit(2.0);
        Self {
            eta,
            rho,
            omega: Vector3::new(x[10], x[11], x[12]),
            thrust: Vector3::new(u[0], u[1], u[2]),
            torque: Vector3::new(u[3], u[4], u[5]),
            rot: Matrix3::identity() - s * (two * eta) + s * s * two,
        }
    }
}

#[inline]
fn euler_rhs<T: Real>(inertia: &Vector3<T>, w: &Vector3<T>, torque: &Vector3<T>) -> Vector3<T> {
    let jw = inertia.component_mul(w);
    (torque - w.cross(&jw)).component_div(inertia)
}

#[inline]
pub(crate) fn deriv<T: Real>(
    x: &StateVector<T>,
    u: &ControlVector<T>,
    p: &PhysicalParams<T>,
) -> StateVector<T> {
    let c = Parts::split(x, u);
    let n = p.mean_motion;
    let half = T::lit(0.5);
    let orbit = p.orbit_rate();

    let acc = c.rot * c.thrust * p.thrust_gain();
    let body_rate = c.rot.transpose() * (c.omega + orbit);
    let body_acc = euler_rhs(&p.inertia, &body_rate, &c.torque);
    let omega_dot = c.rot * body_acc - orbit.cross(&c.omega);
    let eta_dot = half * c.rho.dot(&c.omega);
    let rho_dot = -(c.omega * c.eta + c.rho.cross(&c.omega)) * half;

    let mut d = StateVector::zeros();
    d[0] = x[3];
    d[1] = x[4];
    d[2] = x[5];
    d[3] = T::lit(3.0) * n * n * x[0] + T::lit(2.0) * n * x[4] + acc.x;
    d[4] = -T::lit(2.0) * n * x[3] + acc.y;
    d[5] = -n * n * x[2] + acc.z;
    d[6] = eta_dot;
    d[7] = rho_dot.x;
    d[8] = rho_dot.y;
    d[9] = rho_dot.z;
    d[10] = omega_dot.x;
    d[11] = omega_dot.y;
    d[12] = omega_dot.z;
    d
}

/// `∂(R a)/∂(η, ρ)` for fixed `a`, as a 3×4 block split into the η column and
/// the ρ block.
#[inline]
fn rotate_jacobian<T: Real>(
    eta: T,
    rho: &Vector3<T>,
    a: &Vector3<T>,
    transpose: bool,
) -> (Vector3<T>, Matrix3<T>) {
    let two = T::lit(2.0);
    // R a = a ∓ 2η ρ×a + 2 ρ×(ρ×a), with ρ×(ρ×a) = ρ(ρ·a) − a|ρ|².
    let sign = if transpose { T::one() } else { -T::one() };
    let d_eta = rho.cross(a) * (two * sign);
    let triple = Matrix3::identity() * rho.dot(a) + rho * a.transpose() - a * rho.transpose() * two;
    // ∂(ρ×a)/∂ρ = −[a]×
    let d_rho = skew(a) * (-two * sign * eta) + triple * two;
    (d_eta, d_rho)
}

/// Derivative together with its Jacobians with respect to state and input.
pub(crate) fn deriv_with_jacobians<T: Real>(
    x: &StateVector<T>,
    u: &ControlVector<T>,
    p: &PhysicalParams<T>,
) -> (StateVector<T>, StateJacobian<T>, InputJacobian<T>) {
    let c = Parts::split(x, u);
    let n = p.mean_motion;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let gain = p.thrust_gain();
    let orbit = p.orbit_rate();
    let inertia = &p.inertia;
    let inv_inertia = Matrix3::from_diagonal(&inertia.map(|j| T::one() / j));
    let rot_t = c.rot.transpose();

    let f = deriv(x, u, p);
    let mut fx = StateJacobian::zeros();
    let mut fu = InputJacobian::zeros();

    // Translation.
    for i in 0..3 {
        fx[(i, 3 + i)] = T::one();
    }
    fx[(3, 0)] = T::lit(3.0) * n * n;
    fx[(3, 4)] = two * n;
    fx[(4, 3)] = -two * n;
    fx[(5, 2)] = -n * n;
    let (dacc_eta, dacc_rho) = rotate_jacobian(c.eta, &c.rho, &c.thrust, false);
    fx.fixed_view_mut::<3, 1>(3, 6)
        .copy_from(&(dacc_eta * gain));
    fx.fixed_view_mut::<3, 3>(3, 7)
        .copy_from(&(dacc_rho * gain));
    fu.fixed_view_mut::<3, 3>(3, 0).copy_from(&(c.rot * gain));

    // Quaternion kinematics.
    fx.fixed_view_mut::<1, 3>(6, 7)
        .copy_from(&(c.omega.transpose() * half));
    fx.fixed_view_mut::<1, 3>(6, 10)
        .copy_from(&(c.rho.transpose() * half));
    fx.fixed_view_mut::<3, 1>(7, 6)
        .copy_from(&(-c.omega * half));
    fx.fixed_view_mut::<3, 3>(7, 7)
        .copy_from(&(skew(&c.omega) * half));
    fx.fixed_view_mut::<3, 3>(7, 10)
        .copy_from(&((Matrix3::identity() * c.eta + skew(&c.rho)) * -half));

    // Angular velocity error.
    let inertial_rate = c.omega + orbit;
    let body_rate = rot_t * inertial_rate;
    let body_acc = euler_rhs(inertia, &body_rate, &c.torque);
    let jw = inertia.component_mul(&body_rate);
    let dacc_dw = -inv_inertia * (skew(&body_rate) * Matrix3::from_diagonal(inertia) - skew(&jw));
    let (drate_eta, drate_rho) = rotate_jacobian(c.eta, &c.rho, &inertial_rate, true);
    let (drot_eta, drot_rho) = rotate_jacobian(c.eta, &c.rho, &body_acc, false);
    let chain = c.rot * dacc_dw;
    fx.fixed_view_mut::<3, 1>(10, 6)
        .copy_from(&(drot_eta + chain * drate_eta));
    fx.fixed_view_mut::<3, 3>(10, 7)
        .copy_from(&(drot_rho + chain * drate_rho));
    fx.fixed_view_mut::<3, 3>(10, 10)
        .copy_from(&(chain * rot_t - skew(&orbit)));
    fu.fixed_view_mut::<3, 3>(10, 3)
        .copy_from(&(c.rot * inv_inertia));

    (f, fx, fu)
}

/// `vee(G − Gᵀ)`: the vector `a` whose skew matrix pairs with `G` as
/// `⟨G, [a]×⟩ = a · vee(G − Gᵀ)`.
#[inline]
fn skew_pairing<T: Real>(g: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(
        g[(2, 1)] - g[(1, 2)],
        g[(0, 2)] - g[(2, 0)],
        g[(1, 0)] - g[(0, 1)],
    )
}

/// Reverse-mode product `(vᵀ ∂f/∂x, vᵀ ∂f/∂u)` of the derivative, without
/// forming either Jacobian.
pub(crate) fn deriv_vjp<T: Real>(
    x: &StateVector<T>,
    u: &ControlVector<T>,
    p: &PhysicalParams<T>,
    v: &StateVector<T>,
) -> (StateVector<T>, ControlVector<T>) {
    let c = Parts::split(x, u);
    let n = p.mean_motion;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let gain = p.thrust_gain();
    let orbit = p.orbit_rate();
    let inertia = &p.inertia;

    let v_pos = Vector3::new(v[0], v[1], v[2]);
    let v_vel = Vector3::new(v[3], v[4], v[5]);
    let v_eta = v[6];
    let v_rho = Vector3::new(v[7], v[8], v[9]);
    let v_omega = Vector3::new(v[10], v[11], v[12]);

    // Forward intermediates.
    let inertial_rate = c.omega + orbit;
    let body_rate = c.rot.transpose() * inertial_rate;
    let body_acc = euler_rhs(inertia, &body_rate, &c.torque);

    let mut gx = StateVector::zeros();
    let mut gu = ControlVector::zeros();

    // Translation.
    gx[0] = T::lit(3.0) * n * n * v_vel.x;
    gx[2] = -n * n * v_vel.z;
    gx[3] = v_pos.x - two * n * v_vel.y;
    gx[4] = v_pos.y + two * n * v_vel.x;
    gx[5] = v_pos.z;
    let thrust_bar = c.rot.transpose() * v_vel * gain;
    let mut rot_bar = v_vel * c.thrust.transpose() * gain;

    // δω̇ = R α − ω_orb × δω
    let acc_bar = c.rot.transpose() * v_omega;
    rot_bar += v_omega * body_acc.transpose();
    let mut omega_bar = orbit.cross(&v_omega);

    // α = J⁻¹(τ − w × Jw)
    let beta = acc_bar.component_div(inertia);
    let jw = inertia.component_mul(&body_rate);
    let rate_bar = inertia.component_mul(&body_rate.cross(&beta)) - jw.cross(&beta);

    // w = Rᵀ(δω + ω_orb)
    omega_bar += c.rot * rate_bar;
    rot_bar += inertial_rate * rate_bar.transpose();

    // Quaternion kinematics.
    let mut eta_bar = -half * v_rho.dot(&c.omega);
    let mut rho_bar = c.omega * (half * v_eta) - c.omega.cross(&v_rho) * half;
    omega_bar += c.rho * (half * v_eta) - (v_rho * c.eta - c.rho.cross(&v_rho)) * half;

    // R = I − 2η[ρ]× + 2[ρ]×²
    let s = skew(&c.rho);
    eta_bar -= two * c.rho.dot(&skew_pairing(&rot_bar));
    let g = rot_bar * (-two * c.eta) + (rot_bar * s.transpose() + s.transpose() * rot_bar) * two;
    rho_bar += skew_pairing(&g);

    gx[6] = eta_bar;
    gx.fixed_rows_mut::<3>(7).copy_from(&rho_bar);
    gx.fixed_rows_mut::<3>(10).copy_from(&omega_bar);
    gu.fixed_rows_mut::<3>(0).copy_from(&thrust_bar);
    gu.fixed_rows_mut::<3>(3).copy_from(&beta);
    (gx, gu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::quaternion::Quat;
    use approx::assert_relative_eq;
    use nalgebra::Vector6;

    fn params() -> PhysicalParams<f64> {
        PhysicalParams::reference()
    }

    #[test]
    fn docking_state_is_equilibrium() {
        let d = full_deriv(&RelativeState::docked(), &Control::zero(), &params());
        assert_eq!(d, StateVector::zeros());
    }

    #[test]
    fn radial_offset_accelerates_outward() {
        let mut x = RelativeState::<f64>::docked();
        x.0[0] = 1.0;
        let d = full_deriv(&x, &Control::zero(), &params());
        let n: f64 = -0.0011;
        let mut expected = StateVector::zeros();
        expected[3] = 3.0 * n * n;
        assert_eq!(d, expected);
        assert_relative_eq!(d[3], 3.63e-6, epsilon = 1e-18);
    }

    #[test]
    fn spin_about_x_at_identity_attitude() {
        let x = RelativeState::from_parts(
            Vector3::zeros(),
            Vector3::zeros(),
            Quat::identity(),
            Vector3::new(1e-3, 0.0, 0.0),
        );
        let d = full_deriv(&x, &Control::zero(), &params());
        // Hand evaluation: ω_b = (1e-3, 0, n); ω_b × Jω_b has only a y
        // component (J3 − J1)·1e-3·n; −ω_orb × δω contributes −n·1e-3 on y.
        let n = -0.0011f64;
        let (j1, j3) = (0.2734, 0.3125);
        let gyro_y = n * j1 * 1e-3 - 1e-3 * j3 * n;
        let expected_y = -gyro_y / j1 - n * 1e-3;
        assert_relative_eq!(expected_y, 9.4269e-7, epsilon = 1e-11);
        assert_relative_eq!(d[10], 0.0, epsilon = 1e-20);
        assert_relative_eq!(d[11], expected_y, epsilon = 1e-18);
        assert_relative_eq!(d[12], 0.0, epsilon = 1e-20);
    }

    #[test]
    fn quaternion_rows_preserve_norm_to_first_order() {
        let x = RelativeState::from_parts(
            Vector3::new(0.3, -0.2, 0.1),
            Vector3::new(1e-4, 2e-4, -3e-4),
            Quat::new(0.6, Vector3::new(0.0, 0.8, 0.0)),
            Vector3::new(1e-3, -2e-3, 5e-4),
        );
        let d = full_deriv(&x, &Control::zero(), &params());
        let s = x.0[6] * d[6] + x.0[7] * d[7] + x.0[8] * d[8] + x.0[9] * d[9];
        assert!(s.abs() < 1e-18, "{s}");
    }

    fn numeric_jacobians(
        x: &StateVector<f64>,
        u: &Vector6<f64>,
        p: &PhysicalParams<f64>,
    ) -> (StateJacobian<f64>, InputJacobian<f64>) {
        let h = 1e-7;
        let mut fx = StateJacobian::zeros();
        let mut fu = InputJacobian::zeros();
        for j in 0..STATE_DIM {
            let (mut a, mut b) = (*x, *x);
            a[j] += h;
            b[j] -= h;
            fx.set_column(j, &((deriv(&a, u, p) - deriv(&b, u, p)) / (2.0 * h)));
        }
        for j in 0..CONTROL_DIM {
            let (mut a, mut b) = (*u, *u);
            a[j] += h;
            b[j] -= h;
            fu.set_column(j, &((deriv(x, &a, p) - deriv(x, &b, p)) / (2.0 * h)));
        }
        (fx, fu)
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        let p = params();
        let x = StateVector::from_column_slice(&[
            0.4, -1.1, 0.7, 2e-3, -1e-3, 5e-4, 0.5, -0.5, 0.3, 0.6, 0.02, -0.03, 0.01,
        ]);
        let u = Vector6::new(5e-3, -2e-3, 7e-3, 4e-5, -6e-5, 9e-5);
        let (f, fx, fu) = deriv_with_jacobians(&x, &u, &p);
        assert_eq!(f, deriv(&x, &u, &p));
        let (nx, nu) = numeric_jacobians(&x, &u, &p);
        assert_relative_eq!(fx, nx, epsilon = 1e-8);
        assert_relative_eq!(fu, nu, epsilon = 1e-8);
    }

    #[test]
    fn reverse_product_matches_jacobians() {
        let p = params();
        let x = StateVector::from_column_slice(&[
            0.4, -1.1, 0.7, 2e-3, -1e-3, 5e-4, 0.5, -0.5, 0.3, 0.6, 0.02, -0.03, 0.01,
        ]);
        let u = Vector6::new(5e-3, -2e-3, 7e-3, 4e-5, -6e-5, 9e-5);
        let (_, fx, fu) = deriv_with_jacobians(&x, &u, &p);
        for seed in 0..13 {
            let v = StateVector::from_fn(|i, _| ((i * 7 + seed * 3) % 11) as f64 - 5.0);
            let (gx, gu) = deriv_vjp(&x, &u, &p, &v);
            assert_relative_eq!(gx, fx.tr_mul(&v), epsilon = 1e-12, max_relative = 1e-12);
            assert_relative_eq!(gu, fu.tr_mul(&v), epsilon = 1e-12, max_relative = 1e-12);
        }
    }
}
