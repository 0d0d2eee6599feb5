//! Closed-form unforced Clohessy-Wiltshire motion, used to validate the
//! numerical integrators.

use nalgebra::Vector3;

use crate::scalar::Real;

/// Position (km) and velocity (km/s) in the chief's rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Translation<T: Real> {
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
}

/// Propagates unforced relative translation by `t` seconds with the
/// analytic state-transition matrix. Valid for either sign of `n`.
pub fn cw_analytic_transition<T: Real>(tr: &Translation<T>, t: T, n: T) -> Translation<T> {
    let (r, v) = (&tr.position, &tr.velocity);
    let nt = n * t;
    let (s, c) = nt.sin_cos();
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let six = T::lit(6.0);

    let x = (four - three * c) * r.x + s / n * v.x + two / n * (one - c) * v.y;
    let y =
        six * (s - nt) * r.x + r.y + two / n * (c - one) * v.x + (four * s - three * nt) / n * v.y;
    let z = c * r.z + s / n * v.z;

    let vx = three * n * s * r.x + c * v.x + two * s * v.y;
    let vy = six * n * (c - one) * r.x - two * s * v.x + (four * c - three) * v.y;
    let vz = -n * s * r.z + c * v.z;

    Translation {
        position: Vector3::new(x, y, z),
        velocity: Vector3::new(vx, vy, vz),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const N: f64 = -0.0011;

    fn sample() -> Translation<f64> {
        Translation {
            position: Vector3::new(1.5, -1.77, 3.0),
            velocity: Vector3::new(1e-3, 3.4e-3, -2e-3),
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let tr = sample();
        let out = cw_analytic_transition(&tr, 0.0, N);
        assert_relative_eq!(out.position, tr.position, epsilon = 1e-15);
        assert_relative_eq!(out.velocity, tr.velocity, epsilon = 1e-15);
    }

    #[test]
    fn out_of_plane_motion_is_periodic() {
        let tr = Translation {
            position: Vector3::new(0.0, 0.0, 1.0),
            velocity: Vector3::zeros(),
        };
        let period = 2.0 * std::f64::consts::PI / N.abs();
        let out = cw_analytic_transition(&tr, period, N);
        assert_relative_eq!(out.position, tr.position, epsilon = 1e-12);
        assert_relative_eq!(out.velocity, tr.velocity, epsilon = 1e-12);
    }

    #[test]
    fn satisfies_the_differential_equation() {
        // Central differences of the closed form against the ODE right-hand side.
        let tr = sample();
        let h = 1e-2;
        for &t in &[0.0, 37.0, 800.0, 4000.0] {
            let a = cw_analytic_transition(&tr, t + h, N);
            let b = cw_analytic_transition(&tr, t - h, N);
            let mid = cw_analytic_transition(&tr, t, N);
            let dr = (a.position - b.position) / (2.0 * h);
            let dv = (a.velocity - b.velocity) / (2.0 * h);
            assert_relative_eq!(dr, mid.velocity, epsilon = 1e-9);
            let (r, v) = (mid.position, mid.velocity);
            let rhs = Vector3::new(
                3.0 * N * N * r.x + 2.0 * N * v.y,
                -2.0 * N * v.x,
                -N * N * r.z,
            );
            assert_relative_eq!(dv, rhs, epsilon = 1e-11);
        }
    }
}
