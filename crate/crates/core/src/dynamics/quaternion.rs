//! Scalar-first unit quaternions and the skew-symmetric operator.
//!
//! Sign conventions follow the passive rotation `q⁻¹ ⊗ v ⊗ q`, so the
//! rotation matrix is `I − 2η[ρ]× + 2[ρ]×[ρ]×`.

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Deviation from unit norm above which [`quat_to_rotation`] reports that it
/// had to renormalize its input.
pub const UNIT_NORM_FLAG_TOL: f64 = 1e-6;

/// `[v]×`, the matrix with `[v]× w = v × w`.
#[inline]
pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Quaternion `(η, ρ)` with scalar part `eta` and vector part `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct Quat<T: Real> {
    pub eta: T,
    pub rho: Vector3<T>,
}

impl<T: Real> Quat<T> {
    pub fn new(eta: T, rho: Vector3<T>) -> Self {
        Self { eta, rho }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), Vector3::zeros())
    }

    pub fn from_vector(v: &Vector4<T>) -> Self {
        Self::new(v[0], Vector3::new(v[1], v[2], v[3]))
    }

    pub fn to_vector(&self) -> Vector4<T> {
        Vector4::new(self.eta, self.rho.x, self.rho.y, self.rho.z)
    }

    pub fn norm_squared(&self) -> T {
        self.eta * self.eta + self.rho.norm_squared()
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit-norm copy. Returns `None` for the zero quaternion.
    pub fn try_normalize(&self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() {
            Some(Self::new(self.eta / n, self.rho / n))
        } else {
            None
        }
    }

    /// `(η, −ρ)`. Equal to the multiplicative inverse for unit quaternions.
    pub fn inverse(&self) -> Self {
        Self::new(self.eta, -self.rho)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.eta, -self.rho)
    }

    /// Hamilton product `self ⊗ other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            self.eta * other.eta - self.rho.dot(&other.rho),
            other.rho * self.eta + self.rho * other.eta + self.rho.cross(&other.rho),
        )
    }

    /// `I − 2η[ρ]× + 2[ρ]×[ρ]×` evaluated on the components as stored,
    /// without renormalizing.
    pub fn rotation_matrix_raw(&self) -> Matrix3<T> {
        let s = skew(&self.rho);
        let two = T::lit(2.0);
        Matrix3::identity() - s * (two * self.eta) + s * s * two
    }
}

/// Rotation matrix together with the normalization diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T: Real> {
    pub matrix: Matrix3<T>,
    /// Set when the input's norm deviated from one by more than
    /// [`UNIT_NORM_FLAG_TOL`].
    pub renormalized: bool,
}

/// Maps a quaternion to its rotation matrix after normalizing it.
///
/// A zero quaternion has no rotation; it maps to the identity and is flagged.
pub fn quat_to_rotation<T: Real>(q: &Quat<T>) -> Rotation<T> {
    let n = q.norm();
    let flagged = (n - T::one()).abs() > T::lit(UNIT_NORM_FLAG_TOL);
    match q.try_normalize() {
        Some(unit) => Rotation {
            matrix: unit.rotation_matrix_raw(),
            renormalized: flagged,
        },
        None => Rotation {
            matrix: Matrix3::identity(),
            renormalized: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn skew_examples() {
        assert_eq!(skew(&Vector3::<f64>::zeros()), Matrix3::zeros());
        let e3 = Vector3::new(0.0, 0.0, 1.0);
        let e1 = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(skew(&e3) * e1, Vector3::new(0.0, 1.0, 0.0));
        let v = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(skew(&v) + skew(&v).transpose(), Matrix3::zeros());
    }

    #[test]
    fn rotation_examples() {
        let r = quat_to_rotation(&Quat::<f64>::identity());
        assert_eq!(r.matrix, Matrix3::identity());
        assert!(!r.renormalized);

        let q = Quat::new(0.0, Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(
            quat_to_rotation(&q).matrix,
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
        );
    }

    #[test]
    fn preset_attitude_is_a_rotation() {
        // Printed to three digits, so the norm is off by ~4e-4 and gets flagged.
        let q = Quat::new(0.772, Vector3::new(0.463, 0.309, 0.309));
        let r = quat_to_rotation(&q);
        assert!(r.renormalized);
        let m = r.matrix;
        assert_relative_eq!(m.transpose() * m, Matrix3::identity(), epsilon = 1e-6);
        assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-6);

        // Direct entrywise evaluation of the formula on the normalized quaternion.
        let n = (0.772f64.powi(2) + 0.463f64.powi(2) + 2.0 * 0.309f64.powi(2)).sqrt();
        let (e, a, b, c) = (0.772 / n, 0.463 / n, 0.309 / n, 0.309 / n);
        let expected = Matrix3::new(
            1.0 - 2.0 * (b * b + c * c),
            2.0 * e * c + 2.0 * a * b,
            -2.0 * e * b + 2.0 * a * c,
            -2.0 * e * c + 2.0 * a * b,
            1.0 - 2.0 * (a * a + c * c),
            2.0 * e * a + 2.0 * b * c,
            2.0 * e * b + 2.0 * a * c,
            -2.0 * e * a + 2.0 * b * c,
            1.0 - 2.0 * (a * a + b * b),
        );
        assert_relative_eq!(m, expected, epsilon = 1e-12);
    }

    #[test]
    fn zero_quaternion_is_flagged() {
        let r = quat_to_rotation(&Quat::new(0.0f64, Vector3::zeros()));
        assert!(r.renormalized);
    }

    #[test]
    fn inverse_is_conjugate() {
        let q = Quat::new(0.5f64, Vector3::new(0.5, 0.5, 0.5));
        assert_eq!(q.inverse(), Quat::new(0.5, Vector3::new(-0.5, -0.5, -0.5)));
        let p = q.mul(&q.inverse());
        assert_relative_eq!(p.eta, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.rho, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let q = Quat::new(0.0f32, Vector3::new(0.0, 1.0, 0.0));
        let m = quat_to_rotation(&q).matrix;
        assert_eq!(m, Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, -1.0)));
    }

    fn unit_quat() -> impl Strategy<Value = Quat<f64>> {
        prop::array::uniform4(-1.0f64..1.0)
            .prop_filter("nonzero", |c| c.iter().map(|x| x * x).sum::<f64>() > 1e-6)
            .prop_map(|c| {
                Quat::new(c[0], Vector3::new(c[1], c[2], c[3]))
                    .try_normalize()
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn skew_matches_cross(a in prop::array::uniform3(-10.0f64..10.0), b in prop::array::uniform3(-10.0f64..10.0)) {
            let (a, b) = (Vector3::from(a), Vector3::from(b));
            prop_assert!((skew(&a) * b - a.cross(&b)).norm() < 1e-12);
        }

        #[test]
        fn rotation_is_orthogonal_and_sign_invariant(q in unit_quat()) {
            prop_assert!((q.norm() - 1.0).abs() < 1e-12);
            let r = quat_to_rotation(&q).matrix;
            prop_assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-9);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
            let rn = quat_to_rotation(&q.neg()).matrix;
            prop_assert!((r - rn).amax() < 1e-15);
        }

        #[test]
        fn rotation_composes_with_product(p in unit_quat(), q in unit_quat()) {
            // Passive convention: R(p ⊗ q) = R(q) R(p).
            let lhs = quat_to_rotation(&p.mul(&q)).matrix;
            let rhs = quat_to_rotation(&q).matrix * quat_to_rotation(&p).matrix;
            prop_assert!((lhs - rhs).amax() < 1e-12);
        }
    }
}
