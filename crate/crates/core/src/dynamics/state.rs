use nalgebra::{SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::quaternion::Quat;
use crate::scalar::Real;

pub const STATE_DIM: usize = 13;
pub const CONTROL_DIM: usize = 6;

pub type StateVector<T> = SVector<T, STATE_DIM>;
pub type ControlVector<T> = Vector6<T>;

/// Relative state of the deputy with respect to the chief, stored as the
/// 13 scalars `(δr, δṙ, δη, δρ, δω)`.
///
/// Position is in km, velocity in km/s, the error quaternion is
/// dimensionless and the error angular velocity is in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct RelativeState<T: Real>(pub StateVector<T>);

impl<T: Real> RelativeState<T> {
    pub fn from_parts(
        position: Vector3<T>,
        velocity: Vector3<T>,
        attitude: Quat<T>,
        angular_velocity: Vector3<T>,
    ) -> Self {
        let mut v = StateVector::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&position);
        v.fixed_rows_mut::<3>(3).copy_from(&velocity);
        v[6] = attitude.eta;
        v.fixed_rows_mut::<3>(7).copy_from(&attitude.rho);
        v.fixed_rows_mut::<3>(10).copy_from(&angular_velocity);
        Self(v)
    }

    /// The docking target: co-located, co-moving, aligned, no relative spin.
    pub fn docked() -> Self {
        let mut v = StateVector::zeros();
        v[6] = T::one();
        Self(v)
    }

    pub fn from_slice(values: &[T]) -> Option<Self> {
        (values.len() == STATE_DIM).then(|| Self(StateVector::from_column_slice(values)))
    }

    pub fn as_vector(&self) -> &StateVector<T> {
        &self.0
    }

    pub fn position(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn attitude(&self) -> Quat<T> {
        Quat::new(self.0[6], self.0.fixed_rows::<3>(7).into_owned())
    }

    pub fn angular_velocity(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(10).into_owned()
    }

    /// Rescales the quaternion block to unit norm. A zero quaternion is
    /// replaced by the identity.
    pub fn normalize_attitude(&mut self) {
        normalize_quaternion_block(&mut self.0);
    }
}

pub(crate) fn normalize_quaternion_block<T: Real>(v: &mut StateVector<T>) {
    let n = v.fixed_rows::<4>(6).norm();
    if n > T::zero() {
        v.fixed_rows_mut::<4>(6).unscale_mut(n);
    } else {
        v.fixed_rows_mut::<4>(6).copy_from(&nalgebra::Vector4::new(
            T::one(),
            T::zero(),
            T::zero(),
            T::zero(),
        ));
    }
}

/// Deputy input: body-frame thrust (N) followed by body-frame torque (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct Control<T: Real>(pub ControlVector<T>);

impl<T: Real> Control<T> {
    pub fn new(thrust: Vector3<T>, torque: Vector3<T>) -> Self {
        let mut v = ControlVector::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&thrust);
        v.fixed_rows_mut::<3>(3).copy_from(&torque);
        Self(v)
    }

    pub fn zero() -> Self {
        Self(ControlVector::zeros())
    }

    /// Same bound on every thrust axis and on every torque axis.
    pub fn symmetric(thrust: T, torque: T) -> Self {
        Self::new(Vector3::repeat(thrust), Vector3::repeat(torque))
    }

    pub fn thrust(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn torque(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(3).into_owned()
    }
}

/// How thrust in newtons enters an acceleration measured in km/s².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitsMode {
    /// `F / m_d`, used numerically as km/s² with no conversion.
    #[default]
    Literal,
    /// `F / (1000 m_d)`, dimensionally consistent.
    Consistent,
}

/// Chief orbit and deputy mass properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct PhysicalParams<T: Real> {
    /// Chief mean motion, rad/s.
    pub mean_motion: T,
    /// Deputy mass, kg.
    pub mass: T,
    /// Principal moments of inertia, kg·m².
    pub inertia: Vector3<T>,
    pub units: UnitsMode,
}

impl<T: Real> PhysicalParams<T> {
    /// Chief and deputy used throughout the experiments: `n = −0.0011 rad/s`
    /// (sign kept as published), 12 kg deputy with inertia
    /// `diag(0.2734, 0.2734, 0.3125)`.
    pub fn reference() -> Self {
        Self {
            mean_motion: T::lit(-0.0011),
            mass: T::lit(12.0),
            inertia: Vector3::new(T::lit(0.2734), T::lit(0.2734), T::lit(0.3125)),
            units: UnitsMode::Literal,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.mass > T::zero() && self.inertia.iter().all(|j| *j > T::zero())
    }

    /// Multiplier turning body thrust into translational acceleration.
    pub fn thrust_gain(&self) -> T {
        match self.units {
            UnitsMode::Literal => T::one() / self.mass,
            UnitsMode::Consistent => T::one() / (self.mass * T::lit(1000.0)),
        }
    }

    /// Angular velocity of the chief frame relative to inertial space,
    /// expressed in the chief frame: `(0, 0, n)`.
    pub fn orbit_rate(&self) -> Vector3<T> {
        Vector3::new(T::zero(), T::zero(), self.mean_motion)
    }
}

impl<T: Real> Default for PhysicalParams<T> {
    fn default() -> Self {
        Self::reference()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_layout() {
        let x = RelativeState::from_parts(
            Vector3::new(1.0, 2.0, 3.0),
            Vector3::new(4.0, 5.0, 6.0),
            Quat::new(7.0, Vector3::new(8.0, 9.0, 10.0)),
            Vector3::new(11.0, 12.0, 13.0),
        );
        let expected: Vec<f64> = (1..=13).map(f64::from).collect();
        assert_eq!(x.0.as_slice(), expected.as_slice());
        assert_eq!(x.attitude().eta, 7.0);
        assert_eq!(x.angular_velocity(), Vector3::new(11.0, 12.0, 13.0));
    }

    #[test]
    fn docked_state() {
        let x = RelativeState::<f64>::docked();
        assert_eq!(x.attitude(), Quat::identity());
        assert_eq!(x.0.sum(), 1.0);
    }

    #[test]
    fn normalization_handles_zero_quaternion() {
        let mut x = RelativeState::<f64>(StateVector::zeros());
        x.normalize_attitude();
        assert_eq!(x.attitude(), Quat::identity());
    }

    #[test]
    fn thrust_gain_modes() {
        let mut p = PhysicalParams::<f64>::reference();
        assert_eq!(p.thrust_gain(), 1.0 / 12.0);
        p.units = UnitsMode::Consistent;
        assert_eq!(p.thrust_gain(), 1.0 / 12000.0);
        assert!(p.is_valid());
    }
}
