//! Initial conditions for Monte Carlo trials.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tcmpc::dynamics::{RelativeState, StateVector};
use tcmpc::{Quaternion, State13};

/// Componentwise half-widths of the sampling box, in state order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingBounds(pub StateVector<f64>);

impl SamplingBounds {
    /// 1.5 km, 1e-3 km/s, unit quaternion box, 2e-3 rad/s.
    pub fn reference() -> Self {
        let mut b = StateVector::zeros();
        b.fixed_rows_mut::<3>(0).fill(1.5);
        b.fixed_rows_mut::<3>(3).fill(1e-3);
        b.fixed_rows_mut::<4>(6).fill(1.0);
        b.fixed_rows_mut::<3>(10).fill(2e-3);
        Self(b)
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|b| *b >= 0.0 && b.is_finite())
            && self.0.fixed_rows::<4>(6).iter().any(|b| *b > 0.0)
    }
}

impl Default for SamplingBounds {
    fn default() -> Self {
        Self::reference()
    }
}

/// Random stream of trial `trial` under `master_seed`. Streams of different
/// trials never overlap, whatever order the trials run in.
pub fn trial_rng(master_seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial as u64);
    rng
}

fn symmetric<R: Rng>(rng: &mut R, b: f64) -> f64 {
    if b > 0.0 {
        rng.gen_range(-b..=b)
    } else {
        0.0
    }
}

/// Uniform draw from the box. The quaternion is drawn in its own box,
/// normalized, and flipped so that the scalar part is nonnegative; an
/// all-zero draw is repeated.
pub fn sample_initial_state<R: Rng>(rng: &mut R, bounds: &SamplingBounds) -> State13 {
    let b = &bounds.0;
    let mut v = |i: usize| symmetric(rng, b[i]);
    let r = Vector3::new(v(0), v(1), v(2));
    let dv = Vector3::new(v(3), v(4), v(5));
    let q = loop {
        let raw = Quaternion::new(v(6), Vector3::new(v(7), v(8), v(9)));
        if let Some(q) = raw.try_normalize() {
            break if q.eta < 0.0 { q.neg() } else { q };
        }
    };
    let w = Vector3::new(v(10), v(11), v(12));
    RelativeState::from_parts(r, dv, q, w)
}
