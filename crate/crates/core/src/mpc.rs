//! Receding-horizon closed loop, the open-loop baseline, and the docking
//! test.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{step, Control, Integrator, RelativeState, StateVector};
use crate::error::ConfigError;
use crate::ocp::{ControlSequence, OcpSpec};
use crate::scalar::Real;
use crate::solver::{solve, Budget, SolverConfig, Termination};

/// Additive state noise applied after every plant step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    Off,
    /// Each of the 13 components drawn from `U[0, w_max)`, or from
    /// `U[−w_max, w_max)` when `symmetric`.
    Uniform {
        w_max: f64,
        symmetric: bool,
    },
}

impl Perturbation {
    /// `U[0, 1e-4)` per component.
    pub fn reference() -> Self {
        Self::Uniform {
            w_max: 1e-4,
            symmetric: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarmStart {
    /// Drop the applied input and repeat the last one at the tail.
    #[default]
    Shift,
    /// Reuse the previous solution as is.
    Hold,
}

impl std::str::FromStr for WarmStart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "shift" => Ok(Self::Shift),
            "hold" => Ok(Self::Hold),
            other => Err(format!(
                "unknown warm start `{other}` (expected shift or hold)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionConfig {
    pub max_steps: usize,
    pub success_tol: f64,
    pub perturbation: Perturbation,
    pub plant_integrator: Integrator,
    pub warm_start: WarmStart,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            max_steps: 1000,
            success_tol: 1e-3,
            perturbation: Perturbation::Off,
            plant_integrator: Integrator::Euler,
            warm_start: WarmStart::Shift,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Mission(m.to_string()));
        if self.max_steps < 1 {
            return bad("max_steps must be at least 1");
        }
        if !(self.success_tol > 0.0) {
            return bad("success_tol must be positive");
        }
        if let Perturbation::Uniform { w_max, .. } = self.perturbation {
            if !(w_max >= 0.0 && w_max.is_finite()) {
                return bad("perturbation bound must be nonnegative");
            }
        }
        Ok(())
    }
}

/// What happened at one control step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T: Real> {
    pub state: RelativeState<T>,
    pub control: Control<T>,
    pub stage_cost: T,
    /// Solver iterations spent at this step; zero when nothing was solved.
    pub iterations: usize,
    /// `None` when no optimization ran at this step (open loop after the
    /// offline solve).
    pub reason: Option<Termination>,
    /// Seconds spent in the solver at this step.
    pub loop_time: f64,
    pub docked: bool,
    /// Accepted solver objectives never increased during this step's solve.
    pub descent_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord<T: Real> {
    pub steps: Vec<StepRecord<T>>,
    /// Plant state after the last applied input.
    pub final_state: RelativeState<T>,
    pub docked: bool,
    pub dock_step: Option<usize>,
}

impl<T: Real> TrialRecord<T> {
    pub fn states(&self) -> Vec<RelativeState<T>> {
        self.steps
            .iter()
            .map(|s| s.state)
            .chain(std::iter::once(self.final_state))
            .collect()
    }

    pub fn controls(&self) -> Vec<Control<T>> {
        self.steps.iter().map(|s| s.control).collect()
    }

    pub fn max_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).max().unwrap_or(0)
    }
}

/// `‖z − z_d‖_∞ ≤ tol` with `z = (u, x)` and `z_d = (0, x_d)`.
///
/// Each component is compared against the interval `[t − tol, t + tol]`,
/// so a value written as `t − tol` sits on the boundary and counts.
pub fn is_docked<T: Real>(x: &RelativeState<T>, u: &Control<T>, tol: T) -> bool {
    let target = RelativeState::<T>::docked();
    let within = |v: T, t: T| v >= t - tol && v <= t + tol;
    x.0.iter().zip(target.0.iter()).all(|(v, t)| within(*v, *t))
        && u.0.iter().all(|v| within(*v, T::zero()))
}

pub fn warm_start_next<T: Real>(prev: &ControlSequence<T>, mode: WarmStart) -> ControlSequence<T> {
    match mode {
        WarmStart::Hold => prev.clone(),
        WarmStart::Shift => {
            let n = prev.len();
            let mut out = prev.clone();
            for i in 0..n.saturating_sub(1) {
                out.set(i, &prev.get(i + 1));
            }
            out
        }
    }
}

struct Noise {
    rng: ChaCha8Rng,
    perturbation: Perturbation,
}

impl Noise {
    fn new(seed: u64, perturbation: Perturbation) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            perturbation,
        }
    }

    fn apply<T: Real>(&mut self, x: &mut RelativeState<T>) {
        let Perturbation::Uniform { w_max, symmetric } = self.perturbation else {
            return;
        };
        if w_max == 0.0 {
            return;
        }
        let lo = if symmetric { -w_max } else { 0.0 };
        let w: StateVector<T> = StateVector::from_fn(|_, _| T::lit(self.rng.gen_range(lo..w_max)));
        x.0 += w;
        x.normalize_attitude();
    }
}

/// Time-constrained MPC from `x0` until docking or `max_steps`.
pub fn run_closed_loop<T: Real>(
    x0: &RelativeState<T>,
    spec: &OcpSpec<T>,
    scfg: &SolverConfig<T>,
    mcfg: &MissionConfig,
    seed: u64,
) -> Result<TrialRecord<T>, ConfigError> {
    spec.validate()?;
    scfg.validate()?;
    mcfg.validate()?;
    let tol = T::lit(mcfg.success_tol);
    let mut noise = Noise::new(seed, mcfg.perturbation);
    let mut warm = ControlSequence::zeros(spec.horizon);
    let mut x = *x0;
    let mut steps = Vec::new();
    let mut dock_step = None;

    for k in 0..mcfg.max_steps {
        let timer = Instant::now();
        let outcome = solve(spec, &x, &warm, scfg)?;
        let loop_time = timer.elapsed().as_secs_f64();
        let u = outcome.useq.get(0);
        let docked = is_docked(&x, &u, tol);
        steps.push(StepRecord {
            state: x,
            control: u,
            stage_cost: spec.stage_cost(&x, &u),
            iterations: outcome.iterations,
            reason: Some(outcome.reason),
            loop_time,
            docked,
            descent_ok: outcome.is_monotone(),
        });
        x = step(&x, &u, spec.dt, mcfg.plant_integrator, &spec.params);
        noise.apply(&mut x);
        if docked {
            dock_step = Some(k);
            break;
        }
        warm = warm_start_next(&outcome.useq, mcfg.warm_start);
    }

    Ok(TrialRecord {
        steps,
        final_state: x,
        docked: dock_step.is_some(),
        dock_step,
    })
}

/// Solves the horizon-`N` problem once from `x0` and plays the result back
/// without feedback. The offline solve ignores the configured budget.
pub fn run_open_loop<T: Real>(
    x0: &RelativeState<T>,
    spec: &OcpSpec<T>,
    offline: &SolverConfig<T>,
    mcfg: &MissionConfig,
    seed: u64,
) -> Result<(TrialRecord<T>, ControlSequence<T>), ConfigError> {
    spec.validate()?;
    mcfg.validate()?;
    let cfg = SolverConfig {
        budget: Budget::Unbounded,
        ..*offline
    };
    cfg.validate()?;
    let tol = T::lit(mcfg.success_tol);
    let timer = Instant::now();
    let outcome = solve(spec, x0, &ControlSequence::zeros(spec.horizon), &cfg)?;
    let offline_time = timer.elapsed().as_secs_f64();

    let mut noise = Noise::new(seed, mcfg.perturbation);
    let mut x = *x0;
    let mut steps = Vec::new();
    let mut dock_step = None;
    for (k, u) in outcome.useq.iter().enumerate().take(mcfg.max_steps) {
        let docked = is_docked(&x, &u, tol);
        if docked && dock_step.is_none() {
            dock_step = Some(k);
        }
        let first = k == 0;
        steps.push(StepRecord {
            state: x,
            control: u,
            stage_cost: spec.stage_cost(&x, &u),
            iterations: if first { outcome.iterations } else { 0 },
            reason: first.then_some(outcome.reason),
            loop_time: if first { offline_time } else { 0.0 },
            docked,
            descent_ok: !first || outcome.is_monotone(),
        });
        x = step(&x, &u, spec.dt, mcfg.plant_integrator, &spec.params);
        noise.apply(&mut x);
    }

    Ok((
        TrialRecord {
            steps,
            final_state: x,
            docked: dock_step.is_some(),
            dock_step,
        },
        outcome.useq,
    ))
}

/// Euclidean distance of a state from the docking state.
pub fn state_error<T: Real>(x: &RelativeState<T>) -> T {
    (x.0 - RelativeState::<T>::docked().0).norm()
}
