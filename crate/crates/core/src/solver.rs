//! Iteration-budgeted projected gradient method for the input-boxed
//! subproblem.
//!
//! Each iteration evaluates the adjoint gradient once and performs a
//! projected step `u ← P(u − α g)` with monotone Armijo backtracking along
//! the projection arc. The first trial step length of every iteration after
//! the first is the Barzilai-Borwein (spectral) length from the previous
//! accepted step.
//!
//! With [`LineSearch::box_scaled`] the step becomes `u ← P(u − α W² g)`, where
//! `W` holds the half-widths of the input box. That is plain projected
//! gradient in the normalized coordinates `v = u ⊘ W`, where thrust and
//! torque live on comparable scales, and it converges far faster on the
//! docking problem.
//!
//! The solver is an anytime method: the returned sequence is always the best
//! feasible iterate found, whatever stopped it.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Control, RelativeState, CONTROL_DIM};
use crate::error::{ConfigError, OcpError};
use crate::ocp::{cost_and_gradient, cost_unchecked, ControlSequence, OcpSpec};
use crate::scalar::Real;

/// Limit on solver iterations per call. Serialized as the iteration count or
/// `"optimal"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Budget {
    /// At most this many iterations.
    Limited(usize),
    /// No budget; the solve runs until it is optimal or stalls, bounded only
    /// by the solver's own iteration ceiling.
    Unbounded,
}

impl Budget {
    pub fn limit(&self) -> Option<usize> {
        match self {
            Self::Limited(j) => Some(*j),
            Self::Unbounded => None,
        }
    }
}

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Limited(j) => write!(f, "{j}"),
            Self::Unbounded => f.write_str("optimal"),
        }
    }
}

impl std::str::FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("optimal") || t.eq_ignore_ascii_case("unbounded") {
            return Ok(Self::Unbounded);
        }
        match t.parse::<usize>() {
            Ok(0) => Err("iteration budget must be positive".to_string()),
            Ok(j) => Ok(Self::Limited(j)),
            Err(_) => Err(format!("`{t}` is neither a positive integer nor `optimal`")),
        }
    }
}

impl From<Budget> for String {
    fn from(b: Budget) -> Self {
        b.to_string()
    }
}

impl TryFrom<String> for Budget {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct LineSearch<T: Real> {
    /// Largest move, in the solver's metric, of the very first trial step.
    pub initial_step: T,
    pub shrink: T,
    pub sufficient_decrease: T,
    pub max_backtracks: usize,
    /// Use the Barzilai-Borwein length as the first trial step after the
    /// first iteration; otherwise every iteration starts from
    /// `initial_step`.
    pub spectral: bool,
    /// Measure steps and stationarity relative to the box half-widths
    /// instead of raw control units.
    pub box_scaled: bool,
}

impl<T: Real> Default for LineSearch<T> {
    fn default() -> Self {
        Self {
            initial_step: T::lit(1.0),
            shrink: T::lit(0.5),
            sufficient_decrease: T::lit(1e-4),
            max_backtracks: 40,
            spectral: true,
            box_scaled: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct SolverConfig<T: Real> {
    pub budget: Budget,
    /// Threshold on `‖P(u − g) − u‖_∞`, measured in box-normalized units when
    /// the line search is box scaled.
    pub opt_tol: T,
    pub line_search: LineSearch<T>,
    /// Iteration ceiling applied when the budget is unbounded.
    pub max_iterations: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            budget: Budget::Unbounded,
            opt_tol: T::lit(1e-5),
            line_search: LineSearch::default(),
            max_iterations: 3000,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn with_budget(budget: Budget) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Solver(m.to_string()));
        let ls = &self.line_search;
        if self.budget == Budget::Limited(0) {
            return bad("iteration budget must be positive");
        }
        if !(self.opt_tol > T::zero()) {
            return bad("opt_tol must be positive");
        }
        if !(ls.shrink > T::zero() && ls.shrink < T::one()) {
            return bad("shrink factor must lie in (0, 1)");
        }
        if !(ls.sufficient_decrease > T::zero() && ls.sufficient_decrease < T::one()) {
            return bad("sufficient-decrease constant must lie in (0, 1)");
        }
        if !(ls.initial_step > T::zero()) {
            return bad("initial step must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        Ok(())
    }

    /// Effective iteration cap of one call.
    pub fn iteration_cap(&self) -> usize {
        self.budget.limit().unwrap_or(self.max_iterations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    OptimalityTol,
    IterationCap,
    LineSearchStall,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::OptimalityTol => "optimality_tol",
            Self::IterationCap => "iteration_cap",
            Self::LineSearchStall => "line_search_stall",
        }
    }
}

impl std::str::FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimality_tol" => Ok(Self::OptimalityTol),
            "iteration_cap" => Ok(Self::IterationCap),
            "line_search_stall" => Ok(Self::LineSearchStall),
            other => Err(format!("unknown termination reason `{other}`")),
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome<T: Real> {
    pub useq: ControlSequence<T>,
    /// Iterations performed, `j_k`. A stalled line search counts as one.
    pub iterations: usize,
    pub reason: Termination,
    /// Projected gradient norm at the returned iterate.
    pub optimality: T,
    pub cost: T,
    /// Objective at the start point followed by every accepted iterate.
    pub cost_history: Vec<T>,
    /// Seconds spent inside the call, from a monotonic clock.
    pub wall_time: f64,
}

impl<T: Real> SolveOutcome<T> {
    /// Accepted objective values never increase.
    pub fn is_monotone(&self) -> bool {
        self.cost_history.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Componentwise clamp onto `[lower, upper]`.
pub fn project_box<T: Real>(
    useq: &ControlSequence<T>,
    lower: &Control<T>,
    upper: &Control<T>,
) -> ControlSequence<T> {
    let mut out = useq.clone();
    project_in_place(out.flat_mut(), lower, upper);
    out
}

fn project_in_place<T: Real>(flat: &mut DVector<T>, lower: &Control<T>, upper: &Control<T>) {
    for (k, v) in flat.iter_mut().enumerate() {
        let j = k % CONTROL_DIM;
        *v = v.clamp(lower.0[j], upper.0[j]);
    }
}

/// Half-widths of the box, used as per-coordinate scale. Degenerate
/// directions fall back to unit scale.
fn box_scale<T: Real>(spec: &OcpSpec<T>) -> DVector<T> {
    let two = T::lit(2.0);
    let per: Vec<T> = (0..CONTROL_DIM)
        .map(|j| {
            let w = (spec.upper.0[j] - spec.lower.0[j]) / two;
            if w > T::zero() && w.is_finite() {
                w
            } else {
                T::one()
            }
        })
        .collect();
    DVector::from_fn(spec.horizon * CONTROL_DIM, |k, _| per[k % CONTROL_DIM])
}

fn scaled_inf_norm<T: Real>(d: &DVector<T>, scale: &DVector<T>) -> T {
    d.iter()
        .zip(scale.iter())
        .fold(T::zero(), |m, (a, w)| m.max((*a / *w).abs()))
}

/// Minimizes the subproblem from `warm` under the configured budget.
pub fn solve<T: Real>(
    spec: &OcpSpec<T>,
    x0: &RelativeState<T>,
    warm: &ControlSequence<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveOutcome<T>, OcpError> {
    if warm.len() != spec.horizon {
        return Err(OcpError::LengthMismatch {
            expected: spec.horizon,
            got: warm.len(),
        });
    }
    let started = Instant::now();
    let cap = cfg.iteration_cap();
    let ls = &cfg.line_search;
    let scale = if ls.box_scaled {
        box_scale(spec)
    } else {
        DVector::from_element(spec.horizon * CONTROL_DIM, T::one())
    };
    let metric = scale.component_mul(&scale);

    let mut u = warm.as_flat().clone();
    project_in_place(&mut u, &spec.lower, &spec.upper);
    let (mut f, mut g) = cost_and_gradient(x0, &u, spec);
    let mut history = vec![f];
    let mut iterations = 0;
    // Previous accepted step and gradient change, in normalized coordinates.
    let mut spectral_step: Option<T> = None;

    let optimality_of = |u: &DVector<T>, g: &DVector<T>| {
        let mut probe = u - g.component_mul(&metric);
        project_in_place(&mut probe, &spec.lower, &spec.upper);
        scaled_inf_norm(&(probe - u), &scale)
    };

    let mut optimality = optimality_of(&u, &g);
    let reason = loop {
        if optimality <= cfg.opt_tol {
            break Termination::OptimalityTol;
        }
        if iterations >= cap {
            break Termination::IterationCap;
        }
        iterations += 1;

        let direction = g.component_mul(&metric);
        let mut alpha = match (ls.spectral, spectral_step) {
            (true, Some(a)) => a,
            _ => ls.initial_step / scaled_inf_norm(&direction, &scale).max(T::lit(1e-30)),
        };

        let mut accepted = None;
        for _ in 0..=ls.max_backtracks {
            let mut trial = &u - &direction * alpha;
            project_in_place(&mut trial, &spec.lower, &spec.upper);
            let delta = &trial - &u;
            let decrease = g.dot(&delta);
            if delta.iter().all(|d| *d == T::zero()) {
                break;
            }
            let ft = cost_unchecked(x0, &trial, spec);
            if ft <= f + ls.sufficient_decrease * decrease {
                accepted = Some((trial, ft, delta));
                break;
            }
            alpha *= ls.shrink;
        }

        let Some((trial, ft, delta)) = accepted else {
            break Termination::LineSearchStall;
        };
        let (_, gt) = cost_and_gradient(x0, &trial, spec);
        // Barzilai-Borwein in normalized coordinates: s = Δv, y = W Δg.
        let s = delta.component_div(&scale);
        let y = (&gt - &g).component_mul(&scale);
        let sy = s.dot(&y);
        spectral_step = if sy > T::zero() {
            Some((s.dot(&s) / sy).min(T::lit(1e12)))
        } else {
            None
        };
        u = trial;
        f = ft;
        g = gt;
        history.push(f);
        optimality = optimality_of(&u, &g);
    };

    Ok(SolveOutcome {
        useq: ControlSequence::from_flat(u).expect("length preserved"),
        iterations,
        reason,
        optimality,
        cost: f,
        cost_history: history,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
