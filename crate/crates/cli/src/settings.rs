//! The flat configuration schema shared by every subcommand.
//!
//! A config file is TOML with the keys of [`Settings`], all optional; a
//! `manifest.json` from an earlier run is accepted too. Resolution order is
//! subcommand defaults, then the file, then command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tcmpc::dynamics::{Control, ControlVector, RelativeState, StateVector};
use tcmpc::{
    Budget, Integrator, MissionConfig, OcpSpec, Perturbation, PhysicalParams, SolverConfig,
    State13, UnitsMode, WarmStart,
};
use tcmpc_harness::{CampaignConfig, ComparisonConfig, SamplingBounds};

use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Campaign,
    CompareOpenloop,
}

/// Where a trial starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    /// `"sampled"`, `"preset"` or `"docked"`.
    Named(String),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub mean_motion: f64,
    pub mass: f64,
    pub inertia: [f64; 3],
    pub units: UnitsMode,
    pub dt: f64,
    pub horizon: usize,
    pub integrator: Integrator,
    pub state_weights: Vec<f64>,
    pub input_weights: Vec<f64>,
    /// Symmetric input box `|u_i| ≤ input_bound_i`.
    pub input_bound: Vec<f64>,

    pub jmax: Vec<Budget>,
    pub opt_tol: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    pub spectral: bool,
    pub box_scaled: bool,

    pub max_steps: usize,
    pub success_tol: f64,
    pub plant_integrator: Integrator,
    pub warm_start: WarmStart,
    pub perturb: bool,
    pub noise_max: f64,
    pub noise_symmetric: bool,

    pub seed: u64,
    pub trials: usize,
    pub parallel: bool,
    pub initial_state: InitialState,
    pub sampling_bounds: Vec<f64>,
}

impl Settings {
    pub fn defaults(cmd: Command) -> Self {
        let spec = OcpSpec::reference();
        let solver = SolverConfig::default();
        let mission = MissionConfig::default();
        let p = spec.params;
        let mut s = Self {
            mean_motion: p.mean_motion,
            mass: p.mass,
            inertia: p.inertia.into(),
            units: p.units,
            dt: spec.dt,
            horizon: spec.horizon,
            integrator: spec.integrator,
            state_weights: spec.state_weights.iter().copied().collect(),
            input_weights: spec.input_weights.iter().copied().collect(),
            input_bound: spec.upper.0.iter().copied().collect(),
            jmax: vec![Budget::Unbounded],
            opt_tol: solver.opt_tol,
            max_iterations: solver.max_iterations,
            initial_step: solver.line_search.initial_step,
            shrink: solver.line_search.shrink,
            sufficient_decrease: solver.line_search.sufficient_decrease,
            max_backtracks: solver.line_search.max_backtracks,
            spectral: solver.line_search.spectral,
            box_scaled: solver.line_search.box_scaled,
            max_steps: mission.max_steps,
            success_tol: mission.success_tol,
            plant_integrator: mission.plant_integrator,
            warm_start: mission.warm_start,
            perturb: false,
            noise_max: 1e-4,
            noise_symmetric: false,
            seed: 1,
            trials: 1,
            parallel: false,
            initial_state: InitialState::Named("sampled".into()),
            sampling_bounds: SamplingBounds::reference().0.iter().copied().collect(),
        };
        match cmd {
            Command::Simulate => {}
            Command::Campaign => {
                let desk = CampaignConfig::desk();
                s.jmax = desk.grid;
                s.trials = desk.trials;
                s.seed = desk.master_seed;
            }
            Command::CompareOpenloop => {
                let c = ComparisonConfig::reference();
                s.integrator = c.spec.integrator;
                s.plant_integrator = c.mission.plant_integrator;
                s.box_scaled = c.solver.line_search.box_scaled;
                s.max_iterations = c.solver.max_iterations;
                s.jmax = vec![c.solver.budget];
                s.perturb = true;
                s.seed = c.seed;
                s.initial_state = InitialState::Named("preset".into());
            }
        }
        s
    }

    /// Overlays a TOML document on `self`. Unknown keys are rejected by name.
    pub fn merge_toml(&mut self, text: &str) -> Result<(), CliError> {
        let file: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        let mut base =
            toml::Table::try_from(&*self).map_err(|e| CliError::Config(e.to_string()))?;
        for (key, value) in file {
            if !base.contains_key(&key) {
                return Err(CliError::Config(format!("unknown key `{key}`")));
            }
            let value = if key == "jmax" {
                normalize_jmax(value)?
            } else {
                value
            };
            base.insert(key, value);
        }
        *self = Settings::deserialize(base)
            .map_err(|e| CliError::Config(e.to_string().replace('\n', " ").trim().to_string()))?;
        Ok(())
    }

    pub fn load(cmd: Command, path: Option<&Path>) -> Result<Self, CliError> {
        let mut s = Self::defaults(cmd);
        let Some(path) = path else {
            return Ok(s);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let m: RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            s = m.config;
        } else {
            s.merge_toml(&text)?;
        }
        Ok(s)
    }

    fn check_len(key: &str, v: &[f64], n: usize) -> Result<(), CliError> {
        if v.len() != n {
            return Err(CliError::Config(format!(
                "`{key}` needs {n} values, got {}",
                v.len()
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<OcpSpec, CliError> {
        Self::check_len("state_weights", &self.state_weights, 13)?;
        Self::check_len("input_weights", &self.input_weights, 6)?;
        Self::check_len("input_bound", &self.input_bound, 6)?;
        let upper = Control(ControlVector::from_column_slice(&self.input_bound));
        let spec = OcpSpec {
            horizon: self.horizon,
            dt: self.dt,
            state_weights: StateVector::from_column_slice(&self.state_weights),
            input_weights: ControlVector::from_column_slice(&self.input_weights),
            lower: Control(-upper.0),
            upper,
            integrator: self.integrator,
            params: PhysicalParams {
                mean_motion: self.mean_motion,
                mass: self.mass,
                inertia: self.inertia.into(),
                units: self.units,
            },
            ..OcpSpec::reference()
        };
        spec.validate().map_err(tcmpc::ConfigError::from)?;
        Ok(spec)
    }

    pub fn solver(&self, budget: Budget) -> SolverConfig {
        let mut c = SolverConfig::with_budget(budget);
        c.opt_tol = self.opt_tol;
        c.max_iterations = self.max_iterations;
        c.line_search.initial_step = self.initial_step;
        c.line_search.shrink = self.shrink;
        c.line_search.sufficient_decrease = self.sufficient_decrease;
        c.line_search.max_backtracks = self.max_backtracks;
        c.line_search.spectral = self.spectral;
        c.line_search.box_scaled = self.box_scaled;
        c
    }

    pub fn mission(&self) -> MissionConfig {
        MissionConfig {
            max_steps: self.max_steps,
            success_tol: self.success_tol,
            perturbation: if self.perturb {
                Perturbation::Uniform {
                    w_max: self.noise_max,
                    symmetric: self.noise_symmetric,
                }
            } else {
                Perturbation::Off
            },
            plant_integrator: self.plant_integrator,
            warm_start: self.warm_start,
        }
    }

    pub fn bounds(&self) -> Result<SamplingBounds, CliError> {
        Self::check_len("sampling_bounds", &self.sampling_bounds, 13)?;
        let b = SamplingBounds(StateVector::from_column_slice(&self.sampling_bounds));
        if !b.is_valid() {
            return Err(CliError::Config(
                "`sampling_bounds` must be nonnegative with a nonzero quaternion box".into(),
            ));
        }
        Ok(b)
    }

    /// A fixed initial state, or `None` when it is to be sampled.
    pub fn fixed_initial_state(&self) -> Result<Option<State13>, CliError> {
        let x = match &self.initial_state {
            InitialState::Named(n) => match n.as_str() {
                "sampled" => return Ok(None),
                "preset" => tcmpc_harness::preset_initial_state(),
                "docked" => RelativeState::docked(),
                other => {
                    return Err(CliError::Config(format!(
                    "`initial_state` must be sampled, preset, docked or 13 numbers, got `{other}`"
                )))
                }
            },
            InitialState::Explicit(v) => {
                Self::check_len("initial_state", v, 13)?;
                let mut x = RelativeState::from_slice(v).expect("13 values");
                if x.attitude().norm() == 0.0 {
                    return Err(CliError::Config(
                        "`initial_state` has a zero quaternion".into(),
                    ));
                }
                x.normalize_attitude();
                x
            }
        };
        Ok(Some(x))
    }

    pub fn single_budget(&self) -> Result<Budget, CliError> {
        match self.jmax.as_slice() {
            [b] => Ok(*b),
            _ => Err(CliError::Config(
                "`jmax` must hold exactly one budget for this command".into(),
            )),
        }
    }

    pub fn campaign(&self) -> Result<CampaignConfig, CliError> {
        Ok(CampaignConfig {
            trials: self.trials,
            grid: self.jmax.clone(),
            bounds: self.bounds()?,
            master_seed: self.seed,
            spec: self.spec()?,
            mission: self.mission(),
            solver: self.solver(Budget::Unbounded),
            initial_state: self.fixed_initial_state()?,
            parallel: self.parallel,
        })
    }

    pub fn comparison(&self) -> Result<ComparisonConfig, CliError> {
        let x0 = self.fixed_initial_state()?.ok_or_else(|| {
            CliError::Config("compare-openloop needs a fixed `initial_state`".into())
        })?;
        let budget = self.single_budget()?;
        Ok(ComparisonConfig {
            x0,
            spec: self.spec()?,
            solver: self.solver(budget),
            mission: self.mission(),
            seed: self.seed,
        })
    }
}

/// `jmax` may be written as a list mixing integers and `"optimal"`, a single
/// value, or a comma-separated string.
fn normalize_jmax(v: toml::Value) -> Result<toml::Value, CliError> {
    let items = match v {
        toml::Value::Array(a) => a,
        toml::Value::String(s) => s
            .split(',')
            .map(|p| toml::Value::String(p.trim().into()))
            .collect(),
        other => vec![other],
    };
    items
        .into_iter()
        .map(|i| match i {
            toml::Value::Integer(j) => Ok(toml::Value::String(j.to_string())),
            toml::Value::String(s) => Ok(toml::Value::String(s)),
            other => Err(CliError::Config(format!(
                "`jmax` entry {other} is not a budget"
            ))),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(toml::Value::Array)
}

pub fn parse_jmax(s: &str) -> Result<Vec<Budget>, String> {
    let list: Vec<Budget> = s.split(',').map(str::parse).collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("empty budget list".into());
    }
    Ok(list)
}
