//! The budget sweep: paired initial states, one closed-loop trial per
//! (budget, state), persistence and the post-hoc audit.

use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tcmpc::{run_closed_loop, Budget, MissionConfig, OcpSpec, SolverConfig, State13, TrialRecord};

use crate::records::{read_campaign_trials, trial_path, write_trial};
use crate::sampling::{sample_initial_state, trial_rng, SamplingBounds};
use crate::summary::{summarize, BudgetSummary, CampaignSummary};
use crate::HarnessError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const AUDIT_FILE: &str = "audit.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub trials: usize,
    pub grid: Vec<Budget>,
    pub bounds: SamplingBounds,
    pub master_seed: u64,
    pub spec: OcpSpec,
    pub mission: MissionConfig,
    /// Template; the budget is replaced by each grid value.
    pub solver: SolverConfig,
    /// Start every trial here instead of sampling.
    pub initial_state: Option<State13>,
    /// Run the trials of a budget on the rayon pool. Loop times are then
    /// measured under contention and flagged as such in the audit.
    pub parallel: bool,
}

impl CampaignConfig {
    /// 20 trials over `{1, 2, 4, 8, 16, optimal}`.
    pub fn desk() -> Self {
        Self {
            trials: 20,
            grid: [1, 2, 4, 8, 16]
                .into_iter()
                .map(Budget::Limited)
                .chain([Budget::Unbounded])
                .collect(),
            bounds: SamplingBounds::reference(),
            master_seed: 1,
            spec: OcpSpec::reference(),
            mission: MissionConfig::default(),
            solver: SolverConfig::default(),
            initial_state: None,
            parallel: false,
        }
    }

    /// 200 trials over `{1, …, 10, 50, 100, optimal}`.
    pub fn full_scale() -> Self {
        Self {
            trials: 200,
            grid: (1..=10)
                .chain([50, 100])
                .map(Budget::Limited)
                .chain([Budget::Unbounded])
                .collect(),
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Campaign(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.grid.is_empty() {
            return bad("the budget grid is empty");
        }
        if !self.bounds.is_valid() {
            return bad("sampling bounds must be nonnegative with a nonzero quaternion box");
        }
        self.spec.validate().map_err(tcmpc::ConfigError::from)?;
        self.mission.validate()?;
        self.solver.validate()?;
        Ok(())
    }

    /// Budgets in ascending order without repeats.
    pub fn sorted_grid(&self) -> Vec<Budget> {
        let mut g = self.grid.clone();
        g.sort();
        g.dedup();
        g
    }
}

/// Initial state and perturbation seed of one trial, shared by all budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub trial_id: usize,
    pub x0: State13,
    pub noise_seed: u64,
}

pub fn trial_setups(cfg: &CampaignConfig) -> Vec<TrialSetup> {
    (0..cfg.trials)
        .map(|trial_id| {
            let mut rng = trial_rng(cfg.master_seed, trial_id);
            let sampled = sample_initial_state(&mut rng, &cfg.bounds);
            TrialSetup {
                trial_id,
                x0: cfg.initial_state.unwrap_or(sampled),
                noise_seed: rng.next_u64(),
            }
        })
        .collect()
}

/// Post-hoc checks over the trials of one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetAudit {
    pub j_max: Budget,
    pub max_iterations: usize,
    pub iteration_cap_respected: bool,
    /// `(trial, k)` pairs whose solve accepted a cost increase.
    pub descent_violations: Vec<(usize, usize)>,
    /// `(trial, k)` pairs whose applied input left the box.
    pub bound_violations: Vec<(usize, usize)>,
}

impl BudgetAudit {
    pub fn passed(&self) -> bool {
        self.iteration_cap_respected
            && self.descent_violations.is_empty()
            && self.bound_violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub timing_contended: bool,
    pub budgets: Vec<BudgetAudit>,
}

pub fn audit_budget(budget: Budget, records: &[TrialRecord], spec: &OcpSpec) -> BudgetAudit {
    let mut descent_violations = Vec::new();
    let mut bound_violations = Vec::new();
    let mut max_iterations = 0;
    for (trial, rec) in records.iter().enumerate() {
        for (k, s) in rec.steps.iter().enumerate() {
            max_iterations = max_iterations.max(s.iterations);
            if !s.descent_ok {
                descent_violations.push((trial, k));
            }
            let inside = (0..6)
                .all(|j| s.control.0[j] >= spec.lower.0[j] && s.control.0[j] <= spec.upper.0[j]);
            if !inside {
                bound_violations.push((trial, k));
            }
        }
    }
    BudgetAudit {
        j_max: budget,
        max_iterations,
        iteration_cap_respected: budget.limit().is_none_or(|j| max_iterations <= j),
        descent_violations,
        bound_violations,
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub setups: Vec<TrialSetup>,
    /// Trial records per budget, budgets ascending, trials in id order.
    pub records: Vec<(Budget, Vec<TrialRecord>)>,
    pub summary: CampaignSummary,
    pub audit: Audit,
}

fn run_budget(
    cfg: &CampaignConfig,
    setups: &[TrialSetup],
    budget: Budget,
) -> Result<Vec<TrialRecord>, HarnessError> {
    let solver = SolverConfig {
        budget,
        ..cfg.solver
    };
    let one =
        |s: &TrialSetup| run_closed_loop(&s.x0, &cfg.spec, &solver, &cfg.mission, s.noise_seed);
    let results: Vec<_> = if cfg.parallel {
        setups.par_iter().map(one).collect()
    } else {
        setups.iter().map(one).collect()
    };
    results
        .into_iter()
        .map(|r| r.map_err(HarnessError::from))
        .collect()
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the sweep. With `out`, every trial is written to
/// `out/trials/jmax_<b>/trial_<id>.csv` as soon as its budget finishes, and
/// the summary and audit land next to them.
pub fn run_campaign(
    cfg: &CampaignConfig,
    out: Option<&Path>,
) -> Result<CampaignOutcome, HarnessError> {
    cfg.validate()?;
    let setups = trial_setups(cfg);
    let contended = cfg.parallel && rayon::current_num_threads() > 1;
    let mut records = Vec::new();
    let mut summaries: Vec<BudgetSummary> = Vec::new();
    let mut audits = Vec::new();
    for budget in cfg.sorted_grid() {
        let recs = run_budget(cfg, &setups, budget)?;
        if let Some(dir) = out {
            for (s, r) in setups.iter().zip(&recs) {
                write_trial(
                    &trial_path(dir, budget, s.trial_id),
                    s.trial_id,
                    budget,
                    cfg.spec.dt,
                    r,
                )?;
            }
        }
        summaries.push(summarize(budget, &recs)?);
        audits.push(audit_budget(budget, &recs, &cfg.spec));
        records.push((budget, recs));
    }
    let summary = CampaignSummary { budgets: summaries };
    let audit = Audit {
        timing_contended: contended,
        budgets: audits,
    };
    if let Some(dir) = out {
        write_json(&dir.join(SUMMARY_FILE), &summary)?;
        write_json(&dir.join(AUDIT_FILE), &audit)?;
    }
    Ok(CampaignOutcome {
        setups,
        records,
        summary,
        audit,
    })
}

/// Re-summarizes the trial files of a campaign directory.
pub fn report(dir: &Path) -> Result<CampaignSummary, HarnessError> {
    let grouped = read_campaign_trials(dir)?;
    if grouped.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    let budgets = grouped
        .into_iter()
        .map(|(budget, trials)| {
            let recs: Vec<TrialRecord> = trials.into_iter().map(|t| t.record).collect();
            summarize(budget, &recs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CampaignSummary { budgets })
}

/// Writes `summary` as JSON to `path`.
pub fn write_summary(path: &Path, summary: &CampaignSummary) -> Result<(), HarnessError> {
    write_json(path, summary)
}

/// Paths of every trial file a campaign with `cfg` writes under `dir`.
pub fn expected_trial_files(cfg: &CampaignConfig, dir: &Path) -> Vec<PathBuf> {
    cfg.sorted_grid()
        .into_iter()
        .flat_map(|b| (0..cfg.trials).map(move |t| trial_path(dir, b, t)))
        .collect()
}
