//! Aggregate statistics over the trials of one budget.

use serde::{Deserialize, Serialize};
use tcmpc::dynamics::RelativeState;
use tcmpc::{Budget, TrialRecord};

use crate::HarnessError;

/// Width of a loop-time histogram bin, in seconds.
pub const BIN_WIDTH: f64 = 0.1;

/// Per-step averages across trials. A trial shorter than the longest one
/// contributes its last value to the remaining steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    /// `‖z − z_d‖₂` with `z = (u, x)`.
    pub error: Vec<f64>,
    pub state_error: Vec<f64>,
    pub control_error: Vec<f64>,
    /// `‖(δr, δṙ)‖₂`.
    pub translational_error: Vec<f64>,
    /// `‖(δq − q_I, δω)‖₂`.
    pub attitudinal_error: Vec<f64>,
    pub stage_cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    /// Sum over steps of the averaged `error` series.
    pub error: f64,
    /// Sum over steps of the averaged `stage_cost` series.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_start: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub solver_calls: usize,
    pub average_s: f64,
    pub maximum_s: f64,
    pub bin_width_s: f64,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub j_max: Budget,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    /// Docking step of every trial in trial order, `None` if it never
    /// docked.
    pub dock_steps: Vec<Option<usize>>,
    pub mean_iterations: f64,
    pub totals: Totals,
    pub timing: Timing,
    pub series: Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub budgets: Vec<BudgetSummary>,
}

impl CampaignSummary {
    pub fn get(&self, budget: Budget) -> Option<&BudgetSummary> {
        self.budgets.iter().find(|b| b.j_max == budget)
    }

    /// Success counts in grid order.
    pub fn success_counts(&self) -> Vec<(Budget, usize)> {
        self.budgets
            .iter()
            .map(|b| (b.j_max, b.successes))
            .collect()
    }
}

struct StepMetrics([f64; 6]);

fn step_metrics(x: &RelativeState<f64>, u: &tcmpc::Control6, stage_cost: f64) -> StepMetrics {
    let e = x.0 - RelativeState::<f64>::docked().0;
    let state = e.norm();
    let control = u.0.norm();
    let translational = e.fixed_rows::<6>(0).norm();
    let attitudinal = e.fixed_rows::<7>(6).norm();
    let full = (state * state + control * control).sqrt();
    StepMetrics([full, state, control, translational, attitudinal, stage_cost])
}

/// Bin index of a loop time; bin `b` covers `[b·0.1, (b+1)·0.1)`.
pub fn histogram_bin(seconds: f64) -> usize {
    (seconds / BIN_WIDTH).floor().max(0.0) as usize
}

/// Summarizes the trials of one budget. Records are taken in the given
/// order, which callers keep as trial order.
pub fn summarize(budget: Budget, records: &[TrialRecord]) -> Result<BudgetSummary, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    let len = records.iter().map(|r| r.steps.len()).max().unwrap_or(0);
    let mut sums = vec![[0.0f64; 6]; len];
    for rec in records {
        let metrics: Vec<StepMetrics> = rec
            .steps
            .iter()
            .map(|s| step_metrics(&s.state, &s.control, s.stage_cost))
            .collect();
        let Some(last) = metrics.last() else {
            continue;
        };
        for (k, acc) in sums.iter_mut().enumerate() {
            let m = metrics.get(k).unwrap_or(last);
            for (a, v) in acc.iter_mut().zip(m.0.iter()) {
                *a += v;
            }
        }
    }
    let count = records.len() as f64;
    let column = |c: usize| -> Vec<f64> { sums.iter().map(|s| s[c] / count).collect() };
    let series = Series {
        error: column(0),
        state_error: column(1),
        control_error: column(2),
        translational_error: column(3),
        attitudinal_error: column(4),
        stage_cost: column(5),
    };
    let totals = Totals {
        error: series.error.iter().sum(),
        cost: series.stage_cost.iter().sum(),
    };

    let times: Vec<f64> = records
        .iter()
        .flat_map(|r| {
            r.steps
                .iter()
                .filter(|s| s.reason.is_some())
                .map(|s| s.loop_time)
        })
        .collect();
    let mut counts: Vec<usize> = Vec::new();
    for t in &times {
        let b = histogram_bin(*t);
        if counts.len() <= b {
            counts.resize(b + 1, 0);
        }
        counts[b] += 1;
    }
    let timing = Timing {
        solver_calls: times.len(),
        average_s: if times.is_empty() {
            0.0
        } else {
            times.iter().sum::<f64>() / times.len() as f64
        },
        maximum_s: times.iter().copied().fold(0.0, f64::max),
        bin_width_s: BIN_WIDTH,
        histogram: counts
            .into_iter()
            .enumerate()
            .map(|(b, count)| HistogramBin {
                bin_start: b as f64 / 10.0,
                count,
            })
            .collect(),
    };

    let successes = records.iter().filter(|r| r.docked).count();
    let iterations: usize = records
        .iter()
        .flat_map(|r| r.steps.iter().map(|s| s.iterations))
        .sum();
    Ok(BudgetSummary {
        j_max: budget,
        trials: records.len(),
        successes,
        failures: records.len() - successes,
        dock_steps: records.iter().map(|r| r.dock_step).collect(),
        mean_iterations: iterations as f64 / timing.solver_calls.max(1) as f64,
        totals,
        timing,
        series,
    })
}
