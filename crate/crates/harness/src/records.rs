//! Per-trial CSV files: one row per control step followed by a terminal row
//! holding the state after the last applied input.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcmpc::dynamics::{Control, RelativeState};
use tcmpc::{Budget, StepRecord, Termination, TrialRecord};

use crate::HarnessError;

/// Column names in file order.
pub const COLUMNS: [&str; 28] = [
    "trial_id",
    "j_max",
    "k",
    "t_seconds",
    "dr_x",
    "dr_y",
    "dr_z",
    "dv_x",
    "dv_y",
    "dv_z",
    "dq_eta",
    "dq_rho_x",
    "dq_rho_y",
    "dq_rho_z",
    "dw_x",
    "dw_y",
    "dw_z",
    "thrust_x",
    "thrust_y",
    "thrust_z",
    "torque_x",
    "torque_y",
    "torque_z",
    "stage_cost",
    "iterations",
    "termination_reason",
    "loop_time_s",
    "docked",
];

/// Columns whose values depend on the machine rather than the inputs.
pub const WALL_TIME_COLUMNS: [&str; 1] = ["loop_time_s"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    trial_id: usize,
    j_max: Budget,
    k: usize,
    t_seconds: f64,
    dr_x: f64,
    dr_y: f64,
    dr_z: f64,
    dv_x: f64,
    dv_y: f64,
    dv_z: f64,
    dq_eta: f64,
    dq_rho_x: f64,
    dq_rho_y: f64,
    dq_rho_z: f64,
    dw_x: f64,
    dw_y: f64,
    dw_z: f64,
    thrust_x: Option<f64>,
    thrust_y: Option<f64>,
    thrust_z: Option<f64>,
    torque_x: Option<f64>,
    torque_y: Option<f64>,
    torque_z: Option<f64>,
    stage_cost: Option<f64>,
    iterations: Option<usize>,
    termination_reason: Option<String>,
    loop_time_s: Option<f64>,
    docked: Option<bool>,
}

impl Row {
    fn state_only(
        trial_id: usize,
        j_max: Budget,
        k: usize,
        dt: f64,
        x: &RelativeState<f64>,
    ) -> Self {
        let s = &x.0;
        Self {
            trial_id,
            j_max,
            k,
            t_seconds: k as f64 * dt,
            dr_x: s[0],
            dr_y: s[1],
            dr_z: s[2],
            dv_x: s[3],
            dv_y: s[4],
            dv_z: s[5],
            dq_eta: s[6],
            dq_rho_x: s[7],
            dq_rho_y: s[8],
            dq_rho_z: s[9],
            dw_x: s[10],
            dw_y: s[11],
            dw_z: s[12],
            thrust_x: None,
            thrust_y: None,
            thrust_z: None,
            torque_x: None,
            torque_y: None,
            torque_z: None,
            stage_cost: None,
            iterations: None,
            termination_reason: None,
            loop_time_s: None,
            docked: None,
        }
    }

    fn state(&self) -> RelativeState<f64> {
        RelativeState::from_slice(&[
            self.dr_x,
            self.dr_y,
            self.dr_z,
            self.dv_x,
            self.dv_y,
            self.dv_z,
            self.dq_eta,
            self.dq_rho_x,
            self.dq_rho_y,
            self.dq_rho_z,
            self.dw_x,
            self.dw_y,
            self.dw_z,
        ])
        .expect("13 values")
    }

    fn control(&self) -> Option<Control<f64>> {
        let v = [
            self.thrust_x?,
            self.thrust_y?,
            self.thrust_z?,
            self.torque_x?,
            self.torque_y?,
            self.torque_z?,
        ];
        Some(Control(nalgebra::Vector6::from_column_slice(&v)))
    }
}

/// `dir/trials/jmax_<budget>/trial_<id>.csv`
pub fn trial_path(dir: &Path, budget: Budget, trial_id: usize) -> PathBuf {
    dir.join("trials")
        .join(format!("jmax_{budget}"))
        .join(format!("trial_{trial_id:04}.csv"))
}

pub fn write_trial(
    path: &Path,
    trial_id: usize,
    budget: Budget,
    dt: f64,
    record: &TrialRecord,
) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (k, s) in record.steps.iter().enumerate() {
        let c = &s.control.0;
        let row = Row {
            thrust_x: Some(c[0]),
            thrust_y: Some(c[1]),
            thrust_z: Some(c[2]),
            torque_x: Some(c[3]),
            torque_y: Some(c[4]),
            torque_z: Some(c[5]),
            stage_cost: Some(s.stage_cost),
            iterations: Some(s.iterations),
            termination_reason: s.reason.map(|r| r.as_str().to_string()),
            loop_time_s: Some(s.loop_time),
            docked: Some(s.docked),
            ..Row::state_only(trial_id, budget, k, dt, &s.state)
        };
        w.serialize(row).map_err(csv_err)?;
    }
    let terminal = Row::state_only(
        trial_id,
        budget,
        record.steps.len(),
        dt,
        &record.final_state,
    );
    w.serialize(terminal).map_err(csv_err)?;
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// A trial read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTrial {
    pub trial_id: usize,
    pub budget: Budget,
    pub record: TrialRecord,
}

pub fn read_trial(path: &Path) -> Result<StoredTrial, HarnessError> {
    let malformed = |message: String| HarnessError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = r.headers().map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    if headers.iter().ne(COLUMNS.iter().copied()) {
        return Err(malformed("unexpected header".to_string()));
    }
    let mut rows = Vec::new();
    for row in r.deserialize::<Row>() {
        rows.push(row.map_err(|source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        })?);
    }
    let Some((terminal, body)) = rows.split_last() else {
        return Err(malformed("no rows".to_string()));
    };
    if terminal.control().is_some() {
        return Err(malformed("last row must be the terminal state".to_string()));
    }
    let mut steps = Vec::with_capacity(body.len());
    for (k, row) in body.iter().enumerate() {
        if row.k != k || row.trial_id != terminal.trial_id || row.j_max != terminal.j_max {
            return Err(malformed(format!("row {k} is out of sequence")));
        }
        let control = row
            .control()
            .ok_or_else(|| malformed(format!("row {k} has no control")))?;
        let reason = match &row.termination_reason {
            Some(s) => Some(s.parse::<Termination>().map_err(malformed)?),
            None => None,
        };
        steps.push(StepRecord {
            state: row.state(),
            control,
            stage_cost: row.stage_cost.unwrap_or_default(),
            iterations: row.iterations.unwrap_or_default(),
            reason,
            loop_time: row.loop_time_s.unwrap_or_default(),
            docked: row.docked.unwrap_or_default(),
            descent_ok: true,
        });
    }
    let dock_step = steps.iter().position(|s| s.docked);
    Ok(StoredTrial {
        trial_id: terminal.trial_id,
        budget: terminal.j_max,
        record: TrialRecord {
            steps,
            final_state: terminal.state(),
            docked: dock_step.is_some(),
            dock_step,
        },
    })
}

/// Every trial file under `dir/trials`, grouped by budget in ascending order
/// and sorted by trial id within a budget.
pub fn read_campaign_trials(dir: &Path) -> Result<Vec<(Budget, Vec<StoredTrial>)>, HarnessError> {
    let root = dir.join("trials");
    let mut files = Vec::new();
    let entries = fs::read_dir(&root).map_err(|e| HarnessError::io(&root, e))?;
    for entry in entries {
        let sub = entry.map_err(|e| HarnessError::io(&root, e))?.path();
        if !sub.is_dir() {
            continue;
        }
        for f in fs::read_dir(&sub).map_err(|e| HarnessError::io(&sub, e))? {
            let p = f.map_err(|e| HarnessError::io(&sub, e))?.path();
            if p.extension().is_some_and(|e| e == "csv") {
                files.push(p);
            }
        }
    }
    let mut trials = files
        .iter()
        .map(|p| read_trial(p))
        .collect::<Result<Vec<_>, _>>()?;
    trials.sort_by_key(|t| (t.budget, t.trial_id));
    let mut grouped: Vec<(Budget, Vec<StoredTrial>)> = Vec::new();
    for t in trials {
        match grouped.last_mut() {
            Some((b, list)) if *b == t.budget => list.push(t),
            _ => grouped.push((t.budget, vec![t])),
        }
    }
    Ok(grouped)
}
