//! Monte Carlo campaigns over iteration budgets, the open-versus-closed-loop
//! comparison, and their on-disk formats.

mod campaign;
mod compare;
mod error;
pub mod records;
mod sampling;
pub mod summary;

pub use campaign::{
    audit_budget, expected_trial_files, read_json, report, run_campaign, trial_setups,
    write_summary, Audit, BudgetAudit, CampaignConfig, CampaignOutcome, TrialSetup, AUDIT_FILE,
    SUMMARY_FILE,
};
pub use compare::{
    run_comparison, Comparison, ComparisonConfig, ComparisonResult, CLOSED_LOOP_FILE,
    COMPARISON_FILE, OPEN_LOOP_FILE,
};
pub use error::HarnessError;
pub use sampling::{sample_initial_state, trial_rng, SamplingBounds};
pub use summary::{summarize, BudgetSummary, CampaignSummary};

use tcmpc::dynamics::RelativeState;
use tcmpc::State13;

/// The rendezvous initial state used by the open-versus-closed-loop
/// experiment, as printed (the quaternion is normalized on load).
pub const PRESET_X0: [f64; 13] = [
    1.5, -1.77, 3.0, 1e-3, 3.4e-3, 0.0, 0.772, 0.463, 0.309, 0.309, -2.15e-4, 1e-3, -4.6e-3,
];

pub fn preset_initial_state() -> State13 {
    let mut x = RelativeState::from_slice(&PRESET_X0).expect("13 values");
    x.normalize_attitude();
    x
}
