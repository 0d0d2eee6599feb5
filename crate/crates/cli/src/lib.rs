//! Subcommand dispatch for the `tcmpc` binary.

mod error;
mod manifest;
mod settings;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tcmpc::{run_closed_loop, state_error, Budget};
use tcmpc_harness::records::write_trial;
use tcmpc_harness::{
    report, run_campaign, run_comparison, trial_setups, write_summary, CampaignConfig,
    CampaignSummary, AUDIT_FILE, CLOSED_LOOP_FILE, COMPARISON_FILE, OPEN_LOOP_FILE, SUMMARY_FILE,
};

pub use error::CliError;
pub use manifest::{RunManifest, MANIFEST_FILE};
pub use settings::{parse_jmax, Command, InitialState, Settings};

pub const TRIAL_FILE: &str = "trial.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Parser)]
#[command(
    name = "tcmpc",
    version,
    about = "Iteration-budgeted MPC for spacecraft docking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// One closed-loop trial from a given or sampled initial state.
    Simulate(RunArgs),
    /// Monte Carlo sweep over iteration budgets.
    Campaign(RunArgs),
    /// Open-loop playback against closed-loop MPC under the same noise.
    CompareOpenloop(RunArgs),
    /// Re-summarize the trial files of a campaign directory.
    Report {
        /// Campaign output directory.
        dir: PathBuf,
        /// Where to write the report; defaults to `<dir>/report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetList(pub Vec<Budget>);

fn parse_budget_list(s: &str) -> Result<BudgetList, String> {
    parse_jmax(s).map(BudgetList)
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML config file, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated budgets, e.g. `1,2,4,optimal`.
    #[arg(long, value_parser = parse_budget_list)]
    pub jmax: Option<BudgetList>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_parser = parse_on_off)]
    pub perturb: Option<bool>,
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on or off, got `{other}`")),
    }
}

impl RunArgs {
    fn resolve(&self, cmd: Command) -> Result<Settings, CliError> {
        let mut s = Settings::load(cmd, self.config.as_deref())?;
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = &self.jmax {
            s.jmax = v.0.clone();
        }
        if let Some(v) = self.trials {
            s.trials = v;
        }
        if let Some(v) = self.perturb {
            s.perturb = v;
        }
        Ok(s)
    }

    fn out_dir(&self, name: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("tcmpc-out").join(name))
    }
}

/// Parses `argv` and runs the command. Returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Sub) -> Result<(), CliError> {
    match cmd {
        Sub::Simulate(a) => simulate(&a),
        Sub::Campaign(a) => campaign(&a),
        Sub::CompareOpenloop(a) => compare(&a),
        Sub::Report { dir, out } => report_cmd(&dir, out.as_deref()),
    }
}

fn simulate(a: &RunArgs) -> Result<(), CliError> {
    let s = a.resolve(Command::Simulate)?;
    let dir = a.out_dir("simulate");
    let spec = s.spec()?;
    let budget = s.single_budget()?;
    let solver = s.solver(budget);
    let mission = s.mission();
    let setup = trial_setups(&CampaignConfig {
        trials: 1,
        ..s.campaign()?
    })[0];

    let trial = dir.join(TRIAL_FILE);
    RunManifest::new("simulate", &s, vec![trial.clone()]).write(&dir)?;
    let rec = run_closed_loop(&setup.x0, &spec, &solver, &mission, setup.noise_seed)?;
    write_trial(&trial, 0, budget, spec.dt, &rec)?;
    println!(
        "j_max {budget}: {} after {} steps, final error {:.6e}",
        if rec.docked { "docked" } else { "not docked" },
        rec.steps.len(),
        state_error(&rec.final_state)
    );
    Ok(())
}

fn print_table(summary: &CampaignSummary) {
    println!(
        "{:>8} {:>9} {:>9} {:>14} {:>14}",
        "j_max", "success", "failure", "total cost", "max loop s"
    );
    for b in &summary.budgets {
        println!(
            "{:>8} {:>9} {:>9} {:>14.6e} {:>14.6}",
            b.j_max.to_string(),
            b.successes,
            b.failures,
            b.totals.cost,
            b.timing.maximum_s
        );
    }
}

fn campaign(a: &RunArgs) -> Result<(), CliError> {
    let s = a.resolve(Command::Campaign)?;
    let dir = a.out_dir("campaign");
    let cfg = s.campaign()?;
    cfg.validate()?;
    let outputs = vec![
        dir.join("trials"),
        dir.join(SUMMARY_FILE),
        dir.join(AUDIT_FILE),
    ];
    RunManifest::new("campaign", &s, outputs).write(&dir)?;
    let out = run_campaign(&cfg, Some(&dir))?;
    print_table(&out.summary);
    if out.audit.budgets.iter().any(|b| !b.passed()) {
        eprintln!(
            "warning: audit found violations, see {}",
            dir.join(AUDIT_FILE).display()
        );
    }
    Ok(())
}

fn compare(a: &RunArgs) -> Result<(), CliError> {
    let s = a.resolve(Command::CompareOpenloop)?;
    let dir = a.out_dir("compare-openloop");
    let cfg = s.comparison()?;
    let outputs = [OPEN_LOOP_FILE, CLOSED_LOOP_FILE, COMPARISON_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    RunManifest::new("compare-openloop", &s, outputs).write(&dir)?;
    let c = run_comparison(&cfg, Some(&dir))?;
    let r = &c.result;
    println!(
        "open loop: final error {:.6e}, docked {}",
        r.open_loop_final_error, r.open_loop_docked
    );
    println!(
        "closed loop: final error {:.6e}, docked {} at step {:?}",
        r.closed_loop_final_error, r.closed_loop_docked, r.closed_loop_dock_step
    );
    Ok(())
}

fn report_cmd(dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    if !dir.is_dir() {
        return Err(CliError::Io(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let summary = report(dir)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(REPORT_FILE));
    write_summary(&path, &summary)?;
    print_table(&summary);
    Ok(())
}
