//! Repeated seeded runs, summary statistics, the verification-budget monitoring
//! protocol and result files.

pub mod config;
pub mod monitor;
pub mod report;
pub mod run;
pub mod stats;
pub mod wald;

pub use config::{
    build_learner, EnvConfig, ExperimentConfig, Learner, PreparedEnv, StrategyConfig, StrategySpec,
    ThetaSpec,
};
pub use monitor::{
    f1_score, monitor, monitor_run, MonitorConfig, MonitorParams, MonitorReport, MonitorRow,
    MonitorRun, MonitorStrategy,
};
pub use report::{
    format_monitor_table, format_table, read_report, write_experiment, CURVES_FILE, SUMMARY_FILE,
};
pub use run::{
    replicate, run_game, run_prepared, stream_rng, summarize, Experiment, ExperimentSummary,
    RunRecord, StrategySummary,
};
pub use wald::{wald_budget, WaldBudget};
