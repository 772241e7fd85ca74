//! Batch runner, metrics, robustness audit and table output.

mod config;
mod metrics;
mod output;
mod run;
mod synthetic;

pub use config::{BatteryConfig, RosterEntry, RunConfig, Scenario, Split, SyntheticConfig};
pub use metrics::{
    audit_robustness, batch_bounds, five_number_summary, metrics, quantile, AuditSummary, BatchBound,
    PolicyMetrics,
};
pub use output::{emit_tables, write_curve};
pub use run::{
    advice_policy, audit_episode, battery_window, derive_seed, lado_name, prediction_path, run_batch, run_episode,
    run_instance, BatchReport, EpisodeAudit, EpisodeReport, EpisodeSource, LadoReport,
    ROBUSTNESS_TOLERANCE,
};
pub use synthetic::synthetic_instance;
