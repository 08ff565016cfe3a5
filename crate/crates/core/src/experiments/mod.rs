//! Seeded Monte Carlo harness, statistics and named presets.
//!
//! Every preset is a pure function of its parameters and master seed. Trials
//! may run on several threads; results are indexed by trial number before
//! aggregation, so summaries do not depend on scheduling.

mod presets;
mod report;
mod stats;
mod trials;

pub use presets::*;
pub use report::{Check, Report, Row};
pub use stats::{paired_difference, ratio_of_means, Stat};
pub use trials::{
    run_trial_records, run_trials, summarize, Algorithm, AuditComparison, PairStat, TrialConfig,
    TrialRecord, TrialSummary,
};
