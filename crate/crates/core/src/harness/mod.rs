//! Trial orchestration, aggregation and bound verification.

mod bounds;
pub mod export;
mod run;
mod slope;

pub use bounds::{
    check_lemma1, check_thm1, check_thm2, check_thm3, default_m, lemma1_bound,
    lower_bound_env, lower_bound_experiment, near_max_rounds, thm2_thresholds, BoundReport,
    Direction, LowerBoundResult, LowerBoundSpec, LOWER_BOUND_TARGET,
};
pub use run::{
    equivalence_check, equivalence_check_seeds, run_experiment, run_trial, run_trial_with,
    AggregateSummary, Experiment, HorizonAggregate, Stat, TrialOptions, TrialOutput,
};
pub use slope::loglog_slope;
