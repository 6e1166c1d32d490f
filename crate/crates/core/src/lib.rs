//! Loss-poisoning attacks on adversarial multi-armed bandit learners.
//!
//! The attacker sits between a non-adaptive environment and the learner. It
//! sees the chosen arm and its clean loss, and replaces that loss with an
//! entry of a template matrix fixed before play. The target arm is made the
//! best arm in hindsight, so any no-regret learner ends up pulling it in all
//! but a sublinear number of rounds, at sublinear total cost.
//!
//! * [`env`]: loss environments (constant, the `sqrt(T)`-gap example, CSV tables).
//! * [`player`]: Exp3 and a robust variant with budget-scaled exploration.
//! * [`attack`]: the easy and general template attacks.
//! * [`harness`]: seeded trials, aggregation, log-log fits and bound checks.
//! * [`config`]: the JSON experiment document consumed by the CLI.

pub mod attack;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod player;
pub mod trace;

pub use attack::{AttackerConfig, Strategy, TemplateMatrix};
pub use config::{EnvSpec, EpsilonSpec, EtaSpec, ExperimentConfig, PlayerSpec};
pub use env::{LossMatrix, LossSource};
pub use error::{Error, Result};
pub use player::{Player, PlayerState, PolicyDistribution};
pub use trace::{ArmId, LossValue, RoundRecord, TrialSummary};
