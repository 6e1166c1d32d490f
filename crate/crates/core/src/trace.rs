//! Per-round audit records and the metrics computed from them.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::{column_totals, LossSource};
use crate::error::{Error, Result};

/// Absolute tolerance used for loss comparisons.
pub const LOSS_TOLERANCE: f64 = 1e-9;

/// Index of an arm, `0..K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn checked(index: usize, arms: usize) -> Result<Self> {
        if index < arms {
            Ok(ArmId(index))
        } else {
            Err(Error::param(
                "arm",
                format!("arm index {index} is not below K = {arms}"),
            ))
        }
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A loss in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct LossValue(f64);

impl LossValue {
    pub const ZERO: LossValue = LossValue(0.0);
    pub const MAX: LossValue = LossValue(1.0);

    pub fn new(value: f64) -> Result<Self> {
        validate_loss(value)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Returns `value` unchanged when it lies in `[0, 1]`.
pub fn validate_loss(value: f64) -> Result<LossValue> {
    if (0.0..=1.0).contains(&value) {
        Ok(LossValue(value))
    } else {
        Err(Error::LossOutOfRange { value })
    }
}

/// One round of play as seen by the attacker.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: u64,
    pub arm: ArmId,
    pub clean_loss: LossValue,
    pub perturbed_loss: LossValue,
    pub cost: f64,
    /// Sampling distribution for this round, when recorded.
    pub policy: Option<Vec<f64>>,
}

impl RoundRecord {
    pub fn new(
        t: u64,
        arm: ArmId,
        clean_loss: LossValue,
        perturbed_loss: LossValue,
        policy: Option<Vec<f64>>,
    ) -> Self {
        RoundRecord {
            t,
            arm,
            clean_loss,
            perturbed_loss,
            cost: (perturbed_loss.get() - clean_loss.get()).abs(),
            policy,
        }
    }
}

/// Per-trial aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub selections: Vec<u64>,
    pub total_cost: f64,
    pub regret_template: f64,
    pub regret_clean: f64,
    pub seed: u64,
}

impl TrialSummary {
    pub fn target_selections(&self, target: ArmId) -> u64 {
        self.selections.get(target.0).copied().unwrap_or(0)
    }
}

/// Counts selections and sums costs over a contiguous trace. Regret fields are left at zero.
pub fn summarize_trace(records: &[RoundRecord], arms: usize, seed: u64) -> Result<TrialSummary> {
    check_contiguous(records)?;
    let mut selections = vec![0u64; arms];
    let mut total_cost = 0.0;
    for r in records {
        let slot = selections.get_mut(r.arm.0).ok_or_else(|| {
            Error::MalformedTrace(format!("round {} selects arm {} of {arms}", r.t, r.arm))
        })?;
        *slot += 1;
        total_cost += (r.perturbed_loss.get() - r.clean_loss.get()).abs();
    }
    Ok(TrialSummary {
        horizon: records.len() as u64,
        selections,
        total_cost,
        regret_template: 0.0,
        regret_clean: 0.0,
        seed,
    })
}

fn check_contiguous(records: &[RoundRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::MalformedTrace("trace is empty".into()));
    }
    for (i, r) in records.iter().enumerate() {
        let expected = i as u64 + 1;
        if r.t != expected {
            return Err(Error::MalformedTrace(format!(
                "record {i} has round {} (expected {expected})",
                r.t
            )));
        }
    }
    Ok(())
}

/// Hindsight regret of a trace against `losses`: the player's cumulative loss
/// minus that of the best fixed arm.
///
/// Pass the environment for clean regret, or the attacker's template matrix for
/// template regret.
pub fn compute_regret(records: &[RoundRecord], losses: &dyn LossSource) -> Result<f64> {
    check_contiguous(records)?;
    let horizon = records.len() as u64;
    let mut incurred = 0.0;
    for r in records {
        incurred += losses.loss(r.t, r.arm)?.get();
    }
    let best = column_totals(losses, horizon)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(incurred - best)
}

/// Writes `t,arm,clean_loss,perturbed_loss,cost`, plus `pi_0..pi_{K-1}` when the
/// records carry policies.
pub fn write_trace_csv<W: Write>(records: &[RoundRecord], arms: usize, mut out: W) -> Result<()> {
    let with_policy = records.first().is_some_and(|r| r.policy.is_some());
    let mut header = String::from("t,arm,clean_loss,perturbed_loss,cost");
    if with_policy {
        for a in 0..arms {
            header.push_str(&format!(",pi_{a}"));
        }
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;

    let mut line = String::new();
    for r in records {
        line.clear();
        line.push_str(&format!(
            "{},{},{},{},{}",
            r.t,
            r.arm,
            r.clean_loss.get(),
            r.perturbed_loss.get(),
            r.cost
        ));
        if with_policy {
            let policy = r.policy.as_deref().ok_or_else(|| {
                Error::MalformedTrace(format!("round {} is missing its policy", r.t))
            })?;
            for p in policy {
                line.push_str(&format!(",{p}"));
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
