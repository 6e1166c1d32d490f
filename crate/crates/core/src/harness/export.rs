//! Machine-readable outputs: aggregate CSV, per-trial JSON lines, bound reports.
//!
//! Numbers use Rust's shortest round-trip formatting and lines end in `\n`, so
//! identical runs produce byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::TrialSummary;

use super::bounds::BoundReport;
use super::run::{AggregateSummary, HorizonAggregate};

pub const AGGREGATE_HEADER: &str = "T,metric,mean,stddev,trials";
pub const SWEEP_HEADER: &str = "sweep_key,sweep_value,T,metric,mean,stddev,trials";

/// Metric rows emitted per horizon, in column order.
pub fn metric_rows(h: &HorizonAggregate) -> Vec<(&'static str, f64, f64)> {
    let t = h.horizon as f64;
    vec![
        ("target_selections", h.target_selections.mean, h.target_selections.stddev),
        ("non_target_selections", h.non_target_selections.mean, h.non_target_selections.stddev),
        ("target_fraction", h.target_selections.mean / t, h.target_selections.stddev / t),
        ("cost", h.cost.mean, h.cost.stddev),
        ("cost_per_round", h.cost.mean / t, h.cost.stddev / t),
        ("regret_clean", h.regret_clean.mean, h.regret_clean.stddev),
        ("regret_template", h.regret_template.mean, h.regret_template.stddev),
    ]
}

pub fn aggregate_csv(agg: &AggregateSummary) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for h in &agg.horizons {
        for (metric, mean, sd) in metric_rows(h) {
            let _ = writeln!(out, "{},{metric},{mean},{sd},{}", h.horizon, h.trials.len());
        }
    }
    out
}

/// One block of rows per sweep value, prefixed by the swept key and value.
pub fn sweep_csv(key: &str, groups: &[(f64, AggregateSummary)]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for (value, agg) in groups {
        for h in &agg.horizons {
            for (metric, mean, sd) in metric_rows(h) {
                let _ = writeln!(
                    out,
                    "{key},{value},{},{metric},{mean},{sd},{}",
                    h.horizon,
                    h.trials.len()
                );
            }
        }
    }
    out
}

#[derive(Serialize)]
struct TrialLine<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep_key: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep_value: Option<f64>,
    trial: usize,
    #[serde(flatten)]
    summary: &'a TrialSummary,
}

fn push_trials(out: &mut String, agg: &AggregateSummary, sweep: Option<(&str, f64)>) -> Result<()> {
    for h in &agg.horizons {
        for (trial, summary) in h.trials.iter().enumerate() {
            let line = TrialLine {
                sweep_key: sweep.map(|s| s.0),
                sweep_value: sweep.map(|s| s.1),
                trial,
                summary,
            };
            out.push_str(&serde_json::to_string(&line).map_err(|e| Error::Io(e.to_string()))?);
            out.push('\n');
        }
    }
    Ok(())
}

pub fn trials_jsonl(agg: &AggregateSummary) -> Result<String> {
    let mut out = String::new();
    push_trials(&mut out, agg, None)?;
    Ok(out)
}

pub fn sweep_trials_jsonl(key: &str, groups: &[(f64, AggregateSummary)]) -> Result<String> {
    let mut out = String::new();
    for (value, agg) in groups {
        push_trials(&mut out, agg, Some((key, *value)))?;
    }
    Ok(out)
}

pub fn bounds_json(reports: &[BoundReport]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(reports).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
