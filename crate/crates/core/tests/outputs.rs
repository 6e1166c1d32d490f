//! The CSV/JSON layouts consumed by downstream plotting and analysis tools.

use bandit_attack::attack::AttackerConfig;
use bandit_attack::config::{EtaSpec, PlayerSpec};
use bandit_attack::env::LossMatrix;
use bandit_attack::harness::export::{aggregate_csv, sweep_csv, trials_jsonl, AGGREGATE_HEADER, SWEEP_HEADER};
use bandit_attack::harness::{AggregateSummary, Experiment};
use bandit_attack::trace::{ArmId, TrialSummary};

const METRICS: [&str; 7] = [
    "target_selections",
    "non_target_selections",
    "target_fraction",
    "cost",
    "cost_per_round",
    "regret_clean",
    "regret_template",
];

fn experiment(epsilon: f64) -> AggregateSummary {
    Experiment {
        env: LossMatrix::constant(vec![1.0, 0.0], 1_000).unwrap(),
        player: PlayerSpec::Exp3 { eta: EtaSpec::Auto },
        attacker: AttackerConfig::general(ArmId(0), 0.5, epsilon).unwrap(),
        horizons: vec![100, 1_000],
        trials: 3,
        base_seed: 7,
    }
    .run()
    .unwrap()
}

fn parse(text: &str) -> (Vec<String>, Vec<csv::StringRecord>) {
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap()).collect();
    (header, rows)
}

#[test]
fn aggregate_csv_schema() {
    let agg = experiment(0.25);
    let (header, rows) = parse(&aggregate_csv(&agg));
    assert_eq!(header.join(","), AGGREGATE_HEADER);
    assert_eq!(AGGREGATE_HEADER, "T,metric,mean,stddev,trials");
    assert_eq!(rows.len(), 2 * METRICS.len());
    for (i, row) in rows.iter().enumerate() {
        let horizon: u64 = row[0].parse().unwrap();
        assert_eq!(horizon, [100, 1_000][i / METRICS.len()]);
        assert_eq!(&row[1], METRICS[i % METRICS.len()]);
        let mean: f64 = row[2].parse().unwrap();
        let sd: f64 = row[3].parse().unwrap();
        assert!(mean.is_finite() && sd >= 0.0);
        assert_eq!(&row[4], "3");
    }
    // Plotted series must be positive for log axes.
    let curve: Vec<f64> = rows
        .iter()
        .filter(|r| &r[1] == "non_target_selections" || &r[1] == "cost")
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert!(curve.iter().all(|&v| v > 0.0));
}

#[test]
fn sweep_csv_groups_by_value() {
    let groups = vec![(0.1, experiment(0.1)), (0.25, experiment(0.25))];
    let (header, rows) = parse(&sweep_csv("epsilon", &groups));
    assert_eq!(header.join(","), SWEEP_HEADER);
    assert_eq!(rows.len(), 2 * 2 * METRICS.len());
    assert!(rows.iter().all(|r| &r[0] == "epsilon"));
    let values: Vec<&str> = rows.iter().map(|r| r.get(1).unwrap()).collect();
    assert!(values[..14].iter().all(|v| *v == "0.1"));
    assert!(values[14..].iter().all(|v| *v == "0.25"));
}

#[test]
fn numbers_round_trip() {
    let agg = experiment(0.25);
    let (_, rows) = parse(&aggregate_csv(&agg));
    let cost_row = rows.iter().find(|r| r[0] == *"1000" && &r[1] == "cost").unwrap();
    let parsed: f64 = cost_row[2].parse().unwrap();
    assert_eq!(parsed.to_bits(), agg.horizons[1].cost.mean.to_bits());
}

#[test]
fn trials_jsonl_carries_full_summaries() {
    let agg = experiment(0.25);
    let text = trials_jsonl(&agg).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    for (i, line) in lines.iter().enumerate() {
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(value["trial"], i % 3);
        let summary: TrialSummary = serde_json::from_value(value.clone()).unwrap();
        assert_eq!(summary, agg.horizons[i / 3].trials[i % 3]);
        for key in ["T", "selections", "total_cost", "regret_template", "regret_clean", "seed"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (experiment(0.25), experiment(0.25));
    assert_eq!(aggregate_csv(&a), aggregate_csv(&b));
    assert_eq!(trials_jsonl(&a).unwrap(), trials_jsonl(&b).unwrap());
}
