mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bandit_attack::harness::export::{
    aggregate_csv, bounds_json, sweep_csv, sweep_trials_jsonl, trials_jsonl,
};
use bandit_attack::harness::{AggregateSummary, Experiment};
use bandit_attack::{EpsilonSpec, Error, ExperimentConfig, PlayerSpec, Result, Strategy};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::{OutputDir, SweepEcho};
use crate::verify::Theorem;

#[derive(Parser, Debug)]
#[command(
    name = "bandit-attack",
    version,
    about = "Run loss-poisoning attack experiments against adversarial bandit learners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured experiment and write aggregate.csv, trials.jsonl and manifest.json.
    Run(Common),
    /// Re-run the experiment once per value of one parameter and write combined outputs.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary.
        #[arg(long, value_enum)]
        key: SweepKey,
        /// Values to try (comma separated or repeated).
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Check a bound against the configured experiment and write bounds.json.
    /// Exits 0 only when every report is satisfied.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        theorem: Theorem,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Override experiment.base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override experiment.trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Suppress the summary printed to stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKey {
    /// Horizon: each value becomes a single-horizon run.
    #[value(name = "T")]
    Horizon,
    /// Attack margin exponent of the general attack.
    Epsilon,
    /// Exponent of the robust player's assumed corruption budget.
    Phi,
}

impl SweepKey {
    fn name(self) -> &'static str {
        match self {
            SweepKey::Horizon => "T",
            SweepKey::Epsilon => "epsilon",
            SweepKey::Phi => "phi",
        }
    }

    /// Returns a copy of `cfg` with this key set to `value`.
    fn apply(self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = cfg.clone();
        match self {
            SweepKey::Horizon => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u64::MAX as f64) {
                    return Err(Error::Usage(format!("T sweep values must be positive integers, got {value}")));
                }
                cfg.experiment.horizons = vec![value as u64];
            }
            SweepKey::Epsilon => {
                if cfg.attacker.strategy != Strategy::General {
                    return Err(Error::Usage("an epsilon sweep needs the general attack".into()));
                }
                cfg.attacker.epsilon = Some(EpsilonSpec::Value(value));
            }
            SweepKey::Phi => match &mut cfg.player {
                PlayerSpec::Exprb { phi_exponent } => *phi_exponent = value,
                _ => return Err(Error::Usage("a phi sweep needs the exprb player".into())),
            },
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Common {
    /// Loads the config, applies overrides and returns it with its directory.
    fn load(&self) -> Result<(ExperimentConfig, Option<PathBuf>)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.experiment.base_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.experiment.trials = trials;
        }
        cfg.validate()?;
        let base_dir = self.config.parent().map(Path::to_path_buf);
        Ok((cfg, base_dir))
    }
}

fn print_summary(label: &str, agg: &AggregateSummary) {
    for h in &agg.horizons {
        println!(
            "{label}T={:<9} target_fraction={:.4} cost={:.2} cost_per_round={:.5} regret_clean={:.2}",
            h.horizon,
            h.target_fraction(),
            h.cost.mean,
            h.cost_per_round(),
            h.regret_clean.mean
        );
    }
}

fn cmd_run(common: &Common) -> Result<ExitCode> {
    let (cfg, base_dir) = common.load()?;
    let agg = Experiment::from_config(&cfg, base_dir.as_deref())?.run()?;
    let mut out = OutputDir::create(&common.out)?;
    out.write("aggregate.csv", &aggregate_csv(&agg))?;
    out.write("trials.jsonl", &trials_jsonl(&agg)?)?;
    out.finish("run", &common.config, cfg, None)?;
    if !common.quiet {
        print_summary("", &agg);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(common: &Common, key: SweepKey, values: &[f64]) -> Result<ExitCode> {
    if values.is_empty() {
        return Err(Error::Usage("--values must list at least one value".into()));
    }
    let (cfg, base_dir) = common.load()?;
    let mut groups = Vec::with_capacity(values.len());
    for &value in values {
        let swept = key.apply(&cfg, value)?;
        let agg = Experiment::from_config(&swept, base_dir.as_deref())?.run()?;
        if !common.quiet {
            print_summary(&format!("{}={value} ", key.name()), &agg);
        }
        groups.push((value, agg));
    }
    let mut out = OutputDir::create(&common.out)?;
    out.write("aggregate.csv", &sweep_csv(key.name(), &groups))?;
    out.write("trials.jsonl", &sweep_trials_jsonl(key.name(), &groups)?)?;
    let echo = SweepEcho {
        key: key.name().to_string(),
        values: values.to_vec(),
    };
    out.finish("sweep", &common.config, cfg, Some(echo))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(common: &Common, theorem: Theorem) -> Result<ExitCode> {
    let (cfg, base_dir) = common.load()?;
    let reports = verify::run(theorem, &cfg, base_dir.as_deref())?;
    let mut out = OutputDir::create(&common.out)?;
    out.write("bounds.json", &bounds_json(&reports)?)?;
    out.finish("verify", &common.config, cfg, None)?;
    let all = reports.iter().all(|r| r.satisfied);
    if !common.quiet {
        for r in &reports {
            println!(
                "{} {} T={} lhs={} rhs={} slack={}",
                if r.satisfied { "ok  " } else { "FAIL" },
                r.bound,
                r.horizon,
                r.lhs,
                r.rhs,
                r.slack
            );
        }
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => cmd_run(common),
        Command::Sweep { common, key, values } => cmd_sweep(common, *key, values),
        Command::Verify { common, theorem } => cmd_verify(common, *theorem),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn general() -> ExperimentConfig {
        ExperimentConfig::from_json_str(
            r#"{
              "environment": { "kind": "constant", "losses": [1.0, 0.0] },
              "player": { "name": "exprb", "phi_exponent": 0.5 },
              "attacker": { "strategy": "general", "target_arm": 0, "epsilon": 0.1 },
              "experiment": { "horizons": [10, 100] }
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn sweep_keys_set_their_field() {
        let cfg = general();
        assert_eq!(SweepKey::Horizon.apply(&cfg, 50.0).unwrap().experiment.horizons, [50]);
        assert_eq!(
            SweepKey::Epsilon.apply(&cfg, 0.4).unwrap().attacker.epsilon,
            Some(EpsilonSpec::Value(0.4))
        );
        assert_eq!(
            SweepKey::Phi.apply(&cfg, 0.9).unwrap().player,
            PlayerSpec::Exprb { phi_exponent: 0.9 }
        );
    }

    #[test]
    fn sweep_values_are_validated() {
        let cfg = general();
        assert!(SweepKey::Horizon.apply(&cfg, 0.0).is_err());
        assert!(SweepKey::Horizon.apply(&cfg, 2.5).is_err());
        assert!(matches!(
            SweepKey::Epsilon.apply(&cfg, 0.5),
            Err(Error::Config { ref field, .. }) if field == "attacker.epsilon"
        ));
        let mut easy = cfg.clone();
        easy.attacker.strategy = Strategy::Easy;
        assert!(SweepKey::Epsilon.apply(&easy, 0.1).is_err());
    }
}
