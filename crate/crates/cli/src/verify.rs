//! Dispatch from a theorem name to the harness bound checkers.

use std::path::Path;

use bandit_attack::harness::{
    check_lemma1, check_thm1, check_thm2, check_thm3, default_m, equivalence_check,
    lower_bound_experiment, BoundReport, Direction, Experiment, LowerBoundSpec, Stat,
};
use bandit_attack::{
    EtaSpec, Error, ExperimentConfig, LossSource, PlayerSpec, PolicyDistribution, Result, Strategy,
};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Theorem {
    Thm1,
    Thm2,
    Thm3,
    Lemma1,
    LowerBound,
    Equivalence,
}

fn require(strategy: Strategy, expected: Strategy, theorem: &str) -> Result<()> {
    if strategy == expected {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "{theorem} applies to the {expected} attack, but the config uses `{strategy}`"
        )))
    }
}

/// `verify.rho` if given, otherwise the smallest gap between the target's
/// clean loss and the maximum loss over the longest horizon.
fn resolve_rho(cfg: &ExperimentConfig, exp: &Experiment) -> Result<f64> {
    if let Some(rho) = cfg.verify.and_then(|v| v.rho) {
        return Ok(rho);
    }
    let longest = *exp.horizons.last().expect("validated non-empty");
    let mut worst: f64 = 0.0;
    for t in 1..=longest {
        worst = worst.max(exp.env.loss(t, exp.attacker.target)?.get());
    }
    let rho = 1.0 - worst;
    if rho > 0.0 {
        Ok(rho)
    } else {
        Err(Error::Config {
            field: "verify.rho".into(),
            reason: "the target arm reaches the maximum loss, so rho cannot be derived; set it explicitly"
                .into(),
        })
    }
}

pub fn run(theorem: Theorem, cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Vec<BoundReport>> {
    let exp = Experiment::from_config(cfg, base_dir)?;
    let m = cfg.verify.and_then(|v| v.m).unwrap_or_else(|| default_m(exp.env.arms()));
    let (alpha, epsilon) = (exp.attacker.alpha, exp.attacker.epsilon);
    let strategy = exp.attacker.strategy;

    match theorem {
        Theorem::Thm1 => {
            require(strategy, Strategy::Easy, "thm1")?;
            let rho = resolve_rho(cfg, &exp)?;
            let agg = exp.run()?;
            collect(agg.horizons.iter().map(|h| check_thm1(h, rho, alpha, m)))
        }
        Theorem::Thm2 => {
            require(strategy, Strategy::General, "thm2")?;
            let agg = exp.run()?;
            collect(agg.horizons.iter().map(|h| check_thm2(h, alpha, epsilon, m)))
        }
        Theorem::Thm3 => {
            require(strategy, Strategy::General, "thm3")?;
            let rho = cfg.verify.and_then(|v| v.rho).ok_or_else(|| Error::Config {
                field: "verify.rho".into(),
                reason: "thm3 needs an explicit rho".into(),
            })?;
            let agg = exp.run()?;
            collect(
                agg.horizons
                    .iter()
                    .map(|h| check_thm3(h, &exp.env, exp.attacker.target, rho, alpha, epsilon, m)),
            )
        }
        Theorem::Lemma1 => {
            if !cfg.player.is_plain_exp3() {
                return Err(Error::Usage("lemma1 requires the exp3 player".into()));
            }
            require(strategy, Strategy::None, "lemma1")?;
            let agg = exp.run()?;
            check_lemma1(&agg, &PolicyDistribution::uniform(exp.env.arms()), &exp.env)
        }
        Theorem::LowerBound => lower_bound(&exp, cfg),
        Theorem::Equivalence => equivalence(&exp),
    }
}

fn collect(reports: impl Iterator<Item = Result<[BoundReport; 2]>>) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for pair in reports {
        out.extend(pair?);
    }
    Ok(out)
}

/// Runs the fixed lower-bound construction and compares the fitted cost
/// exponent with `alpha - 0.1`.
fn lower_bound(exp: &Experiment, cfg: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    if exp.horizons.len() < 2 {
        return Err(Error::Config {
            field: "experiment.horizons".into(),
            reason: "the exponent fit needs at least two horizons".into(),
        });
    }
    let beta = match cfg.player {
        PlayerSpec::Exp3 {
            eta: EtaSpec::Schedule { beta, .. },
        } => beta,
        _ => 1.0,
    };
    let strategy = if exp.attacker.strategy == Strategy::None {
        Strategy::Easy
    } else {
        exp.attacker.strategy
    };
    let result = lower_bound_experiment(&LowerBoundSpec {
        alpha: exp.attacker.alpha,
        beta,
        horizons: exp.horizons.clone(),
        trials: exp.trials,
        base_seed: exp.base_seed,
        strategy,
    })?;
    let point = Stat {
        mean: result.cost_exponent,
        stddev: 0.0,
        min: result.cost_exponent,
        max: result.cost_exponent,
        n: exp.trials,
    };
    Ok(vec![BoundReport::new(
        "lower_bound.cost_exponent",
        *exp.horizons.last().expect("validated non-empty"),
        Direction::AtLeast,
        result.cost_exponent,
        exp.attacker.alpha - 0.1,
        &point,
    )])
}

/// Replays every configured trial against the template matrix and counts
/// arm sequences that differ.
fn equivalence(exp: &Experiment) -> Result<Vec<BoundReport>> {
    if exp.attacker.strategy == Strategy::None {
        return Err(Error::Usage("equivalence needs an easy or general attacker".into()));
    }
    let mut reports = Vec::new();
    for &horizon in &exp.horizons {
        let env = exp.env.with_horizon(horizon)?;
        let mut mismatches = 0u64;
        for i in 0..exp.trials {
            let seed = exp.base_seed.wrapping_add(i as u64);
            if !equivalence_check(&env, &exp.attacker, &exp.player, horizon, seed)? {
                mismatches += 1;
            }
        }
        let stat = Stat {
            mean: mismatches as f64,
            stddev: 0.0,
            min: mismatches as f64,
            max: mismatches as f64,
            n: exp.trials,
        };
        reports.push(BoundReport::new(
            "equivalence.mismatched_trials",
            horizon,
            Direction::AtMost,
            mismatches as f64,
            0.0,
            &stat,
        ));
    }
    Ok(reports)
}
