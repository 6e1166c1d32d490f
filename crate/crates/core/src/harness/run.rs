use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::attack::{AttackerConfig, Strategy, TemplateMatrix};
use crate::config::{ExperimentConfig, PlayerSpec};
use crate::env::{column_totals, LossMatrix, LossSource};
use crate::error::{Error, Result};
use crate::player::{sample_arm, Player};
use crate::trace::{ArmId, RoundRecord, TrialSummary};

/// What a trial keeps besides its summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOptions {
    pub record_trace: bool,
    /// Only meaningful together with `record_trace`.
    pub record_policy: bool,
}

impl TrialOptions {
    pub fn summary_only() -> Self {
        Self::default()
    }

    pub fn with_trace() -> Self {
        TrialOptions {
            record_trace: true,
            record_policy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub trace: Option<Vec<RoundRecord>>,
    pub summary: TrialSummary,
}

impl TrialOutput {
    pub fn arm_sequence(&self) -> Option<Vec<ArmId>> {
        self.trace.as_ref().map(|t| t.iter().map(|r| r.arm).collect())
    }
}

/// Best-in-hindsight totals for the clean and template matrices.
#[derive(Debug, Clone)]
struct Hindsight {
    clean_best: f64,
    template_best: f64,
}

impl Hindsight {
    fn compute(env: &dyn LossSource, attacker: &AttackerConfig, horizon: u64) -> Result<Self> {
        let min = |v: Vec<f64>| v.into_iter().fold(f64::INFINITY, f64::min);
        let clean_best = min(column_totals(env, horizon)?);
        let template_best = if attacker.strategy == Strategy::None {
            clean_best
        } else {
            min(column_totals(&TemplateMatrix::new(*attacker, env)?, horizon)?)
        };
        Ok(Hindsight {
            clean_best,
            template_best,
        })
    }
}

fn check_compatible(env: &dyn LossSource, player_arms: usize, attacker: &AttackerConfig, horizon: u64) -> Result<()> {
    if player_arms != env.arms() {
        return Err(Error::Usage(format!(
            "player has {player_arms} arms but the environment has {}",
            env.arms()
        )));
    }
    attacker.validate_for(env.arms())?;
    if horizon == 0 || horizon > env.horizon() {
        return Err(Error::param(
            "horizon",
            format!("cannot run {horizon} rounds on an environment of horizon {}", env.horizon()),
        ));
    }
    Ok(())
}

/// Plays `horizon` rounds of: sample from the policy, draw the clean loss,
/// let the attacker perturb it, update the player on the perturbed loss.
pub fn run_trial_with<P: Player + ?Sized>(
    env: &dyn LossSource,
    player: &mut P,
    attacker: &AttackerConfig,
    horizon: u64,
    seed: u64,
    opts: TrialOptions,
) -> Result<TrialOutput> {
    check_compatible(env, player.arms(), attacker, horizon)?;
    let hindsight = Hindsight::compute(env, attacker, horizon)?;
    play(env, player, attacker, horizon, seed, opts, &hindsight)
}

fn play<P: Player + ?Sized>(
    env: &dyn LossSource,
    player: &mut P,
    attacker: &AttackerConfig,
    horizon: u64,
    seed: u64,
    opts: TrialOptions,
    hindsight: &Hindsight,
) -> Result<TrialOutput> {
    let arms = env.arms();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selections = vec![0u64; arms];
    let mut total_cost = 0.0;
    let mut clean_incurred = 0.0;
    let mut template_incurred = 0.0;
    let mut trace = opts
        .record_trace
        .then(|| Vec::with_capacity(horizon.min(1 << 20) as usize));

    for t in 1..=horizon {
        let dist = player.policy();
        let arm = sample_arm(&dist, &mut rng);
        let clean = env.loss(t, arm)?;
        let perturbed = attacker.perturb(t, arm, clean)?;
        player.update(arm, perturbed)?;

        selections[arm.0] += 1;
        total_cost += (perturbed.get() - clean.get()).abs();
        clean_incurred += clean.get();
        template_incurred += perturbed.get();
        if let Some(trace) = trace.as_mut() {
            let policy = opts.record_policy.then(|| dist.into_vec());
            trace.push(RoundRecord::new(t, arm, clean, perturbed, policy));
        }
    }

    Ok(TrialOutput {
        trace,
        summary: TrialSummary {
            horizon,
            selections,
            total_cost,
            regret_template: template_incurred - hindsight.template_best,
            regret_clean: clean_incurred - hindsight.clean_best,
            seed,
        },
    })
}

/// Runs one trial with a freshly built player. Deterministic in `(inputs, seed)`.
pub fn run_trial(
    env: &dyn LossSource,
    player: &PlayerSpec,
    attacker: &AttackerConfig,
    horizon: u64,
    seed: u64,
    opts: TrialOptions,
) -> Result<TrialOutput> {
    let mut state = player.build(env.arms(), horizon)?;
    run_trial_with(env, &mut state, attacker, horizon, seed, opts)
}

/// Mean, sample standard deviation and range of a metric over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Stat {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Stat {
                mean: f64::NAN,
                stddev: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                n,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Keep the mean inside the observed range despite rounding.
        Stat {
            mean: mean.clamp(min, max),
            stddev: var.sqrt(),
            min,
            max,
            n,
        }
    }

    /// `3 * stddev / sqrt(n)`.
    pub fn slack(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            3.0 * self.stddev / (self.n as f64).sqrt()
        }
    }
}

/// Metrics for one horizon across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonAggregate {
    pub horizon: u64,
    pub target: ArmId,
    pub target_selections: Stat,
    pub non_target_selections: Stat,
    pub cost: Stat,
    pub regret_clean: Stat,
    pub regret_template: Stat,
    /// Ordered by trial index.
    pub trials: Vec<TrialSummary>,
}

impl HorizonAggregate {
    pub fn from_trials(horizon: u64, target: ArmId, trials: Vec<TrialSummary>) -> Self {
        let metric = |f: &dyn Fn(&TrialSummary) -> f64| {
            Stat::from_samples(&trials.iter().map(f).collect::<Vec<_>>())
        };
        HorizonAggregate {
            horizon,
            target,
            target_selections: metric(&|s| s.target_selections(target) as f64),
            non_target_selections: metric(&|s| (s.horizon - s.target_selections(target)) as f64),
            cost: metric(&|s| s.total_cost),
            regret_clean: metric(&|s| s.regret_clean),
            regret_template: metric(&|s| s.regret_template),
            trials,
        }
    }

    pub fn target_fraction(&self) -> f64 {
        self.target_selections.mean / self.horizon as f64
    }

    pub fn cost_per_round(&self) -> f64 {
        self.cost.mean / self.horizon as f64
    }

    /// Mean selection count of an arbitrary arm.
    pub fn arm_selections(&self, arm: ArmId) -> Stat {
        Stat::from_samples(
            &self
                .trials
                .iter()
                .map(|s| s.selections.get(arm.0).copied().unwrap_or(0) as f64)
                .collect::<Vec<_>>(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSummary {
    pub player: PlayerSpec,
    pub attacker: AttackerConfig,
    pub horizons: Vec<HorizonAggregate>,
}

impl AggregateSummary {
    pub fn at(&self, horizon: u64) -> Option<&HorizonAggregate> {
        self.horizons.iter().find(|h| h.horizon == horizon)
    }

    /// `(T, mean T - N_T(target))` points.
    pub fn non_target_curve(&self) -> Vec<(f64, f64)> {
        self.horizons
            .iter()
            .map(|h| (h.horizon as f64, h.non_target_selections.mean))
            .collect()
    }

    /// `(T, mean C_T)` points.
    pub fn cost_curve(&self) -> Vec<(f64, f64)> {
        self.horizons
            .iter()
            .map(|h| (h.horizon as f64, h.cost.mean))
            .collect()
    }
}

/// Everything needed to run trials, already resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub env: LossMatrix,
    pub player: PlayerSpec,
    pub attacker: AttackerConfig,
    pub horizons: Vec<u64>,
    pub trials: usize,
    pub base_seed: u64,
}

impl Experiment {
    /// Resolves a config, loading table environments relative to `base_dir`.
    pub fn from_config(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Self> {
        cfg.validate()?;
        let longest = *cfg.experiment.horizons.last().expect("validated non-empty");
        let env = cfg.environment.build(longest, base_dir)?;
        let attacker = cfg.attacker.resolve()?;
        attacker.validate_for(env.arms()).map_err(|e| Error::Config {
            field: "attacker.target_arm".into(),
            reason: e.to_string(),
        })?;
        Ok(Experiment {
            env,
            player: cfg.player,
            attacker,
            horizons: cfg.experiment.horizons.clone(),
            trials: cfg.experiment.trials,
            base_seed: cfg.experiment.base_seed,
        })
    }

    /// Trial `i` uses seed `base_seed + i`; trials run in parallel and are
    /// collected in index order.
    pub fn run(&self) -> Result<AggregateSummary> {
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        let mut horizons = Vec::with_capacity(self.horizons.len());
        for &horizon in &self.horizons {
            let env = self.env.with_horizon(horizon)?;
            check_compatible(&env, env.arms(), &self.attacker, horizon)?;
            let hindsight = Hindsight::compute(&env, &self.attacker, horizon)?;
            let trials = (0..self.trials)
                .into_par_iter()
                .map(|i| {
                    let seed = self.base_seed.wrapping_add(i as u64);
                    let mut player = self.player.build(env.arms(), horizon)?;
                    play(
                        &env,
                        &mut player,
                        &self.attacker,
                        horizon,
                        seed,
                        TrialOptions::summary_only(),
                        &hindsight,
                    )
                    .map(|out| out.summary)
                })
                .collect::<Result<Vec<_>>>()?;
            horizons.push(HorizonAggregate::from_trials(horizon, self.attacker.target, trials));
        }
        Ok(AggregateSummary {
            player: self.player,
            attacker: self.attacker,
            horizons,
        })
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateSummary> {
    Experiment::from_config(cfg, None)?.run()
}

/// Checks that attacking `env` yields the same arm sequence as playing the
/// template matrix directly, both under `seed`.
pub fn equivalence_check(
    env: &dyn LossSource,
    attacker: &AttackerConfig,
    player: &PlayerSpec,
    horizon: u64,
    seed: u64,
) -> Result<bool> {
    equivalence_check_seeds(env, attacker, player, horizon, seed, seed)
}

/// As [`equivalence_check`] but with separate seeds for the two runs.
pub fn equivalence_check_seeds(
    env: &dyn LossSource,
    attacker: &AttackerConfig,
    player: &PlayerSpec,
    horizon: u64,
    attacked_seed: u64,
    template_seed: u64,
) -> Result<bool> {
    if attacker.strategy == Strategy::None {
        return Err(Error::Usage("equivalence needs an easy or general attacker".into()));
    }
    let template = TemplateMatrix::new(*attacker, env)?;
    let attacked = run_trial(env, player, attacker, horizon, attacked_seed, TrialOptions::with_trace())?;
    let direct = run_trial(
        &template,
        player,
        &AttackerConfig::none(attacker.target),
        horizon,
        template_seed,
        TrialOptions::with_trace(),
    )?;
    Ok(attacked.arm_sequence() == direct.arm_sequence())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EtaSpec;
    use crate::player::PolicyDistribution;
    use crate::trace::LossValue;

    /// Always plays one arm.
    struct Fixed {
        arms: usize,
        arm: usize,
    }

    impl Player for Fixed {
        fn arms(&self) -> usize {
            self.arms
        }
        fn policy(&self) -> PolicyDistribution {
            let mut p = vec![0.0; self.arms];
            p[self.arm] = 1.0;
            PolicyDistribution::new(p).unwrap()
        }
        fn update(&mut self, _: ArmId, _: LossValue) -> Result<()> {
            Ok(())
        }
    }

    fn exp3() -> PlayerSpec {
        PlayerSpec::Exp3 { eta: EtaSpec::Auto }
    }

    #[test]
    fn fixed_player_no_attack() {
        let env = LossMatrix::constant(vec![0.5, 0.0], 3).unwrap();
        let mut p = Fixed { arms: 2, arm: 0 };
        let out = run_trial_with(&env, &mut p, &AttackerConfig::none(ArmId(0)), 3, 1, TrialOptions::with_trace())
            .unwrap();
        assert_eq!(out.summary.selections, vec![3, 0]);
        assert_eq!(out.summary.total_cost, 0.0);
        assert!((out.summary.regret_clean - 1.5).abs() < 1e-12);
        assert_eq!(out.trace.unwrap().len(), 3);
    }

    #[test]
    fn fixed_player_under_easy_attack() {
        let env = LossMatrix::constant(vec![0.5, 0.0], 4).unwrap();
        let mut p = Fixed { arms: 2, arm: 1 };
        let out = run_trial_with(&env, &mut p, &AttackerConfig::easy(ArmId(0)), 4, 0, TrialOptions::with_trace())
            .unwrap();
        assert_eq!(out.summary.total_cost, 4.0);
        // Template totals: arm 0 = 2, arm 1 = 4.
        assert!((out.summary.regret_template - 2.0).abs() < 1e-12);
        let trace = out.trace.unwrap();
        let resummarized = crate::trace::summarize_trace(&trace, 2, 0).unwrap();
        assert_eq!(resummarized.total_cost, out.summary.total_cost);
    }

    #[test]
    fn trial_is_deterministic() {
        let env = LossMatrix::constant(vec![0.5, 0.0], 2000).unwrap();
        let atk = AttackerConfig::easy(ArmId(0));
        let a = run_trial(&env, &exp3(), &atk, 2000, 42, TrialOptions::with_trace()).unwrap();
        let b = run_trial(&env, &exp3(), &atk, 2000, 42, TrialOptions::with_trace()).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&env, &exp3(), &atk, 2000, 43, TrialOptions::with_trace()).unwrap();
        assert_ne!(a.arm_sequence(), c.arm_sequence());
    }

    #[test]
    fn policy_recording() {
        let env = LossMatrix::constant(vec![0.5, 0.0], 10).unwrap();
        let opts = TrialOptions {
            record_trace: true,
            record_policy: true,
        };
        let out = run_trial(&env, &exp3(), &AttackerConfig::none(ArmId(0)), 10, 0, opts).unwrap();
        let trace = out.trace.unwrap();
        assert_eq!(trace[0].policy.as_deref(), Some(&[0.5, 0.5][..]));
        for r in &trace {
            let p = r.policy.as_ref().unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn incompatible_components_fail() {
        let env = LossMatrix::constant(vec![0.5, 0.0], 10).unwrap();
        let mut p = Fixed { arms: 3, arm: 0 };
        assert!(run_trial_with(&env, &mut p, &AttackerConfig::none(ArmId(0)), 10, 0, TrialOptions::default()).is_err());
        assert!(run_trial(&env, &exp3(), &AttackerConfig::easy(ArmId(2)), 10, 0, TrialOptions::default()).is_err());
        assert!(run_trial(&env, &exp3(), &AttackerConfig::easy(ArmId(0)), 11, 0, TrialOptions::default()).is_err());
    }

    #[test]
    fn single_trial_aggregate_equals_trial() {
        let exp = Experiment {
            env: LossMatrix::constant(vec![0.5, 0.0], 1000).unwrap(),
            player: exp3(),
            attacker: AttackerConfig::easy(ArmId(0)),
            horizons: vec![500, 1000],
            trials: 1,
            base_seed: 11,
        };
        let agg = exp.run().unwrap();
        for h in &agg.horizons {
            let single = run_trial(&exp.env, &exp.player, &exp.attacker, h.horizon, 11, TrialOptions::default())
                .unwrap()
                .summary;
            assert_eq!(h.trials, vec![single.clone()]);
            assert_eq!(h.target_selections.mean, single.selections[0] as f64);
            assert_eq!(h.cost.mean, single.total_cost);
            assert_eq!(h.cost.stddev, 0.0);
        }
    }

    #[test]
    fn trial_seeds_follow_base_seed() {
        let exp = Experiment {
            env: LossMatrix::constant(vec![0.5, 0.0], 300).unwrap(),
            player: exp3(),
            attacker: AttackerConfig::easy(ArmId(0)),
            horizons: vec![300],
            trials: 4,
            base_seed: 100,
        };
        let agg = exp.run().unwrap();
        let seeds: Vec<u64> = agg.horizons[0].trials.iter().map(|s| s.seed).collect();
        assert_eq!(seeds, vec![100, 101, 102, 103]);
        let h = &agg.horizons[0];
        for stat in [&h.target_selections, &h.cost, &h.regret_clean] {
            assert!(stat.min <= stat.mean && stat.mean <= stat.max);
        }
        assert_eq!(agg, exp.run().unwrap());
    }

    #[test]
    fn equivalence_and_negative_control() {
        let easy = LossMatrix::constant(vec![0.5, 0.0], 1000).unwrap();
        let hard = LossMatrix::constant(vec![1.0, 0.0], 1000).unwrap();
        let general = AttackerConfig::general(ArmId(0), 0.5, 0.25).unwrap();
        assert!(equivalence_check(&easy, &AttackerConfig::easy(ArmId(0)), &exp3(), 1000, 5).unwrap());
        assert!(equivalence_check(&hard, &general, &exp3(), 1000, 5).unwrap());
        assert!(!equivalence_check_seeds(&hard, &general, &exp3(), 1000, 5, 6).unwrap());
        assert!(equivalence_check(&hard, &AttackerConfig::none(ArmId(0)), &exp3(), 10, 0).is_err());
    }

    #[test]
    fn stat_basics() {
        let s = Stat::from_samples(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.stddev, 1.0);
        assert!((s.slack() - 3.0 / 3f64.sqrt()).abs() < 1e-15);
        let one = Stat::from_samples(&[4.0]);
        assert_eq!((one.mean, one.stddev, one.slack()), (4.0, 0.0, 0.0));
    }
}
