//! Numerical checks of the attack guarantees against trial means.
//!
//! Each check returns [`BoundReport`]s comparing a trial mean (`lhs`) with the
//! theoretical threshold (`rhs`). Expectations are estimated from finitely many
//! trials, so every report also carries a slack of `3 * stddev / sqrt(trials)`
//! and two verdicts: raw and slack-adjusted.

use serde::Serialize;

use crate::attack::{AttackerConfig, Strategy};
use crate::config::{EtaSpec, PlayerSpec};
use crate::env::{column_totals, LossMatrix, LossSource};
use crate::error::{Error, Result};
use crate::player::PolicyDistribution;
use crate::trace::{ArmId, LOSS_TOLERANCE};

use super::run::{AggregateSummary, Experiment, HorizonAggregate, Stat};
use super::slope::loglog_slope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtLeast,
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub direction: Direction,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub satisfied: bool,
    pub satisfied_raw: bool,
    /// Set when the mean comes from fewer than two trials.
    pub high_variance: bool,
}

impl BoundReport {
    pub fn new(bound: impl Into<String>, horizon: u64, direction: Direction, lhs: f64, rhs: f64, stat: &Stat) -> Self {
        let slack = stat.slack();
        let (satisfied_raw, satisfied) = match direction {
            Direction::AtLeast => (lhs >= rhs, lhs + slack >= rhs),
            Direction::AtMost => (lhs <= rhs, lhs - slack <= rhs),
        };
        BoundReport {
            bound: bound.into(),
            horizon,
            direction,
            lhs,
            rhs,
            slack,
            satisfied,
            satisfied_raw,
            high_variance: stat.n < 2,
        }
    }
}

/// `sqrt(2 K ln K)`, the regret constant of Exp3 with the default learning rate.
pub fn default_m(arms: usize) -> f64 {
    let k = arms as f64;
    (2.0 * k * k.ln()).sqrt()
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("rho", format!("{rho} is outside (0, 1]")))
    }
}

fn check_alpha_eps(alpha: f64, epsilon: f64) -> Result<()> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} is outside [1/2, 1)")));
    }
    if !(epsilon >= 0.0 && epsilon < 1.0 - alpha) {
        return Err(Error::param("epsilon", format!("{epsilon} is outside [0, 1 - alpha)")));
    }
    Ok(())
}

fn check_m(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::param("M", format!("must be positive, got {m}")))
    }
}

fn selection_and_cost(h: &HorizonAggregate, name: &str, allowance: f64) -> [BoundReport; 2] {
    let t = h.horizon as f64;
    [
        BoundReport::new(
            format!("{name}.target_selections"),
            h.horizon,
            Direction::AtLeast,
            h.target_selections.mean,
            t - allowance,
            &h.target_selections,
        ),
        BoundReport::new(
            format!("{name}.cost"),
            h.horizon,
            Direction::AtMost,
            h.cost.mean,
            allowance,
            &h.cost,
        ),
    ]
}

/// Easy scenario: `N >= T - M T^alpha / rho` and `C <= M T^alpha / rho`.
pub fn check_thm1(h: &HorizonAggregate, rho: f64, alpha: f64, m: f64) -> Result<[BoundReport; 2]> {
    check_rho(rho)?;
    check_alpha_eps(alpha, 0.0)?;
    check_m(m)?;
    let allowance = m * (h.horizon as f64).powf(alpha) / rho;
    Ok(selection_and_cost(h, "thm1", allowance))
}

/// General attack thresholds as `(selection deficit, cost cap)`.
pub fn thm2_thresholds(horizon: u64, alpha: f64, epsilon: f64, m: f64) -> Result<(f64, f64)> {
    check_alpha_eps(alpha, epsilon)?;
    check_m(m)?;
    let t = horizon as f64;
    let a = alpha + epsilon;
    let deficit = t.powf(1.0 - a) / a + m * t.powf(1.0 - epsilon);
    Ok((deficit, deficit + t.powf(a) / a))
}

/// General attack: `N >= T - T^(1-a)/a - M T^(1-eps)` and
/// `C <= T^(1-a)/a + M T^(1-eps) + T^a/a` with `a = alpha + eps`.
pub fn check_thm2(h: &HorizonAggregate, alpha: f64, epsilon: f64, m: f64) -> Result<[BoundReport; 2]> {
    let (deficit, cap) = thm2_thresholds(h.horizon, alpha, epsilon, m)?;
    let t = h.horizon as f64;
    Ok([
        BoundReport::new(
            "thm2.target_selections",
            h.horizon,
            Direction::AtLeast,
            h.target_selections.mean,
            t - deficit,
            &h.target_selections,
        ),
        BoundReport::new("thm2.cost", h.horizon, Direction::AtMost, h.cost.mean, cap, &h.cost),
    ])
}

/// Number of rounds `t <= T` where the target's clean loss exceeds `1 - rho`.
pub fn near_max_rounds(env: &dyn LossSource, target: ArmId, rho: f64, horizon: u64) -> Result<u64> {
    check_rho(rho)?;
    let mut count = 0;
    for t in 1..=horizon {
        if env.loss(t, target)?.get() > 1.0 - rho + LOSS_TOLERANCE {
            count += 1;
        }
    }
    Ok(count)
}

/// General attack in terms of `rho`: both bounds use the allowance
/// `rho^(1/(alpha+eps-1)) + tau + M T^alpha / rho`.
#[allow(clippy::too_many_arguments)]
pub fn check_thm3(
    h: &HorizonAggregate,
    env: &dyn LossSource,
    target: ArmId,
    rho: f64,
    alpha: f64,
    epsilon: f64,
    m: f64,
) -> Result<[BoundReport; 2]> {
    check_alpha_eps(alpha, epsilon)?;
    check_m(m)?;
    let tau = near_max_rounds(env, target, rho, h.horizon)? as f64;
    let burn_in = rho.powf(1.0 / (alpha + epsilon - 1.0));
    let allowance = burn_in + tau + m * (h.horizon as f64).powf(alpha) / rho;
    Ok(selection_and_cost(h, "thm3", allowance))
}

/// Exp3 selection floor: `E[N_T(a)] >= T pi_1(a) - eta T sum_t L_t(a)` for every arm.
pub fn lemma1_bound(horizon: u64, pi1: f64, eta: f64, loss_total: f64) -> f64 {
    let t = horizon as f64;
    t * pi1 - eta * t * loss_total
}

/// Checks the Exp3 selection floor for every arm at every horizon of an unattacked run.
pub fn check_lemma1(
    agg: &AggregateSummary,
    pi1: &PolicyDistribution,
    env: &dyn LossSource,
) -> Result<Vec<BoundReport>> {
    let PlayerSpec::Exp3 { eta } = agg.player else {
        return Err(Error::Usage("the selection floor applies to plain Exp3 only".into()));
    };
    if agg.attacker.strategy != Strategy::None {
        return Err(Error::Usage("the selection floor is checked on unattacked runs".into()));
    }
    if pi1.probs().len() != env.arms() {
        return Err(Error::Usage("initial distribution does not match the arm count".into()));
    }
    let mut reports = Vec::new();
    for h in &agg.horizons {
        let eta = eta.resolve(env.arms(), h.horizon)?;
        let totals = column_totals(env, h.horizon)?;
        for (a, total) in totals.iter().enumerate() {
            let arm = ArmId(a);
            let stat = h.arm_selections(arm);
            reports.push(BoundReport::new(
                format!("lemma1.arm{a}"),
                h.horizon,
                Direction::AtLeast,
                stat.mean,
                lemma1_bound(h.horizon, pi1.prob(arm), eta, *total),
                &stat,
            ));
        }
    }
    Ok(reports)
}

/// Attack against Exp3 with `eta = beta T^-alpha` on the two-arm task where the
/// target has loss 0.5 and the other arm loss 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundSpec {
    pub alpha: f64,
    pub beta: f64,
    pub horizons: Vec<u64>,
    pub trials: usize,
    pub base_seed: u64,
    pub strategy: Strategy,
}

impl LowerBoundSpec {
    pub fn new(alpha: f64, horizons: Vec<u64>, trials: usize) -> Self {
        LowerBoundSpec {
            alpha,
            beta: 1.0,
            horizons,
            trials,
            base_seed: 0,
            strategy: Strategy::Easy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundResult {
    pub aggregate: AggregateSummary,
    /// Fitted log-log slope of mean cost against `T`.
    pub cost_exponent: f64,
}

/// The target arm of the lower-bound task.
pub const LOWER_BOUND_TARGET: ArmId = ArmId(1);

pub fn lower_bound_env(horizon: u64) -> Result<LossMatrix> {
    LossMatrix::constant(vec![0.0, 0.5], horizon)
}

pub fn lower_bound_experiment(spec: &LowerBoundSpec) -> Result<LowerBoundResult> {
    if !(0.5..1.0).contains(&spec.alpha) {
        return Err(Error::param("alpha", format!("{} is outside [1/2, 1)", spec.alpha)));
    }
    let attacker = match spec.strategy {
        Strategy::None => {
            return Err(Error::Usage("the lower-bound experiment requires an attack".into()))
        }
        Strategy::Easy => AttackerConfig::easy(LOWER_BOUND_TARGET),
        Strategy::General => {
            AttackerConfig::general(LOWER_BOUND_TARGET, spec.alpha, (1.0 - spec.alpha) / 2.0)?
        }
    };
    let longest = *spec
        .horizons
        .last()
        .ok_or_else(|| Error::param("horizons", "must not be empty"))?;
    let experiment = Experiment {
        env: lower_bound_env(longest)?,
        player: PlayerSpec::Exp3 {
            eta: EtaSpec::Schedule {
                beta: spec.beta,
                alpha: spec.alpha,
            },
        },
        attacker,
        horizons: spec.horizons.clone(),
        trials: spec.trials,
        base_seed: spec.base_seed,
    };
    let aggregate = experiment.run()?;
    let cost_exponent = loglog_slope(&aggregate.cost_curve())?;
    Ok(LowerBoundResult {
        aggregate,
        cost_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TrialSummary;
    use approx::assert_abs_diff_eq;

    fn aggregate(horizon: u64, target_counts: &[u64], costs: &[f64]) -> HorizonAggregate {
        let trials = target_counts
            .iter()
            .zip(costs)
            .enumerate()
            .map(|(i, (&n, &c))| TrialSummary {
                horizon,
                selections: vec![n, horizon - n],
                total_cost: c,
                regret_template: 0.0,
                regret_clean: 0.0,
                seed: i as u64,
            })
            .collect();
        HorizonAggregate::from_trials(horizon, ArmId(0), trials)
    }

    #[test]
    fn thm1_thresholds() {
        let m = default_m(2);
        assert_abs_diff_eq!(m, (4.0 * 2f64.ln()).sqrt(), epsilon = 1e-15);
        let h = aggregate(10_000, &[9_000, 9_100], &[500.0, 520.0]);
        let [n, c] = check_thm1(&h, 0.5, 0.5, m).unwrap();
        assert_abs_diff_eq!(n.rhs, 10_000.0 - m * 100.0 / 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(c.rhs, m * 100.0 / 0.5, epsilon = 1e-9);
        assert_eq!(n.lhs, 9_050.0);
        assert_eq!(n.direction, Direction::AtLeast);
        assert_eq!(c.direction, Direction::AtMost);
    }

    #[test]
    fn thm1_trivially_satisfied() {
        let h = aggregate(1000, &[1000, 1000], &[0.0, 0.0]);
        for m in [1e-6, 1.0, 50.0] {
            let [n, c] = check_thm1(&h, 0.3, 0.5, m).unwrap();
            assert!(n.satisfied && n.satisfied_raw);
            assert!(c.satisfied && c.satisfied_raw);
        }
        assert!(check_thm1(&h, 0.0, 0.5, 1.0).is_err());
        assert!(check_thm1(&h, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn thm2_thresholds_hand_values() {
        let m = 1.7;
        let (deficit, cap) = thm2_thresholds(10_000, 0.5, 0.25, m).unwrap();
        let expect_cap = 4.0 / 3.0 * 10.0 + m * 1e3 + 4.0 / 3.0 * 1e3;
        assert_abs_diff_eq!(cap, expect_cap, epsilon = 1e-8);
        assert_abs_diff_eq!(deficit, 4.0 / 3.0 * 10.0 + m * 1e3, epsilon = 1e-8);
        assert!(thm2_thresholds(100, 0.5, 0.5, m).is_err());
    }

    #[test]
    fn thm2_m_term_shrinks_with_epsilon() {
        let t = 1_000_000u64;
        let m_term = |eps: f64| (t as f64).powf(1.0 - eps);
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.1, 0.2, 0.3, 0.4, 0.49] {
            let v = m_term(eps);
            assert!(v < last);
            last = v;
            thm2_thresholds(t, 0.5, eps, 1.0).unwrap();
        }
    }

    #[test]
    fn optimal_epsilon_cost_cap_rate() {
        // With eps = (1 - alpha)/2 the cap divided by T^((1+alpha)/2) stays bounded.
        let alpha = 0.5;
        let eps = (1.0 - alpha) / 2.0;
        let rate = (1.0 + alpha) / 2.0;
        let ratios: Vec<f64> = [1e4, 1e6, 1e8, 1e10]
            .iter()
            .map(|&t: &f64| thm2_thresholds(t as u64, alpha, eps, 1.0).unwrap().1 / t.powf(rate))
            .collect();
        for r in &ratios {
            assert!(*r < 3.0, "{ratios:?}");
        }
        // A non-optimal epsilon grows faster than that rate.
        let slow = thm2_thresholds(1e10 as u64, alpha, 0.05, 1.0).unwrap().1 / 1e10f64.powf(rate);
        assert!(slow > 10.0);
    }

    #[test]
    fn tau_scan() {
        let easy = LossMatrix::constant(vec![0.5, 0.0], 500).unwrap();
        assert_eq!(near_max_rounds(&easy, ArmId(0), 0.5, 500).unwrap(), 0);
        let hard = LossMatrix::constant(vec![1.0, 0.0], 500).unwrap();
        for rho in [1e-3, 0.25, 0.5, 1.0] {
            assert_eq!(near_max_rounds(&hard, ArmId(0), rho, 500).unwrap(), 500);
        }
        assert!(near_max_rounds(&hard, ArmId(0), 0.0, 500).is_err());
    }

    #[test]
    fn thm3_burn_in_constant() {
        assert_abs_diff_eq!(0.5f64.powf(1.0 / (0.5 + 0.25 - 1.0)), 16.0, epsilon = 1e-12);
        let env = LossMatrix::constant(vec![0.5, 0.0], 10_000).unwrap();
        let h = aggregate(10_000, &[9_000], &[800.0]);
        let [n, c] = check_thm3(&h, &env, ArmId(0), 0.5, 0.5, 0.25, 1.0).unwrap();
        assert_abs_diff_eq!(c.rhs, 16.0 + 0.0 + 200.0, epsilon = 1e-9);
        assert_abs_diff_eq!(n.rhs, 10_000.0 - 216.0, epsilon = 1e-9);
        assert!(n.high_variance);
    }

    #[test]
    fn lemma1_limits() {
        // Zero-loss arm under a uniform start: floor is T / K.
        assert_eq!(lemma1_bound(1000, 0.5, 0.1, 0.0), 500.0);
        assert_abs_diff_eq!(lemma1_bound(1000, 0.5, 1e-12, 300.0), 500.0, epsilon = 1e-6);
    }

    #[test]
    fn lemma1_requires_unattacked_exp3() {
        let env = LossMatrix::constant(vec![0.5, 0.0], 100).unwrap();
        let h = aggregate(100, &[50], &[0.0]);
        let mut agg = AggregateSummary {
            player: PlayerSpec::Exprb { phi_exponent: 0.5 },
            attacker: AttackerConfig::none(ArmId(0)),
            horizons: vec![h],
        };
        let uniform = PolicyDistribution::uniform(2);
        assert!(matches!(check_lemma1(&agg, &uniform, &env), Err(Error::Usage(_))));
        agg.player = PlayerSpec::Exp3 { eta: EtaSpec::Fixed(0.01) };
        agg.attacker = AttackerConfig::easy(ArmId(0));
        assert!(matches!(check_lemma1(&agg, &uniform, &env), Err(Error::Usage(_))));
        agg.attacker = AttackerConfig::none(ArmId(0));
        let reports = check_lemma1(&agg, &uniform, &env).unwrap();
        assert_eq!(reports.len(), 2);
        assert_abs_diff_eq!(reports[0].rhs, 50.0 - 0.01 * 100.0 * 50.0, epsilon = 1e-9);
        assert_eq!(reports[1].rhs, 50.0);
    }

    #[test]
    fn report_verdicts_use_slack() {
        let stat = Stat::from_samples(&[90.0, 110.0]);
        let r = BoundReport::new("x", 10, Direction::AtLeast, 100.0, 105.0, &stat);
        assert!(!r.satisfied_raw);
        assert!(r.satisfied);
        let r = BoundReport::new("x", 10, Direction::AtMost, 100.0, 50.0, &stat);
        assert!(!r.satisfied && !r.satisfied_raw);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["bound", "lhs", "rhs", "slack", "satisfied"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn lower_bound_rejects_no_attack() {
        let mut spec = LowerBoundSpec::new(0.5, vec![100, 1000], 2);
        spec.strategy = Strategy::None;
        assert!(matches!(lower_bound_experiment(&spec), Err(Error::Usage(_))));
        let spec = LowerBoundSpec::new(1.0, vec![100, 1000], 2);
        assert!(lower_bound_experiment(&spec).is_err());
    }
}
