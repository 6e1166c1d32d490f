//! Victim learners: Exp3 and a budget-robust variant with uniform exploration.
//!
//! Both share [`PlayerState`]. Plain Exp3 has `gamma == 0` and samples from
//! `w / |w|_1`. The robust variant mixes in `gamma / K` uniform mass, with
//! `gamma` growing with the assumed corruption budget `phi`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::trace::{validate_loss, ArmId, LossValue};

/// Weights are rescaled once the largest drops below this.
const RENORMALIZE_BELOW: f64 = 1e-200;

/// A probability vector over arms.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    probs: Vec<f64>,
}

impl PolicyDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::param("probs", "need at least two arms"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::param("probs", "entries must be finite and non-negative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("probs", format!("entries sum to {sum}, not 1")));
        }
        Ok(PolicyDistribution { probs })
    }

    pub fn uniform(arms: usize) -> Self {
        PolicyDistribution {
            probs: vec![1.0 / arms as f64; arms],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, arm: ArmId) -> f64 {
        self.probs[arm.0]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// The interface the harness drives each round.
pub trait Player {
    fn arms(&self) -> usize;
    fn policy(&self) -> PolicyDistribution;
    fn update(&mut self, chosen: ArmId, observed: LossValue) -> Result<()>;
}

/// Exponential-weights state.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState {
    weights: Vec<f64>,
    eta: f64,
    gamma: f64,
    phi: f64,
    round: u64,
}

impl PlayerState {
    /// Plain Exp3 with unit weights.
    pub fn exp3(arms: usize, eta: f64) -> Result<Self> {
        check_arms(arms)?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("learning rate must be positive, got {eta}")));
        }
        Ok(PlayerState {
            weights: vec![1.0; arms],
            eta,
            gamma: 0.0,
            phi: 0.0,
            round: 1,
        })
    }

    /// Robust variant sized for horizon `T` and assumed budget `phi`.
    pub fn exprb(arms: usize, horizon: u64, phi: f64) -> Result<Self> {
        check_arms(arms)?;
        if horizon == 0 {
            return Err(Error::param("horizon", "T must be at least 1"));
        }
        if !(phi >= 0.0 && phi.is_finite()) {
            return Err(Error::param("phi", format!("budget must be non-negative, got {phi}")));
        }
        let k = arms as f64;
        let t = horizon as f64;
        let ln_k = k.ln();
        let eta = (ln_k / (t * k)).sqrt();
        let gamma = ((k * ln_k / t).sqrt() + k * phi * t.ln() / t).min(0.5);
        Ok(PlayerState {
            weights: vec![1.0; arms],
            eta,
            gamma,
            phi,
            round: 1,
        })
    }

    /// Arbitrary state, mostly for tests. Weights must be positive and `gamma` in `[0, 1/2]`.
    pub fn from_parts(weights: Vec<f64>, eta: f64, gamma: f64) -> Result<Self> {
        check_arms(weights.len())?;
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::param("weights", "weights must be positive and finite"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("learning rate must be positive, got {eta}")));
        }
        if !(0.0..=0.5).contains(&gamma) {
            return Err(Error::param("gamma", format!("{gamma} is outside [0, 1/2]")));
        }
        Ok(PlayerState {
            weights,
            eta,
            gamma,
            phi: 0.0,
            round: 1,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_plain_exp3(&self) -> bool {
        self.gamma == 0.0
    }

    fn probs(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        if self.gamma == 0.0 {
            self.weights.iter().map(|w| w / total).collect()
        } else {
            let floor = self.gamma / self.weights.len() as f64;
            let scale = 1.0 - self.gamma;
            self.weights.iter().map(|w| scale * w / total + floor).collect()
        }
    }
}

impl Player for PlayerState {
    fn arms(&self) -> usize {
        self.weights.len()
    }

    fn policy(&self) -> PolicyDistribution {
        PolicyDistribution { probs: self.probs() }
    }

    /// Importance-weighted exponential update of the chosen arm only.
    ///
    /// The estimator divides by the probability the arm was sampled with, so
    /// the update must run against the same state that produced the policy.
    fn update(&mut self, chosen: ArmId, observed: LossValue) -> Result<()> {
        let arms = self.weights.len();
        let chosen = ArmId::checked(chosen.0, arms)?;
        let loss = validate_loss(observed.get())?.get();
        if loss > 0.0 {
            let p = self.probs()[chosen.0];
            let w = &mut self.weights[chosen.0];
            *w = (*w * (-self.eta * loss / p).exp()).max(f64::MIN_POSITIVE);
            let max = self.weights.iter().copied().fold(0.0, f64::max);
            if max < RENORMALIZE_BELOW {
                for w in &mut self.weights {
                    *w = (*w / max).max(f64::MIN_POSITIVE);
                }
            }
        }
        self.round += 1;
        Ok(())
    }
}

fn check_arms(arms: usize) -> Result<()> {
    if arms < 2 {
        Err(Error::param("K", format!("need at least two arms, got {arms}")))
    } else {
        Ok(())
    }
}

pub fn exp3_init(arms: usize, eta: f64) -> Result<PlayerState> {
    PlayerState::exp3(arms, eta)
}

/// `sqrt(2 ln K / (T K))`, the minimizer of `ln K / eta + eta T K / 2`.
pub fn exp3_default_eta(arms: usize, horizon: u64) -> f64 {
    default_eta(arms as f64, horizon as f64)
}

fn default_eta(arms: f64, horizon: f64) -> f64 {
    (2.0 * arms.ln() / (horizon * arms)).sqrt()
}

/// Regret bound `sqrt(2 T K ln K)` achieved by [`exp3_default_eta`].
pub fn exp3_regret_bound(arms: usize, horizon: u64) -> f64 {
    let k = arms as f64;
    (2.0 * horizon as f64 * k * k.ln()).sqrt()
}

/// `beta * T^-alpha`, the schedule giving `O(T^alpha)` regret.
pub fn exp3_lower_bound_eta(horizon: u64, alpha: f64, beta: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} is outside [1/2, 1)")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    if horizon == 0 {
        return Err(Error::param("horizon", "T must be at least 1"));
    }
    Ok(beta * (horizon as f64).powf(-alpha))
}

pub fn exprb_init(arms: usize, horizon: u64, phi: f64) -> Result<PlayerState> {
    PlayerState::exprb(arms, horizon, phi)
}

pub fn policy(state: &PlayerState) -> PolicyDistribution {
    state.policy()
}

pub fn update(state: &PlayerState, chosen: ArmId, observed: f64) -> Result<PlayerState> {
    let mut next = state.clone();
    next.update(chosen, validate_loss(observed)?)?;
    Ok(next)
}

/// Inverse-CDF draw over arms in index order. A uniform draw equal to a
/// cumulative boundary selects the lower arm; zero-mass arms are never drawn.
pub fn sample_arm<R: Rng + ?Sized>(dist: &PolicyDistribution, rng: &mut R) -> ArmId {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (a, &p) in dist.probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = a;
        if u <= cumulative {
            return ArmId(a);
        }
    }
    ArmId(last_positive)
}
