//! Template-based loss perturbation.
//!
//! Each strategy fixes a template loss matrix before play starts. During play
//! the attacker only sees `(t, a_t, l_t)` and replaces the loss with the
//! template entry for the chosen arm:
//!
//! * `easy`: target keeps its clean loss, every other arm gets 1.
//! * `general`: target gets `min(1 - t^(alpha + epsilon - 1), l_t)`, every other arm gets 1.
//! * `none`: identity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{LossMatrix, LossSource};
use crate::error::{Error, Result};
use crate::trace::{validate_loss, ArmId, LossValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    None,
    Easy,
    General,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::None => "none",
            Strategy::Easy => "easy",
            Strategy::General => "general",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Strategy::None),
            "easy" => Ok(Strategy::Easy),
            "general" => Ok(Strategy::General),
            other => Err(Error::param(
                "strategy",
                format!("unknown strategy {other:?} (expected none, easy or general)"),
            )),
        }
    }
}

/// Attacker parameters: target arm, assumed victim regret rate, and the
/// gap exponent slack used by the general strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackerConfig {
    pub target: ArmId,
    pub alpha: f64,
    pub epsilon: f64,
    pub strategy: Strategy,
}

impl AttackerConfig {
    pub fn none(target: ArmId) -> Self {
        AttackerConfig {
            target,
            alpha: 0.5,
            epsilon: 0.0,
            strategy: Strategy::None,
        }
    }

    pub fn easy(target: ArmId) -> Self {
        AttackerConfig {
            target,
            alpha: 0.5,
            epsilon: 0.0,
            strategy: Strategy::Easy,
        }
    }

    pub fn general(target: ArmId, alpha: f64, epsilon: f64) -> Result<Self> {
        let cfg = AttackerConfig {
            target,
            alpha,
            epsilon,
            strategy: Strategy::General,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.strategy == Strategy::General
            && !(self.epsilon >= 0.0 && self.epsilon < 1.0 - self.alpha)
        {
            return Err(Error::param(
                "epsilon",
                format!(
                    "epsilon must satisfy 0 <= epsilon < 1 - alpha = {}, got {}",
                    1.0 - self.alpha,
                    self.epsilon
                ),
            ));
        }
        Ok(())
    }

    /// Checks the target against the environment's arm count.
    pub fn validate_for(&self, arms: usize) -> Result<()> {
        self.validate()?;
        ArmId::checked(self.target.0, arms).map(|_| ())
    }

    /// Perturbed loss shown to the player this round.
    pub fn perturb(&self, t: u64, arm: ArmId, clean: LossValue) -> Result<LossValue> {
        match self.strategy {
            Strategy::None => Ok(no_attack_perturb(t, arm, clean)),
            Strategy::Easy => Ok(easy_template_perturb(self, t, arm, clean)),
            Strategy::General => general_template_perturb(self, t, arm, clean),
        }
    }

    /// `t^(alpha + epsilon - 1)`, the target's guaranteed margin at round `t`.
    pub fn margin(&self, t: u64) -> Result<f64> {
        if t < 1 {
            return Err(Error::param("t", "rounds are 1-based"));
        }
        Ok(((self.alpha + self.epsilon - 1.0) * (t as f64).ln()).exp())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.5..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("{alpha} is outside [1/2, 1)")))
    }
}

pub fn no_attack_perturb(_t: u64, _arm: ArmId, clean: LossValue) -> LossValue {
    clean
}

pub fn easy_template_perturb(cfg: &AttackerConfig, _t: u64, arm: ArmId, clean: LossValue) -> LossValue {
    if arm == cfg.target {
        clean
    } else {
        LossValue::MAX
    }
}

pub fn general_template_perturb(
    cfg: &AttackerConfig,
    t: u64,
    arm: ArmId,
    clean: LossValue,
) -> Result<LossValue> {
    let margin = cfg.margin(t)?;
    if arm == cfg.target {
        let capped = (1.0 - margin).max(0.0).min(clean.get());
        validate_loss(capped)
    } else {
        Ok(LossValue::MAX)
    }
}

/// Cost-minimizing slack `(1 - alpha) / 2`.
pub fn optimal_epsilon(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((1.0 - alpha) / 2.0)
}

/// Template entry at `(t, a)`, reading the clean loss from `env`.
pub fn template_loss(
    cfg: &AttackerConfig,
    env: &dyn LossSource,
    t: u64,
    arm: ArmId,
) -> Result<LossValue> {
    if cfg.strategy == Strategy::None {
        return Err(Error::Usage("the identity attacker has no template".into()));
    }
    let clean = env.loss(t, arm)?;
    cfg.perturb(t, arm, clean)
}

/// The full template matrix as a loss source.
#[derive(Clone, Copy)]
pub struct TemplateMatrix<'a> {
    cfg: AttackerConfig,
    env: &'a dyn LossSource,
}

impl<'a> TemplateMatrix<'a> {
    pub fn new(cfg: AttackerConfig, env: &'a dyn LossSource) -> Result<Self> {
        if cfg.strategy == Strategy::None {
            return Err(Error::Usage("the identity attacker has no template".into()));
        }
        cfg.validate_for(env.arms())?;
        Ok(TemplateMatrix { cfg, env })
    }

    /// Copies the template into a dense table environment.
    pub fn materialize(&self) -> Result<LossMatrix> {
        let rows = (1..=self.env.horizon())
            .map(|t| {
                (0..self.env.arms())
                    .map(|a| self.loss(t, ArmId(a)).map(LossValue::get))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        LossMatrix::table(rows)
    }
}

impl LossSource for TemplateMatrix<'_> {
    fn arms(&self) -> usize {
        self.env.arms()
    }

    fn horizon(&self) -> u64 {
        self.env.horizon()
    }

    fn loss(&self, t: u64, arm: ArmId) -> Result<LossValue> {
        template_loss(&self.cfg, self.env, t, arm)
    }
}
