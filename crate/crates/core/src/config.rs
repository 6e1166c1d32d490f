//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "environment": {"kind": "constant", "losses": [0.5, 0.0]},
//!   "player": {"name": "exp3", "eta": "auto"},
//!   "attacker": {"strategy": "easy", "target_arm": 0},
//!   "experiment": {"horizons": [1000, 10000], "trials": 10, "base_seed": 0}
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::attack::{optimal_epsilon, AttackerConfig, Strategy};
use crate::env::LossMatrix;
use crate::error::{Error, Result};
use crate::player::{exp3_default_eta, exp3_lower_bound_eta, PlayerState};
use crate::trace::ArmId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EnvSpec {
    Constant { losses: Vec<f64> },
    Example1,
    Table { path: PathBuf },
}

impl EnvSpec {
    /// Arm count, when known without touching the filesystem.
    pub fn arms_hint(&self) -> Option<usize> {
        match self {
            EnvSpec::Constant { losses } => Some(losses.len()),
            EnvSpec::Example1 => Some(2),
            EnvSpec::Table { .. } => None,
        }
    }

    /// Builds the environment for `horizon` rounds. Relative table paths resolve against `base_dir`.
    pub fn build(&self, horizon: u64, base_dir: Option<&Path>) -> Result<LossMatrix> {
        match self {
            EnvSpec::Constant { losses } => LossMatrix::constant(losses.clone(), horizon),
            EnvSpec::Example1 => LossMatrix::example1(horizon),
            EnvSpec::Table { path } => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                LossMatrix::load_csv(path)?.with_horizon(horizon)
            }
        }
    }
}

/// Exp3 learning-rate choice.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EtaSpec {
    /// `sqrt(2 ln K / (T K))`.
    #[default]
    Auto,
    Fixed(f64),
    /// `beta * T^-alpha`.
    Schedule { beta: f64, alpha: f64 },
}

impl EtaSpec {
    pub fn resolve(&self, arms: usize, horizon: u64) -> Result<f64> {
        match *self {
            EtaSpec::Auto => Ok(exp3_default_eta(arms, horizon)),
            EtaSpec::Fixed(eta) => {
                if eta > 0.0 && eta.is_finite() {
                    Ok(eta)
                } else {
                    Err(Error::config("player.eta", format!("must be positive, got {eta}")))
                }
            }
            EtaSpec::Schedule { beta, alpha } => exp3_lower_bound_eta(horizon, alpha, beta)
                .map_err(|e| Error::config("player.eta", e.to_string())),
        }
    }
}

impl Serialize for EtaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            EtaSpec::Auto => s.serialize_str("auto"),
            EtaSpec::Fixed(v) => s.serialize_f64(v),
            EtaSpec::Schedule { beta, alpha } => {
                serde_json::json!({"beta": beta, "alpha": alpha}).serialize(s)
            }
        }
    }
}

impl<'de> Deserialize<'de> for EtaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "auto" => Ok(EtaSpec::Auto),
            Value::Number(n) => Ok(EtaSpec::Fixed(n.as_f64().unwrap_or(f64::NAN))),
            Value::Object(map) => {
                let field = |k: &str| -> std::result::Result<f64, D::Error> {
                    map.get(k)
                        .and_then(Value::as_f64)
                        .ok_or_else(|| de::Error::custom(format!("eta schedule needs numeric `{k}`")))
                };
                if let Some(extra) = map.keys().find(|k| *k != "beta" && *k != "alpha") {
                    return Err(de::Error::custom(format!("unknown eta schedule key `{extra}`")));
                }
                Ok(EtaSpec::Schedule {
                    beta: field("beta")?,
                    alpha: field("alpha")?,
                })
            }
            other => Err(de::Error::custom(format!(
                "eta must be \"auto\", a number, or {{\"beta\", \"alpha\"}}; got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum PlayerSpec {
    Exp3 {
        #[serde(default)]
        eta: EtaSpec,
    },
    /// Robust variant with assumed budget `phi = T^phi_exponent`.
    Exprb { phi_exponent: f64 },
}

impl PlayerSpec {
    pub fn build(&self, arms: usize, horizon: u64) -> Result<PlayerState> {
        match *self {
            PlayerSpec::Exp3 { eta } => PlayerState::exp3(arms, eta.resolve(arms, horizon)?),
            PlayerSpec::Exprb { phi_exponent } => {
                PlayerState::exprb(arms, horizon, (horizon as f64).powf(phi_exponent))
            }
        }
    }

    pub fn is_plain_exp3(&self) -> bool {
        matches!(self, PlayerSpec::Exp3 { .. })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PlayerSpec::Exp3 { eta } => eta.resolve(2, 1).map(|_| ()),
            PlayerSpec::Exprb { phi_exponent } => {
                if phi_exponent >= 0.0 && phi_exponent.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config(
                        "player.phi_exponent",
                        format!("must be non-negative, got {phi_exponent}"),
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSpec {
    Value(f64),
    /// `(1 - alpha) / 2`.
    Optimal,
}

impl Serialize for EpsilonSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            EpsilonSpec::Value(v) => s.serialize_f64(v),
            EpsilonSpec::Optimal => s.serialize_str("optimal"),
        }
    }
}

impl<'de> Deserialize<'de> for EpsilonSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "optimal" => Ok(EpsilonSpec::Optimal),
            Value::Number(n) => Ok(EpsilonSpec::Value(n.as_f64().unwrap_or(f64::NAN))),
            other => Err(de::Error::custom(format!(
                "epsilon must be a number or \"optimal\"; got {other}"
            ))),
        }
    }
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerSpec {
    pub strategy: Strategy,
    pub target_arm: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonSpec>,
}

impl AttackerSpec {
    pub fn resolve(&self) -> Result<AttackerConfig> {
        let alpha = self.alpha;
        if !(0.5..1.0).contains(&alpha) {
            return Err(Error::config(
                "attacker.alpha",
                format!("must lie in [1/2, 1), got {alpha}"),
            ));
        }
        let epsilon = match (self.strategy, self.epsilon) {
            (_, Some(EpsilonSpec::Optimal)) => optimal_epsilon(alpha)?,
            (_, Some(EpsilonSpec::Value(v))) => v,
            (Strategy::General, None) => {
                return Err(Error::config(
                    "attacker.epsilon",
                    "required by the general strategy (number or \"optimal\")",
                ))
            }
            (_, None) => 0.0,
        };
        let cfg = AttackerConfig {
            target: ArmId(self.target_arm),
            alpha,
            epsilon,
            strategy: self.strategy,
        };
        cfg.validate().map_err(|e| match e {
            Error::Parameter { name, reason } => Error::config(format!("attacker.{name}"), reason),
            other => other,
        })?;
        Ok(cfg)
    }
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub horizons: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
}

/// Optional constants for bound checks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvSpec,
    pub player: PlayerSpec,
    pub attacker: AttackerSpec,
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(
                "<document>",
                format!("{e}"),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let exp = &self.experiment;
        if exp.horizons.is_empty() {
            return Err(Error::config("experiment.horizons", "must not be empty"));
        }
        if exp.horizons[0] == 0 {
            return Err(Error::config("experiment.horizons", "horizons must be at least 1"));
        }
        if exp.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("experiment.horizons", "must be strictly increasing"));
        }
        if exp.trials == 0 {
            return Err(Error::config("experiment.trials", "must be at least 1"));
        }
        if let EnvSpec::Constant { losses } = &self.environment {
            if losses.len() < 2 {
                return Err(Error::config("environment.losses", "need at least two arms"));
            }
            if let Some((i, v)) = losses.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(Error::config(
                    format!("environment.losses[{i}]"),
                    format!("loss {v} is outside [0, 1]"),
                ));
            }
        }
        self.player.validate()?;
        self.attacker.resolve()?;
        if let Some(arms) = self.environment.arms_hint() {
            if self.attacker.target_arm >= arms {
                return Err(Error::config(
                    "attacker.target_arm",
                    format!("arm {} does not exist in a {arms}-arm environment", self.attacker.target_arm),
                ));
            }
        }
        if let Some(v) = &self.verify {
            if let Some(rho) = v.rho {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(Error::config("verify.rho", format!("must lie in (0, 1], got {rho}")));
                }
            }
            if let Some(m) = v.m {
                if !(m > 0.0 && m.is_finite()) {
                    return Err(Error::config("verify.M", format!("must be positive, got {m}")));
                }
            }
        }
        Ok(())
    }
}
