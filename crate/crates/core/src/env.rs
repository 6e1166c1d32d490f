//! Non-adaptive loss environments.
//!
//! An environment is a fixed map `(t, arm) -> loss` that never looks at the
//! player. Constant and example environments are evaluated on demand; only the
//! table kind stores a dense `T x K` array.

use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::{validate_loss, ArmId, LossValue};

/// Anything that can be queried for a loss at `(t, arm)`, with `t` 1-based.
pub trait LossSource: Sync {
    fn arms(&self) -> usize;
    fn horizon(&self) -> u64;
    fn loss(&self, t: u64, arm: ArmId) -> Result<LossValue>;
}

/// Sums each arm's loss over rounds `1..=horizon`.
pub fn column_totals(source: &dyn LossSource, horizon: u64) -> Result<Vec<f64>> {
    let arms = source.arms();
    let mut totals = vec![0.0; arms];
    for t in 1..=horizon {
        for (a, total) in totals.iter_mut().enumerate() {
            *total += source.loss(t, ArmId(a))?.get();
        }
    }
    Ok(totals)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant(Vec<LossValue>),
    /// Arm 0 has loss `1 - sqrt(T)/T`, arm 1 has loss 1.
    Example1 { first: LossValue },
    /// Row-major `T x K`.
    Table(Vec<LossValue>),
}

/// A loss environment over `K` arms and `T` rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    arms: usize,
    horizon: u64,
    kind: Kind,
}

impl LossMatrix {
    /// Every round reuses the same per-arm losses.
    pub fn constant(losses: Vec<f64>, horizon: u64) -> Result<Self> {
        if losses.len() < 2 {
            return Err(Error::param("losses", "need at least two arms"));
        }
        check_horizon(horizon)?;
        let losses = losses
            .into_iter()
            .map(validate_loss)
            .collect::<Result<Vec<_>>>()?;
        Ok(LossMatrix {
            arms: losses.len(),
            horizon,
            kind: Kind::Constant(losses),
        })
    }

    /// Two arms where the best arm beats arm 1 by `sqrt(T)` in total.
    pub fn example1(horizon: u64) -> Result<Self> {
        check_horizon(horizon)?;
        let t = horizon as f64;
        let first = validate_loss(1.0 - t.sqrt() / t)?;
        Ok(LossMatrix {
            arms: 2,
            horizon,
            kind: Kind::Example1 { first },
        })
    }

    /// Dense table, one row per round.
    pub fn table(rows: Vec<Vec<f64>>) -> Result<Self> {
        let arms = rows.first().map_or(0, Vec::len);
        if rows.is_empty() {
            return Err(Error::param("rows", "table has no rows"));
        }
        if arms < 2 {
            return Err(Error::param("rows", "need at least two arms"));
        }
        let mut data = Vec::with_capacity(rows.len() * arms);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != arms {
                return Err(Error::param(
                    "rows",
                    format!("row {} has {} entries, expected {arms}", i + 1, row.len()),
                ));
            }
            for &v in row {
                data.push(validate_loss(v)?);
            }
        }
        Ok(LossMatrix {
            arms,
            horizon: rows.len() as u64,
            kind: Kind::Table(data),
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Constant(_) => "constant",
            Kind::Example1 { .. } => "example1",
            Kind::Table(_) => "table",
        }
    }

    /// Same environment over a different horizon. Tables cannot be extended
    /// past their row count.
    pub fn with_horizon(&self, horizon: u64) -> Result<Self> {
        match &self.kind {
            Kind::Constant(l) => {
                LossMatrix::constant(l.iter().map(|v| v.get()).collect(), horizon)
            }
            Kind::Example1 { .. } => LossMatrix::example1(horizon),
            Kind::Table(_) => {
                if horizon == 0 || horizon > self.horizon {
                    Err(Error::param(
                        "horizon",
                        format!("table environment has {} rows, cannot run {horizon}", self.horizon),
                    ))
                } else {
                    let mut m = self.clone();
                    m.horizon = horizon;
                    if let Kind::Table(data) = &mut m.kind {
                        data.truncate(horizon as usize * self.arms);
                    }
                    Ok(m)
                }
            }
        }
    }

    /// Parses a headerless CSV of `T` rows by `K` columns.
    pub fn parse_csv(bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width = None;
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Ingestion {
                row,
                column: 0,
                reason: e.to_string(),
            })?;
            if record.len() == 1 && record[0].is_empty() {
                // Blank line.
                continue;
            }
            let expected = *width.get_or_insert(record.len());
            if record.len() != expected {
                return Err(Error::Ingestion {
                    row,
                    column: record.len().min(expected) + 1,
                    reason: format!("ragged row: {} columns, expected {expected}", record.len()),
                });
            }
            let mut values = Vec::with_capacity(expected);
            for (j, field) in record.iter().enumerate() {
                let column = j + 1;
                let v: f64 = field.parse().map_err(|_| Error::Ingestion {
                    row,
                    column,
                    reason: format!("cannot parse {field:?} as a number"),
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Ingestion {
                        row,
                        column,
                        reason: format!("loss {v} is outside [0, 1]"),
                    });
                }
                values.push(v);
            }
            rows.push(values);
        }
        match width {
            None => Err(Error::Ingestion {
                row: 0,
                column: 0,
                reason: "file contains no rows".into(),
            }),
            Some(w) if w < 2 => Err(Error::Ingestion {
                row: 1,
                column: 1,
                reason: format!("need at least two arm columns, found {w}"),
            }),
            Some(_) => LossMatrix::table(rows),
        }
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        LossMatrix::parse_csv(&bytes)
    }
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        Err(Error::param("horizon", "T must be at least 1"))
    } else {
        Ok(())
    }
}

impl LossSource for LossMatrix {
    fn arms(&self) -> usize {
        self.arms
    }

    fn horizon(&self) -> u64 {
        self.horizon
    }

    fn loss(&self, t: u64, arm: ArmId) -> Result<LossValue> {
        if t == 0 || t > self.horizon || arm.0 >= self.arms {
            return Err(Error::EnvironmentDomain {
                t,
                arm: arm.0,
                horizon: self.horizon,
                arms: self.arms,
            });
        }
        Ok(match &self.kind {
            Kind::Constant(l) => l[arm.0],
            Kind::Example1 { first } => {
                if arm.0 == 0 {
                    *first
                } else {
                    LossValue::MAX
                }
            }
            Kind::Table(data) => data[(t - 1) as usize * self.arms + arm.0],
        })
    }
}

pub fn make_constant_env(losses: Vec<f64>, horizon: u64) -> Result<LossMatrix> {
    LossMatrix::constant(losses, horizon)
}

pub fn make_example1_env(horizon: u64) -> Result<LossMatrix> {
    LossMatrix::example1(horizon)
}

pub fn env_loss(env: &LossMatrix, t: u64, arm: ArmId) -> Result<LossValue> {
    env.loss(t, arm)
}

pub fn load_env_csv(path: impl AsRef<Path>) -> Result<LossMatrix> {
    LossMatrix::load_csv(path)
}
