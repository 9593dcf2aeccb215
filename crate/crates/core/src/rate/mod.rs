//! Bit-cost estimation for sets of quantized coefficient levels.
//!
//! Two estimators are provided: a per-coefficient model built from a linear
//! term plus a logistic term (`log`), and a model driven by block statistics
//! (`stat`). Both consume integer levels; zero levels carry no rate.

mod fit;
mod stats;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::block::LevelBlock;
use crate::error::{Error, Result};

pub use fit::{
    fit_params, mean_relative_error, read_samples, write_samples, RateSample, LM_MAX_ITERATIONS,
    LM_TOLERANCE,
};
pub use stats::{
    binary_entropy, block_scan, compute_stats, locate, CoeffStats, StatAccumulator, SUBBLOCK,
    ZIGZAG_4X4,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModelKind {
    Log,
    Stat,
}

impl fmt::Display for RateModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateModelKind::Log => "log",
            RateModelKind::Stat => "stat",
        })
    }
}

impl FromStr for RateModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(RateModelKind::Log),
            "stat" => Ok(RateModelKind::Stat),
            _ => Err(Error::InvalidParameter(format!("unknown rate model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModelParams {
    pub model_kind: RateModelKind,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl RateModelParams {
    /// Trained defaults for the logistic model.
    pub const LOG_DEFAULT: RateModelParams = RateModelParams {
        model_kind: RateModelKind::Log,
        alpha: 2.410,
        beta: 4.425,
        gamma: 0.036,
        delta: 9.427,
    };

    /// Trained defaults for the statistics model.
    pub const STAT_DEFAULT: RateModelParams = RateModelParams {
        model_kind: RateModelKind::Stat,
        alpha: 1.096,
        beta: 1.747,
        gamma: 6.275,
        delta: 1.346,
    };

    pub fn default_for(kind: RateModelKind) -> Self {
        match kind {
            RateModelKind::Log => Self::LOG_DEFAULT,
            RateModelKind::Stat => Self::STAT_DEFAULT,
        }
    }

    pub fn new(
        model_kind: RateModelKind,
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
    ) -> Result<Self> {
        let p = Self {
            model_kind,
            alpha,
            beta,
            gamma,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite rate model parameter in {self:?}"
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let p: Self = serde_json::from_str(&text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Bits for a full block of levels with this model.
    pub fn estimate_block_bits(&self, levels: &LevelBlock) -> f64 {
        match self.model_kind {
            RateModelKind::Log => levels
                .as_slice()
                .iter()
                .filter(|&&l| l != 0)
                .map(|&l| log_term(self, l.unsigned_abs() as f64))
                .sum(),
            RateModelKind::Stat => estimate_bits_stat(levels, self),
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_term(p: &RateModelParams, magnitude: f64) -> f64 {
    p.alpha * magnitude + p.beta * logistic(p.gamma * magnitude - p.delta)
}

/// `sum_k alpha*|c_k| + beta*g(gamma*|c_k| - delta)` over strictly positive magnitudes.
pub fn estimate_bits_log(magnitudes: &[i64], params: &RateModelParams) -> Result<f64> {
    let mut bits = 0.0;
    for &m in magnitudes {
        if m <= 0 {
            return Err(Error::NonPositiveMagnitude(m));
        }
        bits += log_term(params, m as f64);
    }
    Ok(bits)
}

fn stat_bits(params: &RateModelParams, count: usize, log_sum: f64, z: u32, e: f64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    params.alpha * count as f64 + params.beta * log_sum + params.gamma * z as f64 + params.delta * e
}

/// `alpha*count + beta*L + gamma*Z + delta*E`; zero for an all-zero block.
pub fn estimate_bits_stat(levels: &LevelBlock, params: &RateModelParams) -> f64 {
    let s = compute_stats(levels);
    stat_bits(params, s.count, s.log_sum, s.last_scan_sum, s.entropy_sum)
}

/// Bit estimate of a growing coefficient set, able to price one more level.
#[derive(Debug, Clone)]
pub struct RateTracker {
    params: RateModelParams,
    state: TrackerState,
}

#[derive(Debug, Clone)]
enum TrackerState {
    Log { bits: f64 },
    Stat(StatAccumulator),
}

impl RateTracker {
    pub fn new(params: RateModelParams, block_size: usize) -> Self {
        let state = match params.model_kind {
            RateModelKind::Log => TrackerState::Log { bits: 0.0 },
            RateModelKind::Stat => TrackerState::Stat(StatAccumulator::new(block_size)),
        };
        Self { params, state }
    }

    /// Adds a level at a position not yet present.
    pub fn insert(&mut self, pos: usize, level: i32) {
        if level == 0 {
            return;
        }
        match &mut self.state {
            TrackerState::Log { bits } => {
                *bits += log_term(&self.params, level.unsigned_abs() as f64)
            }
            TrackerState::Stat(acc) => acc.insert(pos, level),
        }
    }

    pub fn bits(&self) -> f64 {
        match &self.state {
            TrackerState::Log { bits } => *bits,
            TrackerState::Stat(acc) => {
                let s = acc.with(0, 0);
                stat_bits(&self.params, s.0, s.1, s.2, s.3)
            }
        }
    }

    /// Total bits if `level` were added at `pos`.
    pub fn bits_with(&self, pos: usize, level: i32) -> f64 {
        match &self.state {
            TrackerState::Log { bits } => {
                if level == 0 {
                    *bits
                } else {
                    bits + log_term(&self.params, level.unsigned_abs() as f64)
                }
            }
            TrackerState::Stat(acc) => {
                let (c, l, z, e) = acc.with(pos, level);
                stat_bits(&self.params, c, l, z, e)
            }
        }
    }
}
