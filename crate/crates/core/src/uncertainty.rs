//! Entropy, varentropy and kurtosis of token distributions, pooled into
//! per-turn feature vectors.
//!
//! All logarithms are natural, so entropy is in nats. Varentropy is the
//! (non-negative) variance of the surprisal `-ln p`; kurtosis is its fourth
//! central moment divided by the squared variance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the total mass of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Varentropy at or below this is treated as zero for kurtosis.
pub const DEGENERATE_VARENTROPY: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UncertaintyError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("degenerate distribution: varentropy is zero")]
    Degenerate,
}

fn validate(p: &[f64]) -> Result<(), UncertaintyError> {
    if p.is_empty() {
        return Err(UncertaintyError::InvalidDistribution("empty vector".into()));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(UncertaintyError::InvalidDistribution(format!("entry {x}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(UncertaintyError::InvalidDistribution(format!("sums to {total}")));
    }
    Ok(())
}

fn entropy_unchecked(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Central moment of the surprisal of order `k` around `h`.
fn surprisal_moment(p: &[f64], h: f64, k: i32) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| x * (-x.ln() - h).powi(k)).sum()
}

pub fn entropy(p: &[f64]) -> Result<f64, UncertaintyError> {
    validate(p)?;
    Ok(entropy_unchecked(p).max(0.0))
}

pub fn varentropy(p: &[f64]) -> Result<f64, UncertaintyError> {
    validate(p)?;
    let h = entropy_unchecked(p);
    Ok(surprisal_moment(p, h, 2))
}

pub fn kurtosis(p: &[f64]) -> Result<f64, UncertaintyError> {
    validate(p)?;
    let h = entropy_unchecked(p);
    let var = surprisal_moment(p, h, 2);
    if var <= DEGENERATE_VARENTROPY {
        return Err(UncertaintyError::Degenerate);
    }
    Ok(surprisal_moment(p, h, 4) / (var * var))
}

/// Statistics of one annotated position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionStats {
    pub entropy: f64,
    pub varentropy: f64,
    pub kurtosis: f64,
}

impl PositionStats {
    /// `kurtosis_fallback` replaces the kurtosis of degenerate positions.
    pub fn compute(p: &[f64], kurtosis_fallback: f64) -> Result<Self, UncertaintyError> {
        validate(p)?;
        let h = entropy_unchecked(p);
        let var = surprisal_moment(p, h, 2);
        let kurt = if var <= DEGENERATE_VARENTROPY {
            kurtosis_fallback
        } else {
            surprisal_moment(p, h, 4) / (var * var)
        };
        Ok(Self {
            entropy: h.max(0.0),
            varentropy: var,
            kurtosis: kurt,
        })
    }
}

/// Which uncertainty statistic a monitor feature refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Entropy,
    Varentropy,
    Kurtosis,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::Entropy, Statistic::Varentropy, Statistic::Kurtosis];

    pub fn short(&self) -> &'static str {
        match self {
            Statistic::Entropy => "Ent",
            Statistic::Varentropy => "Var",
            Statistic::Kurtosis => "Kur",
        }
    }
}

/// Per-turn monitor input: the maximum of each statistic over the turn's
/// annotated positions plus the turn counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub max_entropy: f64,
    pub max_varentropy: f64,
    pub max_kurtosis: f64,
    pub turn_index: u32,
}

impl FeatureVector {
    pub fn get(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Entropy => self.max_entropy,
            Statistic::Varentropy => self.max_varentropy,
            Statistic::Kurtosis => self.max_kurtosis,
        }
    }
}

pub const DEFAULT_KURTOSIS_FALLBACK: f64 = 0.0;

/// Pool position statistics into a feature vector. Returns `None` (no
/// signal) when there are no valid positions.
pub fn extract_features(positions: &[Vec<f64>], turn_index: u32, kurtosis_fallback: f64) -> Option<FeatureVector> {
    let mut out: Option<FeatureVector> = None;
    for p in positions {
        let Ok(s) = PositionStats::compute(p, kurtosis_fallback) else {
            continue;
        };
        match out.as_mut() {
            None => {
                out = Some(FeatureVector {
                    max_entropy: s.entropy,
                    max_varentropy: s.varentropy,
                    max_kurtosis: s.kurtosis,
                    turn_index,
                })
            }
            Some(f) => {
                f.max_entropy = f.max_entropy.max(s.entropy);
                f.max_varentropy = f.max_varentropy.max(s.varentropy);
                f.max_kurtosis = f.max_kurtosis.max(s.kurtosis);
            }
        }
    }
    out
}

/// Scale a non-negative mass vector to sum to one. Returns `None` when the
/// vector carries no mass.
pub fn renormalize(mass: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = mass.iter().filter(|x| x.is_finite() && **x > 0.0).sum();
    if total <= 0.0 {
        return None;
    }
    Some(
        mass.iter()
            .map(|&x| if x.is_finite() && x > 0.0 { x / total } else { 0.0 })
            .collect(),
    )
}
