//! Per-role success-probability monitors: a polynomial ridge regressor on
//! the per-turn uncertainty features, a trigger threshold chosen by
//! validation gain, and a random baseline.

mod poly;
mod ridge;

pub use poly::{expand, monomials, n_monomials, Normalization};
pub use ridge::fit_ridge;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Role;
use crate::rng::{derive_seed, rng_from_seed, stream, SimRng};
use crate::uncertainty::{FeatureVector, Statistic};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const MAX_DEGREE: u32 = 5;
pub const TAU_STEPS: u32 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("singular system: the design matrix is rank deficient and alpha is 0")]
    SingularSystem,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// One monitored turn with its game's final success label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub features: FeatureVector,
    pub game_id: String,
    pub role: Role,
    pub label: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCorpus {
    pub rows: Vec<TrainingRow>,
}

impl TrainingCorpus {
    pub fn for_role(&self, role: Role) -> TrainingCorpus {
        TrainingCorpus {
            rows: self.rows.iter().filter(|r| r.role == role).cloned().collect(),
        }
    }

    pub fn has_both_classes(&self) -> bool {
        self.rows.iter().any(|r| r.label) && self.rows.iter().any(|r| !r.label)
    }

    /// Group rows by game, in game-id order.
    pub fn games(&self) -> Vec<ValidationGame> {
        let mut by_game: BTreeMap<&str, ValidationGame> = BTreeMap::new();
        for r in &self.rows {
            by_game
                .entry(&r.game_id)
                .or_insert_with(|| ValidationGame {
                    game_id: r.game_id.clone(),
                    success: r.label,
                    features: Vec::new(),
                })
                .features
                .push(r.features);
        }
        by_game.into_values().collect()
    }
}

/// A game as seen by threshold selection: its label and the features of
/// every monitored turn (possibly none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationGame {
    pub game_id: String,
    pub success: bool,
    pub features: Vec<FeatureVector>,
}

/// The seven non-empty statistic subsets, smaller subsets first.
pub fn feature_masks() -> Vec<Vec<Statistic>> {
    let all = Statistic::ALL;
    let mut out = Vec::new();
    for size in 1..=all.len() {
        for bits in 1u32..(1 << all.len()) {
            if bits.count_ones() as usize == size {
                out.push(
                    (0..all.len())
                        .filter(|i| bits & (1 << i) != 0)
                        .map(|i| all[i])
                        .collect(),
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorModel {
    pub role: Role,
    pub feature_mask: Vec<Statistic>,
    pub degree: u32,
    /// Per input column: the masked statistics, then the turn index.
    pub normalization: Vec<Normalization>,
    /// One weight per monomial, constant term first.
    pub weights: Vec<f64>,
    pub tau: f64,
    pub validation_gain: f64,
}

fn inputs(mask: &[Statistic], f: &FeatureVector) -> Vec<f64> {
    let mut v: Vec<f64> = mask.iter().map(|s| f.get(*s)).collect();
    v.push(f.turn_index as f64);
    v
}

impl MonitorModel {
    pub fn n_inputs(&self) -> usize {
        self.feature_mask.len() + 1
    }

    /// Unclamped regression output.
    pub fn raw_score(&self, f: &FeatureVector) -> f64 {
        let x: Vec<f64> = inputs(&self.feature_mask, f)
            .into_iter()
            .zip(&self.normalization)
            .map(|(v, n)| n.apply(v))
            .collect();
        let exps = monomials(self.n_inputs(), self.degree);
        expand(&x, &exps).iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn predict(&self, f: &FeatureVector) -> f64 {
        let s = self.raw_score(f);
        if s.is_nan() {
            0.0
        } else {
            s.clamp(0.0, 1.0)
        }
    }

    pub fn label(&self) -> String {
        let stats: Vec<&str> = self.feature_mask.iter().map(|s| s.short()).collect();
        format!("{} d{} tau {:.2}", stats.join(" "), self.degree, self.tau)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn predict_success(model: &MonitorModel, features: &FeatureVector) -> f64 {
    model.predict(features)
}

/// Fit normalization and ridge weights on the training rows; `tau` and
/// `validation_gain` are left at 0.
pub fn fit_monitor(
    train: &TrainingCorpus,
    role: Role,
    feature_mask: &[Statistic],
    degree: u32,
    alpha: f64,
) -> Result<MonitorModel, MonitorError> {
    if train.rows.is_empty() {
        return Err(MonitorError::EmptyCorpus);
    }
    if feature_mask.is_empty() {
        return Err(MonitorError::InvalidParameter("empty feature mask".into()));
    }
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(MonitorError::InvalidParameter(format!("degree {degree}")));
    }
    let raw: Vec<Vec<f64>> = train.rows.iter().map(|r| inputs(feature_mask, &r.features)).collect();
    let k = feature_mask.len() + 1;
    let normalization: Vec<Normalization> = (0..k)
        .map(|j| Normalization::fit(raw.iter().map(|r| r[j])).expect("non-empty"))
        .collect();
    let exps = monomials(k, degree);
    let design: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| {
            let x: Vec<f64> = r.iter().zip(&normalization).map(|(v, n)| n.apply(*v)).collect();
            expand(&x, &exps[1..])
        })
        .collect();
    let y: Vec<f64> = train.rows.iter().map(|r| if r.label { 1.0 } else { 0.0 }).collect();
    let (b, w) = fit_ridge(&design, &y, alpha)?;
    let mut weights = Vec::with_capacity(w.len() + 1);
    weights.push(b);
    weights.extend(w);
    Ok(MonitorModel {
        role,
        feature_mask: feature_mask.to_vec(),
        degree,
        normalization,
        weights,
        tau: 0.0,
        validation_gain: 0.0,
    })
}

/// Net triggered games: a failed game with any turn below `tau` counts +1,
/// a successful one -1.
fn net_triggers(min_scores: &[(bool, f64)], tau: f64) -> i64 {
    min_scores
        .iter()
        .filter(|(_, m)| *m < tau)
        .map(|(success, _)| if *success { -1 } else { 1 })
        .sum()
}

fn gain_percent(net: i64, games: usize) -> f64 {
    if games == 0 {
        0.0
    } else {
        100.0 * net as f64 / games as f64
    }
}

fn min_scores(model: &MonitorModel, games: &[ValidationGame]) -> Vec<(bool, f64)> {
    games
        .iter()
        .map(|g| {
            let m = g
                .features
                .iter()
                .map(|f| model.predict(f))
                .fold(f64::INFINITY, f64::min);
            (g.success, m)
        })
        .collect()
}

/// Gain in percentage points: `100 * (true triggers - false triggers) / games`.
pub fn validation_gain(model: &MonitorModel, tau: f64, games: &[ValidationGame]) -> f64 {
    gain_percent(net_triggers(&min_scores(model, games), tau), games.len())
}

pub fn tau_grid() -> impl Iterator<Item = f64> {
    (0..=TAU_STEPS).map(|k| k as f64 / TAU_STEPS as f64)
}

/// Best threshold for fixed per-game minima; ties go to the lower tau.
fn best_tau(scores: &[(bool, f64)]) -> (f64, i64) {
    let mut best = (0.0, i64::MIN);
    for tau in tau_grid() {
        let net = net_triggers(scores, tau);
        if net > best.1 {
            best = (tau, net);
        }
    }
    best
}

/// Outcome of the exhaustive search. `ranked` holds every
/// `(degree, mask)` cell at its best threshold, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: MonitorModel,
    pub ranked: Vec<MonitorModel>,
}

impl GridResult {
    pub fn second_best(&self) -> Option<&MonitorModel> {
        self.ranked.get(1)
    }

    pub fn worst(&self) -> Option<&MonitorModel> {
        self.ranked.last()
    }
}

/// Search degree 1..=5 × the seven masks × tau in {0.00, ..., 1.00}.
/// Ties prefer lower degree, then fewer features, then lower tau.
pub fn grid_search(
    train: &TrainingCorpus,
    validation: &[ValidationGame],
    role: Role,
    alpha: f64,
) -> Result<GridResult, MonitorError> {
    if train.rows.is_empty() || validation.is_empty() {
        return Err(MonitorError::EmptyCorpus);
    }
    let mut cells = Vec::new();
    for degree in 1..=MAX_DEGREE {
        for (mi, mask) in feature_masks().into_iter().enumerate() {
            cells.push((degree, mi, mask));
        }
    }
    let fitted: Vec<Result<(MonitorModel, i64, usize), MonitorError>> = cells
        .par_iter()
        .map(|(degree, mi, mask)| {
            let mut model = fit_monitor(train, role, mask, *degree, alpha)?;
            let (tau, net) = best_tau(&min_scores(&model, validation));
            model.tau = tau;
            model.validation_gain = gain_percent(net, validation.len());
            Ok((model, net, *mi))
        })
        .collect();
    let mut scored = Vec::with_capacity(fitted.len());
    for f in fitted {
        scored.push(f?);
    }
    // Stable sort on net gain keeps the (degree, mask size, mask, tau)
    // enumeration order among ties.
    scored.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(a.0.degree.cmp(&b.0.degree))
            .then(a.0.feature_mask.len().cmp(&b.0.feature_mask.len()))
            .then(a.2.cmp(&b.2))
    });
    let ranked: Vec<MonitorModel> = scored.into_iter().map(|(m, _, _)| m).collect();
    Ok(GridResult {
        best: ranked[0].clone(),
        ranked,
    })
}

/// Produces the score compared against the threshold on a monitored turn.
pub trait TurnMonitor: Send {
    /// `(score, tau)` for a monitored role, `None` when the role has no
    /// monitor.
    fn assess(&mut self, role: Role, features: &FeatureVector) -> Option<(f64, f64)>;
}

#[derive(Debug, Clone, Default)]
pub struct ModelMonitor {
    pub models: BTreeMap<Role, MonitorModel>,
}

impl ModelMonitor {
    pub fn new(models: impl IntoIterator<Item = MonitorModel>) -> Self {
        Self {
            models: models.into_iter().map(|m| (m.role, m)).collect(),
        }
    }
}

impl TurnMonitor for ModelMonitor {
    fn assess(&mut self, role: Role, features: &FeatureVector) -> Option<(f64, f64)> {
        self.models.get(&role).map(|m| (m.predict(features), m.tau))
    }
}

/// Triggers each monitored turn independently with probability `p`: the
/// score is a uniform draw on `[0, 1)` compared against `tau = p`.
#[derive(Debug, Clone)]
pub struct RandomMonitor {
    pub p: f64,
    roles: Option<Vec<Role>>,
    rng: SimRng,
}

pub fn random_monitor(p: f64, seed: u64) -> Result<RandomMonitor, MonitorError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MonitorError::InvalidParameter(format!("p = {p}")));
    }
    Ok(RandomMonitor {
        p,
        roles: None,
        rng: rng_from_seed(seed),
    })
}

impl RandomMonitor {
    pub fn for_roles(mut self, roles: Vec<Role>) -> Self {
        self.roles = Some(roles);
        self
    }

    pub fn fires(&mut self) -> bool {
        self.rng.gen::<f64>() < self.p
    }
}

impl TurnMonitor for RandomMonitor {
    fn assess(&mut self, role: Role, _features: &FeatureVector) -> Option<(f64, f64)> {
        if self.roles.as_ref().is_some_and(|r| !r.contains(&role)) {
            return None;
        }
        Some((self.rng.gen::<f64>(), self.p))
    }
}

/// Pick `p` on the validation games by the same gain criterion. Each game
/// gets its own seeded stream of uniform draws, shared across all `p`.
pub fn calibrate_random(validation: &[ValidationGame], seed: u64) -> (f64, f64) {
    let scores: Vec<(bool, f64)> = validation
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = rng_from_seed(derive_seed(seed, stream::MONITOR, i as u64));
            let m = (0..g.features.len())
                .map(|_| rng.gen::<f64>())
                .fold(f64::INFINITY, f64::min);
            (g.success, m)
        })
        .collect();
    let (p, net) = best_tau(&scores);
    (p, gain_percent(net, validation.len()))
}
