//! A wrapper that corrupts a base policy's turns with a per-turn Bernoulli
//! draw and labels every turn with probability vectors drawn from a clean
//! or a corrupt entropy band.
//!
//! Draw order per turn: corruption coin, then (if corrupted) the behaviour
//! and its parameters, then one target entropy per annotated position.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scripted::{render_generation, TOP_K};
use super::{AgentBackend, AgentDecision, AgentObservation, BackendError, CommonsPhase, ObservationView};
use crate::action::{Action, AsymAction, CommonsAction, SymAction};
use crate::game::{GameSpec, Payload, Role, SuspectId};
use crate::rng::{rng_from_seed, SimRng};
use crate::uncertainty::entropy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RogueBehavior {
    HallucinateFact,
    RepeatQuery,
    WrongAccusation,
    DropKnownFact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBand {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBands {
    pub clean: EntropyBand,
    pub corrupt: EntropyBand,
}

impl Default for EntropyBands {
    fn default() -> Self {
        Self {
            clean: EntropyBand { low: 0.0, high: 0.2 },
            corrupt: EntropyBand {
                low: 0.8,
                high: (TOP_K as f64).ln(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RogueProfile {
    pub epsilon: f64,
    pub behaviors: BTreeMap<RogueBehavior, f64>,
    #[serde(default)]
    pub bands: EntropyBands,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RogueError {
    #[error("invalid rogue profile: {0}")]
    InvalidProfile(String),
}

impl RogueProfile {
    pub fn new(epsilon: f64, behaviors: &[(RogueBehavior, f64)]) -> Result<Self, RogueError> {
        let p = Self {
            epsilon,
            behaviors: behaviors.iter().copied().collect(),
            bands: EntropyBands::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RogueError> {
        let bad = |m: String| Err(RogueError::InvalidProfile(m));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if self.behaviors.values().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("negative behaviour weight".into());
        }
        let total: f64 = self.behaviors.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("behaviour weights sum to {total}"));
        }
        let max = (TOP_K as f64).ln();
        let EntropyBands { clean, corrupt } = self.bands;
        for b in [clean, corrupt] {
            if !(0.0 <= b.low && b.low <= b.high && b.high <= max + 1e-12) {
                return bad(format!("band [{}, {}] outside [0, ln {TOP_K}]", b.low, b.high));
            }
        }
        if clean.high >= corrupt.low {
            return bad("clean band must lie strictly below the corrupt band".into());
        }
        Ok(())
    }
}

/// A `TOP_K`-way distribution `[1 - x, x/(k-1), ...]` whose entropy is `h`
/// (clamped to `[0, ln k]`), with the large mass at index `top`.
pub fn distribution_with_entropy(h: f64, top: usize) -> Vec<f64> {
    let k = TOP_K;
    let make = |x: f64| {
        let mut v = vec![x / (k - 1) as f64; k];
        v[top % k] = 1.0 - x;
        v
    };
    let h_max = (k as f64).ln();
    if h <= 0.0 {
        return make(0.0);
    }
    if h >= h_max {
        return vec![1.0 / k as f64; k];
    }
    let (mut lo, mut hi) = (0.0, (k - 1) as f64 / k as f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if entropy(&make(mid)).unwrap_or(h_max) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    make(0.5 * (lo + hi))
}

/// Wraps a base backend. The rogue is given the game spec so that its
/// corruptions are guaranteed to be wrong (a hallucinated fact is false,
/// a wrong accusation misses the culprit).
pub struct SyntheticRogue<B> {
    profile: RogueProfile,
    base: B,
    rng: SimRng,
    spec: Option<GameSpec>,
    weights: Option<WeightedIndex<f64>>,
    kinds: Vec<RogueBehavior>,
}

impl<B: AgentBackend> SyntheticRogue<B> {
    pub fn new(profile: RogueProfile, base: B, seed: u64, spec: Option<GameSpec>) -> Result<Self, RogueError> {
        profile.validate()?;
        let kinds: Vec<RogueBehavior> = profile.behaviors.keys().copied().collect();
        let weights = WeightedIndex::new(profile.behaviors.values().copied()).ok();
        Ok(Self {
            profile,
            base,
            rng: rng_from_seed(seed),
            spec,
            weights,
            kinds,
        })
    }

    pub fn profile(&self) -> &RogueProfile {
        &self.profile
    }

    fn band_sample(&mut self, corrupt: bool, top: usize) -> Vec<f64> {
        let band = if corrupt {
            self.profile.bands.corrupt
        } else {
            self.profile.bands.clean
        };
        let h = if band.high > band.low {
            self.rng.gen_range(band.low..=band.high)
        } else {
            band.low
        };
        distribution_with_entropy(h, top)
    }

    fn wrong_value(&mut self, property: &str, truth: &str) -> Option<String> {
        let spec = self.spec.as_ref()?;
        let attr = spec.schema.get(property)?;
        let others: Vec<&String> = attr.values.iter().filter(|v| *v != truth).collect();
        others.choose(&mut self.rng).map(|v| v.to_string())
    }

    fn non_culprit(&mut self) -> Option<SuspectId> {
        let spec = self.spec.as_ref()?;
        let ids: Vec<SuspectId> = spec
            .suspects
            .iter()
            .map(|s| s.id)
            .filter(|id| *id != spec.culprit_id)
            .collect();
        ids.choose(&mut self.rng).copied()
    }

    fn hallucinate(&mut self, obs: &AgentObservation, base: &Action) -> Option<Action> {
        match (obs.role, base) {
            (Role::Accuser, _) => {
                let spec = self.spec.clone()?;
                let culprit = spec.culprit();
                let names: Vec<String> = spec.schema.names().map(str::to_string).collect();
                let property = names.choose(&mut self.rng)?.clone();
                let truth = culprit.value(&property)?.to_string();
                let value = self.wrong_value(&property, &truth)?;
                Some(Action::Asym(AsymAction::RequestSpecific {
                    target: spec.culprit_id,
                    property,
                    value,
                }))
            }
            (Role::Intel, Action::Asym(AsymAction::Respond { answer })) => {
                Some(Action::Asym(AsymAction::Respond { answer: !answer }))
            }
            (
                Role::Intel,
                Action::Asym(AsymAction::RespondBroad {
                    property,
                    value,
                    suspects,
                }),
            ) => {
                let n = self.spec.as_ref().map(|s| s.n_suspects()).unwrap_or(0) as SuspectId;
                let flipped = (1..=n).filter(|id| !suspects.contains(id)).collect();
                Some(Action::Asym(AsymAction::RespondBroad {
                    property: property.clone(),
                    value: value.clone(),
                    suspects: flipped,
                }))
            }
            (Role::Player, _) => {
                let (property, truth) = obs.knowledge()?.culprit_facts.first()?.clone();
                let value = self.wrong_value(&property, &truth)?;
                Some(Action::Sym(SymAction::Share {
                    fact_index: 0,
                    property,
                    value,
                }))
            }
            (Role::Fisher, _) => self.greedy(obs),
            _ => None,
        }
    }

    fn greedy(&mut self, obs: &AgentObservation) -> Option<Action> {
        let ObservationView::Commons { stock, phase, .. } = &obs.view else {
            return None;
        };
        Some(match phase {
            CommonsPhase::Harvest => Action::Commons(CommonsAction::Harvest { amount: *stock }),
            CommonsPhase::Discussion => Action::Commons(CommonsAction::Discuss {
                text: "I caught 0 fish this round.".into(),
                amounts: vec![0.0],
            }),
        })
    }

    fn repeat(&mut self, obs: &AgentObservation) -> Option<Action> {
        let own = obs.channel.iter().rev().filter(|m| m.author.is(&obs.agent));
        for m in own {
            let a = match (&m.payload, obs.role) {
                (
                    Payload::RequestSpecific {
                        target,
                        property,
                        value,
                    },
                    Role::Accuser,
                ) => Action::Asym(AsymAction::RequestSpecific {
                    target: *target,
                    property: property.clone(),
                    value: value.clone(),
                }),
                (Payload::RequestBroad, Role::Accuser) => Action::Asym(AsymAction::RequestBroad),
                (
                    Payload::RespondBroad {
                        property,
                        value,
                        suspects,
                    },
                    Role::Intel,
                ) => Action::Asym(AsymAction::RespondBroad {
                    property: property.clone(),
                    value: value.clone(),
                    suspects: suspects.clone(),
                }),
                (
                    Payload::Share {
                        fact_index,
                        property,
                        value,
                    },
                    Role::Player,
                ) => Action::Sym(SymAction::Share {
                    fact_index: *fact_index,
                    property: property.clone(),
                    value: value.clone(),
                }),
                _ => continue,
            };
            return Some(a);
        }
        match obs.role {
            Role::Accuser => Some(Action::Asym(AsymAction::RequestBroad)),
            Role::Fisher => self.greedy(obs),
            _ => None,
        }
    }

    fn wrong_accusation(&mut self, obs: &AgentObservation, base: &Action) -> Option<Action> {
        match obs.role {
            Role::Accuser => Some(Action::Asym(AsymAction::Accuse {
                target: self.non_culprit()?,
            })),
            Role::Player => Some(Action::Sym(SymAction::Accuse {
                target: self.non_culprit()?,
            })),
            _ => self.hallucinate(obs, base),
        }
    }

    /// Recall failure: the agent acts as if its most recent informative
    /// exchange had not happened.
    fn drop_known(&mut self, obs: &AgentObservation) -> Option<Action> {
        match obs.role {
            Role::Accuser => obs.channel.iter().rev().find_map(|m| match &m.payload {
                Payload::Respond {
                    target,
                    property,
                    value,
                    ..
                } => Some(Action::Asym(AsymAction::RequestSpecific {
                    target: *target,
                    property: property.clone(),
                    value: value.clone(),
                })),
                _ => None,
            }),
            Role::Player => Some(Action::Sym(SymAction::Skip)),
            Role::Fisher => self.greedy(obs),
            _ => None,
        }
    }

    fn corrupt(&mut self, behavior: RogueBehavior, obs: &AgentObservation, base: &Action) -> Option<Action> {
        match behavior {
            RogueBehavior::HallucinateFact => self.hallucinate(obs, base),
            RogueBehavior::RepeatQuery => self.repeat(obs),
            RogueBehavior::WrongAccusation => self.wrong_accusation(obs, base),
            RogueBehavior::DropKnownFact => self.drop_known(obs),
        }
    }

    fn wrap(&mut self, obs: &AgentObservation, base: AgentDecision) -> AgentDecision {
        let corrupted = self.rng.gen_bool(self.profile.epsilon);
        let mut behavior = None;
        let mut action = base.action.clone();
        if corrupted {
            if let Some(w) = &self.weights {
                let b = self.kinds[w.sample(&mut self.rng)];
                behavior = Some(b);
                if let Some(base_action) = base.action.as_ref() {
                    if let Some(a) = self.corrupt(b, obs, base_action) {
                        action = Some(a);
                    }
                }
            }
        }
        let (generation, mut positions) = match (&action, behavior) {
            (Some(a), Some(_)) => render_generation(a, "Acting on what I remember."),
            _ => (base.generation.clone(), base.positions.clone()),
        };
        if positions.is_empty() {
            positions.push(vec![1.0]);
        }
        let tops: Vec<usize> = positions
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .fold(0, |best, (i, x)| if *x > p[best] { i } else { best })
            })
            .collect();
        let positions = tops.into_iter().map(|top| self.band_sample(corrupted, top)).collect();
        AgentDecision {
            action,
            generation,
            positions,
            corruption: behavior,
        }
    }
}

impl<B: AgentBackend> AgentBackend for SyntheticRogue<B> {
    fn decide(&mut self, obs: &AgentObservation) -> Result<AgentDecision, BackendError> {
        let base = self.base.decide(obs)?;
        Ok(self.wrap(obs, base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{ScriptedAccuser, ScriptedIntel};
    use crate::game::{generate_game, Outcome, Variant};
    use crate::uncertainty::extract_features;
    use crate::whodunit::WhodunitState;

    fn profile(eps: f64, b: RogueBehavior) -> RogueProfile {
        RogueProfile::new(eps, &[(b, 1.0)]).unwrap()
    }

    #[test]
    fn entropy_targeting() {
        for h in [0.0, 0.05, 0.2, 0.8, 1.5, 2.2] {
            let p = distribution_with_entropy(h, 3);
            assert!((entropy(&p).unwrap() - h).abs() < 1e-9, "{h}");
        }
        let u = distribution_with_entropy(10.0, 0);
        assert!((entropy(&u).unwrap() - (10f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn profile_validation() {
        assert!(RogueProfile::new(1.5, &[(RogueBehavior::RepeatQuery, 1.0)]).is_err());
        assert!(RogueProfile::new(0.5, &[(RogueBehavior::RepeatQuery, 0.6)]).is_err());
        let mut p = profile(0.1, RogueBehavior::RepeatQuery);
        p.bands.clean.high = 0.9;
        assert!(p.validate().is_err());
    }

    #[test]
    fn certain_wrong_accusation_ends_turn_one() {
        let spec = generate_game(Variant::Asymmetric, 6, 31, 3).unwrap();
        let mut rogue = SyntheticRogue::new(
            profile(1.0, RogueBehavior::WrongAccusation),
            ScriptedAccuser,
            7,
            Some(spec.clone()),
        )
        .unwrap();
        let mut s = WhodunitState::asymmetric(spec);
        let d = rogue.decide(&s.observation(0)).unwrap();
        s.step(d.action.as_ref().unwrap()).unwrap();
        assert_eq!(s.outcome(), Some(Outcome::WrongAccusation));
        assert_eq!(s.turn_index(), 2);
    }

    #[test]
    fn zero_epsilon_matches_base_actions() {
        for seed in 0..20 {
            let spec = generate_game(Variant::Asymmetric, 8, 31, seed).unwrap();
            let run = |rogue: bool| {
                let mut s = WhodunitState::asymmetric(spec.clone());
                let mut acc: Box<dyn AgentBackend> = if rogue {
                    Box::new(
                        SyntheticRogue::new(
                            profile(0.0, RogueBehavior::HallucinateFact),
                            ScriptedAccuser,
                            seed,
                            Some(spec.clone()),
                        )
                        .unwrap(),
                    )
                } else {
                    Box::new(ScriptedAccuser)
                };
                let mut actions = Vec::new();
                while !s.is_terminal() {
                    let seat = s.next_agent();
                    let d = if seat == 0 {
                        acc.decide(&s.observation(0))
                    } else {
                        ScriptedIntel.decide(&s.observation(1))
                    }
                    .unwrap();
                    let a = d.action.unwrap();
                    s.step(&a).unwrap();
                    actions.push(a);
                }
                actions
            };
            assert_eq!(run(true), run(false));
        }
    }

    #[test]
    fn corruption_rate_and_band_separation() {
        let spec = generate_game(Variant::Asymmetric, 6, 31, 1).unwrap();
        let mut rogue = SyntheticRogue::new(
            profile(0.5, RogueBehavior::RepeatQuery),
            ScriptedAccuser,
            99,
            Some(spec.clone()),
        )
        .unwrap();
        let obs = WhodunitState::asymmetric(spec).observation(0);
        let (mut corrupted, mut min_c, mut max_clean) = (0, f64::INFINITY, 0.0f64);
        for _ in 0..10_000 {
            let d = rogue.decide(&obs).unwrap();
            let f = extract_features(&d.positions, 1, 0.0).unwrap();
            if d.corruption.is_some() {
                corrupted += 1;
                min_c = min_c.min(f.max_entropy);
            } else {
                max_clean = max_clean.max(f.max_entropy);
            }
        }
        let frac = corrupted as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
        assert!(min_c >= 0.8 - 1e-9 && max_clean <= 0.2 + 1e-9 && min_c > max_clean);
    }
}
