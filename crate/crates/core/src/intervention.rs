//! Trigger evaluation under per-role caps and the state modifications a
//! trigger causes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commons::CommonsState;
use crate::game::Role;
use crate::whodunit::WhodunitState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterventionKind {
    FullReset,
    RoundReset,
    Resample,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionPolicy {
    pub kind: InterventionKind,
    #[serde(default)]
    pub cap: u32,
    /// Sampling temperature used when re-invoking an agent on resample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample_temperature: Option<f64>,
}

impl InterventionPolicy {
    pub fn none() -> Self {
        Self {
            kind: InterventionKind::None,
            cap: 0,
            resample_temperature: None,
        }
    }

    pub fn new(kind: InterventionKind, cap: u32) -> Self {
        Self {
            kind,
            cap,
            resample_temperature: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.kind != InterventionKind::None && self.cap > 0
    }
}

impl Default for InterventionPolicy {
    fn default() -> Self {
        Self::none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerBudget {
    pub cap: u32,
    pub used: BTreeMap<Role, u32>,
}

impl TriggerBudget {
    pub fn new(cap: u32) -> Self {
        Self {
            cap,
            used: BTreeMap::new(),
        }
    }

    pub fn used(&self, role: Role) -> u32 {
        self.used.get(&role).copied().unwrap_or(0)
    }

    pub fn remaining(&self, role: Role) -> u32 {
        self.cap.saturating_sub(self.used(role))
    }
}

/// True iff `probability < tau` and the role still has budget; a firing
/// trigger consumes one unit of the role's budget.
pub fn evaluate_trigger(probability: f64, tau: f64, budget: &mut TriggerBudget, role: Role) -> bool {
    if probability.partial_cmp(&tau) != Some(std::cmp::Ordering::Less) || budget.used(role) >= budget.cap {
        return false;
    }
    *budget.used.entry(role).or_insert(0) += 1;
    true
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterventionError {
    #[error("invalid intervention: {0}")]
    Invalid(String),
}

pub enum EnvState<'a> {
    Whodunit(&'a mut WhodunitState),
    Commons(&'a mut CommonsState),
}

/// What the caller has to do after the state was modified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterventionEffect {
    /// Game restarted from its initial state.
    Restarted,
    /// `removed` reversible messages were dropped.
    RolledBack {
        removed: usize,
    },
    /// State untouched; re-invoke the triggering agent.
    Resample,
    Ignored,
}

pub fn apply_intervention(
    kind: InterventionKind,
    state: EnvState<'_>,
) -> Result<InterventionEffect, InterventionError> {
    match (kind, state) {
        (InterventionKind::None, _) => Ok(InterventionEffect::Ignored),
        (InterventionKind::Resample, _) => Ok(InterventionEffect::Resample),
        (InterventionKind::FullReset, EnvState::Whodunit(s)) => s
            .full_reset()
            .map(|_| InterventionEffect::Restarted)
            .map_err(|e| InterventionError::Invalid(e.to_string())),
        (InterventionKind::FullReset, EnvState::Commons(_)) => Err(InterventionError::Invalid(
            "harvests are irreversible; use round-reset".into(),
        )),
        (InterventionKind::RoundReset, EnvState::Whodunit(s)) => s
            .rollback_round()
            .map(|removed| InterventionEffect::RolledBack { removed })
            .map_err(|e| InterventionError::Invalid(e.to_string())),
        (InterventionKind::RoundReset, EnvState::Commons(s)) => s
            .rollback_discussion()
            .map(|removed| InterventionEffect::RolledBack { removed })
            .map_err(|e| InterventionError::Invalid(e.to_string())),
    }
}
