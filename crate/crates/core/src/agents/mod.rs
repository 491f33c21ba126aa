//! The agent decision contract, scripted oracle policies and the synthetic
//! rogue wrapper.

mod rogue;
mod scripted;

pub use rogue::{
    distribution_with_entropy, EntropyBand, EntropyBands, RogueBehavior, RogueError, RogueProfile, SyntheticRogue,
};
pub use scripted::{
    accuser_belief, intel_broad_choice, render_generation, AccuserBelief, CommonsPolicy, ScriptedAccuser,
    ScriptedFisher, ScriptedIntel, ScriptedPlayer, TOP_K,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Action;
use crate::game::{AttributeSchema, Message, Role};
use crate::whodunit::KnowledgeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommonsPhase {
    Harvest,
    Discussion,
}

/// Environment-specific part of an observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum ObservationView {
    Whodunit {
        knowledge: KnowledgeSet,
        n_suspects: usize,
        schema: AttributeSchema,
        agent_names: Vec<String>,
    },
    Commons {
        stock: f64,
        r0: f64,
        gamma: f64,
        round: u32,
        max_rounds: u32,
        n_agents: usize,
        phase: CommonsPhase,
    },
}

/// Everything an agent may condition on: its private knowledge, the public
/// channel and the turn counters. Never the hidden game state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentObservation {
    pub agent: String,
    pub role: Role,
    pub turn_index: u32,
    pub turn_limit: u32,
    pub channel: Vec<Message>,
    pub view: ObservationView,
}

impl AgentObservation {
    pub fn rendered_channel(&self) -> Vec<&str> {
        self.channel.iter().map(|m| m.text.as_str()).collect()
    }

    pub fn knowledge(&self) -> Option<&KnowledgeSet> {
        match &self.view {
            ObservationView::Whodunit { knowledge, .. } => Some(knowledge),
            ObservationView::Commons { .. } => None,
        }
    }
}

/// An agent's move with the text it generated and the probability vectors
/// at its critical positions. `action == None` marks a malformed
/// generation that the harness turns into a skip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub action: Option<Action>,
    pub generation: String,
    pub positions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption: Option<RogueBehavior>,
}

impl AgentDecision {
    pub fn new(action: Action, generation: String, positions: Vec<Vec<f64>>) -> Self {
        Self {
            action: Some(action),
            generation,
            positions,
            corruption: None,
        }
    }

    pub fn malformed(generation: String, positions: Vec<Vec<f64>>) -> Self {
        Self {
            action: None,
            generation,
            positions,
            corruption: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend api error: {0}")]
    Api(String),
    #[error("observation does not fit this backend: {0}")]
    Unsupported(String),
}

pub trait AgentBackend: Send {
    fn decide(&mut self, observation: &AgentObservation) -> Result<AgentDecision, BackendError>;

    /// Re-invoke the agent on the same state after a resample trigger.
    /// `temperature` overrides the backend's sampling temperature when set.
    fn resample(
        &mut self,
        observation: &AgentObservation,
        temperature: Option<f64>,
    ) -> Result<AgentDecision, BackendError> {
        let _ = temperature;
        self.decide(observation)
    }
}

impl<B: AgentBackend + ?Sized> AgentBackend for Box<B> {
    fn decide(&mut self, observation: &AgentObservation) -> Result<AgentDecision, BackendError> {
        (**self).decide(observation)
    }

    fn resample(
        &mut self,
        observation: &AgentObservation,
        temperature: Option<f64>,
    ) -> Result<AgentDecision, BackendError> {
        (**self).resample(observation, temperature)
    }
}

/// Scripted backend for a role.
pub fn scripted_for(role: Role, commons_policy: CommonsPolicy) -> Box<dyn AgentBackend> {
    match role {
        Role::Accuser => Box::new(ScriptedAccuser),
        Role::Intel => Box::new(ScriptedIntel),
        Role::Player => Box::new(ScriptedPlayer),
        Role::Fisher => Box::new(ScriptedFisher::new(commons_policy)),
    }
}
