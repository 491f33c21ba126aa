use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agents::{CommonsPolicy, RogueProfile};
use crate::game::{Role, Variant};
use crate::intervention::{InterventionKind, InterventionPolicy};
use crate::llm::LlmConfig;
use crate::uncertainty::DEFAULT_KURTOSIS_FALLBACK;
use crate::whodunit::{DEFAULT_FACTS_PER_AGENT, DEFAULT_SYMMETRIC_AGENTS};

use super::HarnessError;

fn default_suspects() -> usize {
    10
}
fn default_turn_limit() -> u32 {
    31
}
fn default_agents() -> usize {
    DEFAULT_SYMMETRIC_AGENTS
}
fn default_facts() -> usize {
    DEFAULT_FACTS_PER_AGENT
}
fn default_gamma() -> f64 {
    5.0
}
fn default_rounds() -> u32 {
    12
}
fn default_fishers() -> usize {
    5
}
fn default_repetitions() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum EnvironmentConfig {
    Whodunit {
        variant: Variant,
        #[serde(default = "default_suspects")]
        n_suspects: usize,
        #[serde(default = "default_turn_limit")]
        turn_limit: u32,
        /// Players in the symmetric variant.
        #[serde(default = "default_agents")]
        n_agents: usize,
        #[serde(default = "default_facts")]
        facts_per_agent: usize,
    },
    Commons {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_rounds")]
        m: u32,
        #[serde(default = "default_fishers")]
        n_agents: usize,
    },
}

impl EnvironmentConfig {
    pub fn whodunit(variant: Variant, n_suspects: usize, turn_limit: u32) -> Self {
        EnvironmentConfig::Whodunit {
            variant,
            n_suspects,
            turn_limit,
            n_agents: default_agents(),
            facts_per_agent: default_facts(),
        }
    }

    pub fn commons(n_agents: usize) -> Self {
        EnvironmentConfig::Commons {
            gamma: default_gamma(),
            m: default_rounds(),
            n_agents,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EnvironmentConfig::Whodunit { .. } => "whodunit",
            EnvironmentConfig::Commons { .. } => "commons",
        }
    }
}

/// Backend for one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    #[default]
    Scripted,
    /// A scripted fisher with an explicit harvest policy.
    ScriptedFisher {
        policy: CommonsPolicy,
    },
    /// Synthetic rogue wrapping the scripted policy of the role.
    Rogue {
        profile: RogueProfile,
    },
    Llm {
        config: LlmConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonitorSource {
    #[default]
    None,
    /// One model file per monitored role.
    Models { paths: Vec<PathBuf> },
    Random {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        roles: Option<Vec<Role>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    /// Roles without an entry use their scripted policy.
    #[serde(default)]
    pub agents: BTreeMap<Role, AgentSpec>,
    #[serde(default)]
    pub monitor: MonitorSource,
    #[serde(default)]
    pub intervention: InterventionPolicy,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub kurtosis_fallback: f64,
}

impl ExperimentConfig {
    pub fn new(environment: EnvironmentConfig) -> Self {
        Self {
            environment,
            agents: BTreeMap::new(),
            monitor: MonitorSource::None,
            intervention: InterventionPolicy::none(),
            repetitions: 1,
            seed: 0,
            parallelism: None,
            output_dir: None,
            kurtosis_fallback: DEFAULT_KURTOSIS_FALLBACK,
        }
    }

    pub fn agent(&self, role: Role) -> AgentSpec {
        self.agents.get(&role).cloned().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.parallelism == Some(0) {
            return bad("parallelism must be at least 1".into());
        }
        let roles: &[Role] = match &self.environment {
            EnvironmentConfig::Whodunit {
                variant: Variant::Asymmetric,
                ..
            } => &[Role::Accuser, Role::Intel],
            EnvironmentConfig::Whodunit {
                variant: Variant::Symmetric,
                ..
            } => &[Role::Player],
            EnvironmentConfig::Commons { .. } => &[Role::Fisher],
        };
        if let Some(role) = self.agents.keys().find(|r| !roles.contains(r)) {
            return bad(format!(
                "role {role} does not play in a {} game",
                self.environment.kind()
            ));
        }
        if matches!(self.environment, EnvironmentConfig::Commons { .. })
            && self.intervention.kind == InterventionKind::FullReset
        {
            return bad("full-reset cannot undo harvests; use round-reset".into());
        }
        if self.intervention.is_active() && self.monitor == MonitorSource::None {
            return bad("an intervention needs a monitor".into());
        }
        for spec in self.agents.values() {
            match spec {
                AgentSpec::Rogue { profile } => profile.validate().map_err(|e| HarnessError::Config(e.to_string()))?,
                AgentSpec::Llm { config } => config.validate().map_err(|e| HarnessError::Config(e.to_string()))?,
                _ => {}
            }
        }
        if let MonitorSource::Random { p, .. } = self.monitor {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("random monitor p = {p}"));
            }
        }
        Ok(())
    }
}
