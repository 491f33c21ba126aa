//! Actions agents can take in each environment.

use serde::{Deserialize, Serialize};

use crate::game::SuspectId;

/// Actions of the asymmetric deduction variant. The first three belong to the
/// accuser, the last two to the intel agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prime", rename_all = "kebab-case")]
pub enum AsymAction {
    RequestSpecific {
        target: SuspectId,
        property: String,
        value: String,
    },
    RequestBroad,
    Accuse {
        target: SuspectId,
    },
    Respond {
        answer: bool,
    },
    RespondBroad {
        property: String,
        value: String,
        suspects: Vec<SuspectId>,
    },
}

/// Actions of the symmetric deduction variant. `Share` carries the claimed
/// fact; the environment does not check it against the agent's knowledge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prime", rename_all = "kebab-case")]
pub enum SymAction {
    Share {
        fact_index: usize,
        property: String,
        value: String,
    },
    Accuse {
        target: SuspectId,
    },
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prime", rename_all = "kebab-case")]
pub enum CommonsAction {
    Harvest { amount: f64 },
    Discuss { text: String, amounts: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum Action {
    Asym(AsymAction),
    Sym(SymAction),
    Commons(CommonsAction),
}

impl Action {
    pub fn is_accusation(&self) -> bool {
        matches!(
            self,
            Action::Asym(AsymAction::Accuse { .. }) | Action::Sym(SymAction::Accuse { .. })
        )
    }
}
