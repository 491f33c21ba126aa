//! Deterministic oracle policies. They read only their observation, so
//! their behaviour on a channel is reproducible by replay.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{AgentBackend, AgentDecision, AgentObservation, BackendError, CommonsPhase, ObservationView};
use crate::action::{Action, AsymAction, CommonsAction, SymAction};
use crate::commons::fmt_amount;
use crate::game::{AttributeSchema, Message, Payload, SuspectId, SuspectProfile};
use crate::whodunit::KnowledgeSet;

/// Width of the scripted probability vectors (mirrors top-k = 10).
pub const TOP_K: usize = 10;

fn one_hot(n: u64) -> Vec<f64> {
    let mut v = vec![0.0; TOP_K];
    v[(n % TOP_K as u64) as usize] = 1.0;
    v
}

/// Generation text in the JSON shape the prompts ask for, and one one-hot
/// vector per monitored numeral.
pub fn render_generation(action: &Action, thoughts: &str) -> (String, Vec<Vec<f64>>) {
    let (value, numerals): (serde_json::Value, Vec<u64>) = match action {
        Action::Asym(AsymAction::RequestSpecific {
            target,
            property,
            value,
        }) => (
            json!({"thoughts": thoughts, "action": 1, "character": target, "property": property, "value": value}),
            vec![*target as u64],
        ),
        Action::Asym(AsymAction::RequestBroad) => (
            json!({"thoughts": thoughts, "action": 2, "character": 0, "property": "", "value": ""}),
            vec![0],
        ),
        Action::Asym(AsymAction::Accuse { target }) => (
            json!({"thoughts": thoughts, "action": 3, "character": target}),
            vec![*target as u64],
        ),
        Action::Asym(AsymAction::Respond { answer }) => {
            (json!({"thoughts": thoughts, "action": 1, "value": answer}), vec![])
        }
        Action::Asym(AsymAction::RespondBroad {
            property,
            value,
            suspects,
        }) => (
            json!({"thoughts": thoughts, "action": 2, "value": format!("{property}-{value}"), "character": suspects}),
            suspects.iter().map(|s| *s as u64).collect(),
        ),
        Action::Sym(SymAction::Share { fact_index, .. }) => (
            json!({"thoughts": thoughts, "action": 1, "fact": fact_index + 1}),
            vec![],
        ),
        Action::Sym(SymAction::Accuse { target }) => (
            json!({"thoughts": thoughts, "action": 2, "character": target}),
            vec![*target as u64],
        ),
        Action::Sym(SymAction::Skip) => (json!({"thoughts": thoughts, "action": 3}), vec![]),
        Action::Commons(CommonsAction::Harvest { amount }) => (
            json!({"thoughts": thoughts, "amount": amount}),
            vec![amount.round() as u64],
        ),
        Action::Commons(CommonsAction::Discuss { text, amounts }) => (
            json!({"message": text}),
            amounts.iter().map(|a| a.round() as u64).collect(),
        ),
    };
    (value.to_string(), numerals.into_iter().map(one_hot).collect())
}

fn scripted(action: Action, thoughts: &str) -> AgentDecision {
    let (generation, positions) = render_generation(&action, thoughts);
    AgentDecision::new(action, generation, positions)
}

fn whodunit_view(obs: &AgentObservation) -> Result<(&KnowledgeSet, usize, &AttributeSchema), BackendError> {
    match &obs.view {
        ObservationView::Whodunit {
            knowledge,
            n_suspects,
            schema,
            ..
        } => Ok((knowledge, *n_suspects, schema)),
        _ => Err(BackendError::Unsupported("expected a deduction observation".into())),
    }
}

/// What the accuser can infer from the public channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuserBelief {
    pub candidates: BTreeSet<SuspectId>,
    /// Attributes known to match the culprit's value, per suspect.
    pub known: BTreeMap<SuspectId, BTreeSet<String>>,
    pub broadcast: BTreeSet<String>,
}

impl AccuserBelief {
    pub fn is_confirmed(&self, id: SuspectId, n_attributes: usize) -> bool {
        self.known.get(&id).is_some_and(|k| k.len() == n_attributes)
    }
}

/// Replay the channel from the accuser's point of view. Answers to specific
/// requests are read as if the requested value were the culprit's.
pub fn accuser_belief(
    knowledge: &KnowledgeSet,
    n_suspects: usize,
    schema: &AttributeSchema,
    channel: &[Message],
) -> AccuserBelief {
    let mut b = AccuserBelief {
        candidates: (1..=n_suspects as SuspectId).collect(),
        known: BTreeMap::new(),
        broadcast: BTreeSet::new(),
    };
    for m in channel {
        match &m.payload {
            Payload::Respond {
                target,
                property,
                answer,
                ..
            } => {
                if *answer {
                    b.known.entry(*target).or_default().insert(property.clone());
                } else {
                    b.candidates.remove(target);
                }
            }
            Payload::RespondBroad {
                property,
                value,
                suspects,
            } => {
                b.broadcast.insert(property.clone());
                let listed: BTreeSet<SuspectId> = suspects.iter().copied().collect();
                let binary = schema.get(property).is_some_and(|a| a.values.len() == 2);
                if knowledge.culprit_value(property) == Some(value.as_str()) {
                    b.candidates.retain(|c| listed.contains(c));
                    for c in &listed {
                        b.known.entry(*c).or_default().insert(property.clone());
                    }
                } else {
                    b.candidates.retain(|c| !listed.contains(c));
                    if binary {
                        for c in (1..=n_suspects as SuspectId).filter(|c| !listed.contains(c)) {
                            b.known.entry(c).or_default().insert(property.clone());
                        }
                    }
                }
            }
            _ => {}
        }
    }
    b
}

fn accuser_action(b: &AccuserBelief, knowledge: &KnowledgeSet, schema: &AttributeSchema) -> (AsymAction, String) {
    let n_attr = schema.len();
    if b.candidates.len() == 1 {
        let c = *b.candidates.iter().next().unwrap();
        return (AsymAction::Accuse { target: c }, "Only one character is left.".into());
    }
    if let Some(c) = b.candidates.iter().find(|c| b.is_confirmed(**c, n_attr)) {
        return (
            AsymAction::Accuse { target: *c },
            "A character matches every property.".into(),
        );
    }
    if b.candidates.is_empty() {
        return (
            AsymAction::RequestBroad,
            "No candidate is consistent; asking for more.".into(),
        );
    }
    if schema.names().any(|p| !b.broadcast.contains(p)) {
        return (
            AsymAction::RequestBroad,
            format!("{} candidates remain; a broad message splits them.", b.candidates.len()),
        );
    }
    let c = *b.candidates.iter().next().unwrap();
    let known = b.known.get(&c);
    let property = schema
        .names()
        .find(|p| !known.is_some_and(|k| k.contains(*p)))
        .expect("an unconfirmed candidate has an unknown property");
    let value = knowledge.culprit_value(property).unwrap_or_default();
    (
        AsymAction::RequestSpecific {
            target: c,
            property: property.to_string(),
            value: value.to_string(),
        },
        "Checking the lowest remaining candidate.".into(),
    )
}

/// Elimination oracle for the accuser.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedAccuser;

impl AgentBackend for ScriptedAccuser {
    fn decide(&mut self, obs: &AgentObservation) -> Result<AgentDecision, BackendError> {
        let (knowledge, n, schema) = whodunit_view(obs)?;
        let belief = accuser_belief(knowledge, n, schema, &obs.channel);
        let (action, thoughts) = accuser_action(&belief, knowledge, schema);
        Ok(scripted(Action::Asym(action), &thoughts))
    }
}

/// The broad message that most evenly refines the partition of suspects
/// induced by earlier broad messages. Returns `(property, value, ids)`.
pub fn intel_broad_choice(
    suspects: &[SuspectProfile],
    schema: &AttributeSchema,
    channel: &[Message],
) -> (String, String, Vec<SuspectId>) {
    let prior: Vec<(&str, BTreeSet<SuspectId>)> = channel
        .iter()
        .filter_map(|m| match &m.payload {
            Payload::RespondBroad { property, suspects, .. } => {
                Some((property.as_str(), suspects.iter().copied().collect()))
            }
            _ => None,
        })
        .collect();
    let mut cells: BTreeMap<Vec<bool>, Vec<&SuspectProfile>> = BTreeMap::new();
    for s in suspects {
        let sig = prior.iter().map(|(_, l)| l.contains(&s.id)).collect();
        cells.entry(sig).or_default().push(s);
    }
    let used: BTreeSet<&str> = prior.iter().map(|(p, _)| *p).collect();
    let fresh: Vec<_> = schema
        .attributes()
        .iter()
        .filter(|a| !used.contains(a.name.as_str()))
        .collect();
    let pool: Vec<_> = if fresh.is_empty() {
        schema.attributes().iter().collect()
    } else {
        fresh
    };

    let mut best: Option<(usize, &str, &str)> = None;
    for attr in pool {
        for value in &attr.values {
            let score: usize = cells
                .values()
                .map(|cell| {
                    let a = cell.iter().filter(|s| s.matches(&attr.name, value)).count();
                    let b = cell.len() - a;
                    a * a + b * b
                })
                .sum();
            if best.is_none_or(|(s, _, _)| score < s) {
                best = Some((score, &attr.name, value));
            }
        }
    }
    let (_, p, v) = best.expect("schema is non-empty");
    let ids = suspects.iter().filter(|s| s.matches(p, v)).map(|s| s.id).collect();
    (p.to_string(), v.to_string(), ids)
}

/// Truthful intel: answers specific requests, otherwise broadcasts.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedIntel;

impl AgentBackend for ScriptedIntel {
    fn decide(&mut self, obs: &AgentObservation) -> Result<AgentDecision, BackendError> {
        let (knowledge, _, schema) = whodunit_view(obs)?;
        let table = knowledge
            .suspect_table
            .as_deref()
            .ok_or_else(|| BackendError::Unsupported("intel needs the suspect table".into()))?;
        if let Some(Payload::RequestSpecific {
            target,
            property,
            value,
        }) = obs.channel.last().map(|m| &m.payload)
        {
            let answer = table.iter().any(|s| s.id == *target && s.matches(property, value));
            return Ok(scripted(
                Action::Asym(AsymAction::Respond { answer }),
                "Answering the question from the table.",
            ));
        }
        let (property, value, suspects) = intel_broad_choice(table, schema, &obs.channel);
        Ok(scripted(
            Action::Asym(AsymAction::RespondBroad {
                property,
                value,
                suspects,
            }),
            "Sharing the most even split.",
        ))
    }
}

/// Symmetric-variant oracle.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedPlayer;

impl AgentBackend for ScriptedPlayer {
    fn decide(&mut self, obs: &AgentObservation) -> Result<AgentDecision, BackendError> {
        let (knowledge, _, _) = whodunit_view(obs)?;
        let table = knowledge
            .suspect_table
            .as_deref()
            .ok_or_else(|| BackendError::Unsupported("players need the suspect table".into()))?;
        let shared: Vec<(&str, &str)> = obs
            .channel
            .iter()
            .filter_map(|m| match &m.payload {
                Payload::Share { property, value, .. } => Some((property.as_str(), value.as_str())),
                _ => None,
            })
            .collect();
        let public: Vec<&SuspectProfile> = table
            .iter()
            .filter(|s| shared.iter().all(|(p, v)| s.matches(p, v)))
            .collect();
        if public.len() == 1 {
            return Ok(scripted(
                Action::Sym(SymAction::Accuse { target: public[0].id }),
                "The shared facts leave a single character.",
            ));
        }
        for (i, (p, v)) in knowledge.culprit_facts.iter().enumerate() {
            if shared.iter().any(|(sp, _)| sp == p) {
                continue;
            }
            let remaining = public.iter().filter(|s| s.matches(p, v)).count();
            if remaining < public.len() {
                return Ok(scripted(
                    Action::Sym(SymAction::Share {
                        fact_index: i,
                        property: p.clone(),
                        value: v.clone(),
                    }),
                    "This fact narrows the candidates.",
                ));
            }
        }
        Ok(scripted(Action::Sym(SymAction::Skip), "Nothing useful to add."))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommonsPolicy {
    /// Harvest `stock / (2 n)`, which keeps the stock at its cap.
    #[default]
    Sustainable,
    /// Harvest `stock / n`.
    Greedy,
}

#[derive(Debug, Clone, Copy)]
pub struct ScriptedFisher {
    pub policy: CommonsPolicy,
}

impl ScriptedFisher {
    pub fn new(policy: CommonsPolicy) -> Self {
        Self { policy }
    }
}

fn my_last_catch(obs: &AgentObservation) -> f64 {
    obs.channel
        .iter()
        .rev()
        .find_map(|m| match &m.payload {
            Payload::Harvest { amounts, .. } => amounts.iter().find(|(n, _)| *n == obs.agent).map(|(_, a)| *a),
            _ => None,
        })
        .unwrap_or(0.0)
}

impl AgentBackend for ScriptedFisher {
    fn decide(&mut self, obs: &AgentObservation) -> Result<AgentDecision, BackendError> {
        let ObservationView::Commons {
            stock, n_agents, phase, ..
        } = &obs.view
        else {
            return Err(BackendError::Unsupported("expected a commons observation".into()));
        };
        let n = *n_agents as f64;
        Ok(match phase {
            CommonsPhase::Harvest => {
                let amount = match self.policy {
                    CommonsPolicy::Sustainable => stock / (2.0 * n),
                    CommonsPolicy::Greedy => stock / n,
                };
                scripted(Action::Commons(CommonsAction::Harvest { amount }), "Harvest by policy.")
            }
            CommonsPhase::Discussion => {
                let caught = my_last_catch(obs);
                let text = format!("I caught {} fish this round.", fmt_amount(caught));
                scripted(
                    Action::Commons(CommonsAction::Discuss {
                        text,
                        amounts: vec![caught],
                    }),
                    "",
                )
            }
        })
    }
}
