//! The deduction game in both variants: knowledge distribution, action
//! validation, message rendering, termination and metrics.
//!
//! Message templates are part of the external interface and must stay
//! byte-for-byte stable:
//!
//! | kind             | text |
//! |------------------|------|
//! | request-specific | `Agent {NAME} has requested information: is property {P} of character {C} {V}?` |
//! | request-broad    | `Agent {NAME} has asked for general information (a broad message)` |
//! | respond          | `Agent {NAME} has responded that character {C} [is \| is not] {V} for property {P}` |
//! | respond-broad    | `Agent {NAME} has decided to return a broad message: For characters {LIST}, the property {P} is {V}` |
//! | share            | `Player {NAME} has decided to share a fact about the Winner: {P} is {V}.` |
//! | accuse           | `The winner is character {C}.` |
//! | skip             | `Player {NAME} has decided to skip their turn.` |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{Action, AsymAction, SymAction};
use crate::agents::{AgentObservation, ObservationView};
use crate::game::{
    shuffled, Author, CommunicationChannel, GameSpec, Message, Outcome, Payload, Role, RollbackTarget, SuspectId,
    SuspectProfile, Variant,
};
use crate::rng::{derive_seed, stream};
use crate::trajectory::{Trajectory, TrajectoryResult};

pub const ACCUSER_NAME: &str = "Beth";
pub const INTEL_NAME: &str = "Alex";
const PLAYER_NAMES: &[&str] = &["Alex", "Beth", "Casey", "Drew", "Emery", "Finley", "Gray", "Harper"];
pub const DEFAULT_SYMMETRIC_AGENTS: usize = 4;
pub const DEFAULT_FACTS_PER_AGENT: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhodunitError {
    #[error("illegal action: {0}")]
    IllegalAction(String),
    #[error("the game is already over")]
    GameOver,
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
    #[error("unknown value {value:?} for property {property:?}")]
    UnknownValue { property: String, value: String },
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),
}

pub fn render_request_specific(name: &str, target: SuspectId, property: &str, value: &str) -> String {
    format!("Agent {name} has requested information: is property {property} of character {target} {value}?")
}

pub fn render_request_broad(name: &str) -> String {
    format!("Agent {name} has asked for general information (a broad message)")
}

pub fn render_respond(name: &str, target: SuspectId, property: &str, value: &str, answer: bool) -> String {
    let verb = if answer { "is" } else { "is not" };
    format!("Agent {name} has responded that character {target} {verb} {value} for property {property}")
}

pub fn render_respond_broad(name: &str, suspects: &[SuspectId], property: &str, value: &str) -> String {
    let list = suspects.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ");
    format!("Agent {name} has decided to return a broad message: For characters [{list}], the property {property} is {value}")
}

pub fn render_share(name: &str, property: &str, value: &str) -> String {
    format!("Player {name} has decided to share a fact about the Winner: {property} is {value}.")
}

pub fn render_accuse(target: SuspectId) -> String {
    format!("The winner is character {target}.")
}

pub fn render_skip(name: &str) -> String {
    format!("Player {name} has decided to skip their turn.")
}

/// What an agent privately knows at the start of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeSet {
    pub role: Role,
    pub culprit_facts: Vec<(String, String)>,
    pub suspect_table: Option<Vec<SuspectProfile>>,
}

impl KnowledgeSet {
    pub fn accuser(spec: &GameSpec) -> Self {
        let culprit = spec.culprit();
        let facts = spec
            .schema
            .names()
            .map(|n| (n.to_string(), culprit.value(n).unwrap_or_default().to_string()))
            .collect();
        Self {
            role: Role::Accuser,
            culprit_facts: facts,
            suspect_table: None,
        }
    }

    pub fn intel(spec: &GameSpec) -> Self {
        Self {
            role: Role::Intel,
            culprit_facts: Vec::new(),
            suspect_table: Some(spec.suspects.clone()),
        }
    }

    pub fn culprit_value(&self, property: &str) -> Option<&str> {
        self.culprit_facts
            .iter()
            .find(|(p, _)| p == property)
            .map(|(_, v)| v.as_str())
    }
}

/// Deal disjoint true culprit facts to the players of a symmetric game.
pub fn deal_symmetric_facts(
    spec: &GameSpec,
    n_agents: usize,
    facts_per_agent: usize,
    seed: u64,
) -> Result<Vec<KnowledgeSet>, WhodunitError> {
    let needed = n_agents * facts_per_agent;
    if n_agents == 0 || needed > spec.schema.len() {
        return Err(WhodunitError::Infeasible(format!(
            "{n_agents} agents x {facts_per_agent} facts needs {needed} attributes, schema has {}",
            spec.schema.len()
        )));
    }
    let names: Vec<&str> = spec.schema.names().collect();
    let order = shuffled(&names, derive_seed(seed, stream::FACTS, 0));
    let culprit = spec.culprit();
    Ok(order
        .chunks(facts_per_agent)
        .take(n_agents)
        .map(|chunk| KnowledgeSet {
            role: Role::Player,
            culprit_facts: chunk
                .iter()
                .map(|p| (p.to_string(), culprit.value(p).unwrap_or_default().to_string()))
                .collect(),
            suspect_table: Some(spec.suspects.clone()),
        })
        .collect())
}

/// Suspect ids whose profile assigns `value` to `property`, ascending.
pub fn match_suspects(spec: &GameSpec, property: &str, value: &str) -> Result<Vec<SuspectId>, WhodunitError> {
    let attr = spec
        .schema
        .get(property)
        .ok_or_else(|| WhodunitError::UnknownProperty(property.to_string()))?;
    if !attr.values.iter().any(|v| v == value) {
        return Err(WhodunitError::UnknownValue {
            property: property.to_string(),
            value: value.to_string(),
        });
    }
    Ok(spec
        .suspects
        .iter()
        .filter(|s| s.matches(property, value))
        .map(|s| s.id)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seat {
    pub name: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub message_index: usize,
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Clone)]
pub struct WhodunitState {
    spec: GameSpec,
    seats: Vec<Seat>,
    channel: CommunicationChannel,
    knowledge: Vec<KnowledgeSet>,
    initial_knowledge: Vec<KnowledgeSet>,
    next_agent: usize,
    turn_index: u32,
    outcome: Option<Outcome>,
    accused: Option<SuspectId>,
}

impl WhodunitState {
    /// Accuser and intel, accuser moves first.
    pub fn asymmetric(spec: GameSpec) -> Self {
        let seats = vec![
            Seat {
                name: ACCUSER_NAME.into(),
                role: Role::Accuser,
            },
            Seat {
                name: INTEL_NAME.into(),
                role: Role::Intel,
            },
        ];
        let knowledge = vec![KnowledgeSet::accuser(&spec), KnowledgeSet::intel(&spec)];
        Self::with_seats(spec, seats, knowledge)
    }

    pub fn symmetric(
        spec: GameSpec,
        n_agents: usize,
        facts_per_agent: usize,
        seed: u64,
    ) -> Result<Self, WhodunitError> {
        let knowledge = deal_symmetric_facts(&spec, n_agents, facts_per_agent, seed)?;
        let seats = (0..n_agents)
            .map(|i| Seat {
                name: player_name(i),
                role: Role::Player,
            })
            .collect();
        Ok(Self::with_seats(spec, seats, knowledge))
    }

    pub fn for_spec(spec: GameSpec, n_agents: usize, facts_per_agent: usize, seed: u64) -> Result<Self, WhodunitError> {
        match spec.variant {
            Variant::Asymmetric => Ok(Self::asymmetric(spec)),
            Variant::Symmetric => Self::symmetric(spec, n_agents, facts_per_agent, seed),
        }
    }

    fn with_seats(spec: GameSpec, seats: Vec<Seat>, knowledge: Vec<KnowledgeSet>) -> Self {
        Self {
            spec,
            seats,
            channel: CommunicationChannel::new(),
            initial_knowledge: knowledge.clone(),
            knowledge,
            next_agent: 0,
            turn_index: 1,
            outcome: None,
            accused: None,
        }
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn seats(&self) -> &[Seat] {
        &self.seats
    }

    pub fn channel(&self) -> &CommunicationChannel {
        &self.channel
    }

    pub fn knowledge(&self, seat: usize) -> &KnowledgeSet {
        &self.knowledge[seat]
    }

    pub fn next_agent(&self) -> usize {
        self.next_agent
    }

    pub fn turn_index(&self) -> u32 {
        self.turn_index
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn accused(&self) -> Option<SuspectId> {
        self.accused
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    /// What the acting seat is allowed to see.
    pub fn observation(&self, seat: usize) -> AgentObservation {
        let s = &self.seats[seat];
        AgentObservation {
            agent: s.name.clone(),
            role: s.role,
            turn_index: self.turn_index,
            turn_limit: self.spec.turn_limit,
            channel: self.channel.messages().to_vec(),
            view: ObservationView::Whodunit {
                knowledge: self.knowledge[seat].clone(),
                n_suspects: self.spec.n_suspects(),
                schema: self.spec.schema.clone(),
                agent_names: self.seats.iter().map(|s| s.name.clone()).collect(),
            },
        }
    }

    fn pending_request(&self) -> Option<(SuspectId, String, String)> {
        match self.channel.messages().last().map(|m| &m.payload) {
            Some(Payload::RequestSpecific {
                target,
                property,
                value,
            }) => Some((*target, property.clone(), value.clone())),
            _ => None,
        }
    }

    fn check_property(&self, property: &str, value: &str) -> Result<(), WhodunitError> {
        if self.spec.schema.get(property).is_none() {
            return Err(WhodunitError::IllegalAction(format!("unknown property {property:?}")));
        }
        if !self.spec.schema.has_value(property, value) {
            return Err(WhodunitError::IllegalAction(format!(
                "value {value:?} is not a value of {property:?}"
            )));
        }
        Ok(())
    }

    fn check_target(&self, target: SuspectId) -> Result<(), WhodunitError> {
        if !self.spec.is_valid_suspect(target) {
            return Err(WhodunitError::IllegalAction(format!(
                "character {target} is not in 1..={}",
                self.spec.n_suspects()
            )));
        }
        Ok(())
    }

    /// Validate and render the acting seat's action without mutating state.
    fn render(&self, action: &Action) -> Result<(Message, bool), WhodunitError> {
        let seat = &self.seats[self.next_agent];
        let name = seat.name.as_str();
        let author = Author::Agent(seat.name.clone());
        let role_error = || WhodunitError::IllegalAction(format!("{} cannot take action {action:?}", seat.role));
        let msg = match (seat.role, action) {
            (
                Role::Accuser,
                Action::Asym(AsymAction::RequestSpecific {
                    target,
                    property,
                    value,
                }),
            ) => {
                self.check_target(*target)?;
                self.check_property(property, value)?;
                Message::new(
                    author,
                    render_request_specific(name, *target, property, value),
                    Payload::RequestSpecific {
                        target: *target,
                        property: property.clone(),
                        value: value.clone(),
                    },
                )
            }
            (Role::Accuser, Action::Asym(AsymAction::RequestBroad)) => {
                Message::new(author, render_request_broad(name), Payload::RequestBroad)
            }
            (Role::Accuser, Action::Asym(AsymAction::Accuse { target }))
            | (Role::Player, Action::Sym(SymAction::Accuse { target })) => {
                self.check_target(*target)?;
                Message::new(author, render_accuse(*target), Payload::Accuse { target: *target })
            }
            (Role::Intel, Action::Asym(AsymAction::Respond { answer })) => {
                let (target, property, value) = self
                    .pending_request()
                    .ok_or_else(|| WhodunitError::IllegalAction("respond without a pending specific request".into()))?;
                Message::new(
                    author,
                    render_respond(name, target, &property, &value, *answer),
                    Payload::Respond {
                        target,
                        property,
                        value,
                        answer: *answer,
                    },
                )
            }
            (
                Role::Intel,
                Action::Asym(AsymAction::RespondBroad {
                    property,
                    value,
                    suspects,
                }),
            ) => {
                self.check_property(property, value)?;
                for s in suspects {
                    self.check_target(*s)?;
                }
                if suspects.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(WhodunitError::IllegalAction(
                        "broad list must be strictly ascending".into(),
                    ));
                }
                Message::new(
                    author,
                    render_respond_broad(name, suspects, property, value),
                    Payload::RespondBroad {
                        property: property.clone(),
                        value: value.clone(),
                        suspects: suspects.clone(),
                    },
                )
            }
            (
                Role::Player,
                Action::Sym(SymAction::Share {
                    fact_index,
                    property,
                    value,
                }),
            ) => {
                if *fact_index >= self.knowledge[self.next_agent].culprit_facts.len() {
                    return Err(WhodunitError::IllegalAction(format!(
                        "fact index {fact_index} out of range"
                    )));
                }
                self.check_property(property, value)?;
                Message::new(
                    author,
                    render_share(name, property, value),
                    Payload::Share {
                        fact_index: *fact_index,
                        property: property.clone(),
                        value: value.clone(),
                    },
                )
            }
            (Role::Player, Action::Sym(SymAction::Skip)) => Message::new(author, render_skip(name), Payload::Skip),
            _ => return Err(role_error()),
        };
        let irreversible = matches!(msg.payload, Payload::Accuse { .. });
        Ok((msg, irreversible))
    }

    /// Commit the acting seat's action.
    pub fn step(&mut self, action: &Action) -> Result<StepReport, WhodunitError> {
        if self.is_terminal() {
            return Err(WhodunitError::GameOver);
        }
        let (msg, irreversible) = self.render(action)?;
        if let Payload::Accuse { target } = msg.payload {
            self.accused = Some(target);
            self.outcome = Some(if target == self.spec.culprit_id {
                Outcome::Success
            } else {
                Outcome::WrongAccusation
            });
        }
        self.channel.append(msg, irreversible);
        let message_index = self.channel.len() - 1;
        self.advance();
        Ok(StepReport {
            message_index,
            outcome: self.outcome,
        })
    }

    /// Consume the acting seat's turn without a message.
    pub fn skip_turn(&mut self) -> Result<(), WhodunitError> {
        if self.is_terminal() {
            return Err(WhodunitError::GameOver);
        }
        self.advance();
        Ok(())
    }

    fn advance(&mut self) {
        self.turn_index += 1;
        self.next_agent = (self.next_agent + 1) % self.seats.len();
        if self.outcome.is_none() && self.turn_index > self.spec.turn_limit {
            self.outcome = Some(Outcome::Timeout);
        }
    }

    /// Restart the game from its initial state. Only valid before an
    /// accusation has been made.
    pub fn full_reset(&mut self) -> Result<(), WhodunitError> {
        if self.accused.is_some() || self.channel.last_checkpoint() > 0 {
            return Err(WhodunitError::InvalidIntervention(
                "full reset after an accusation".into(),
            ));
        }
        if self.is_terminal() {
            return Err(WhodunitError::InvalidIntervention("game already finished".into()));
        }
        self.channel = CommunicationChannel::new();
        self.knowledge = self.initial_knowledge.clone();
        self.turn_index = 1;
        self.next_agent = 0;
        Ok(())
    }

    /// Drop the previous communication round: the last message of each
    /// seat, never past a checkpoint. The turn counter and the acting seat
    /// are unchanged.
    pub fn rollback_round(&mut self) -> Result<usize, WhodunitError> {
        if self.is_terminal() {
            return Err(WhodunitError::InvalidIntervention("game already finished".into()));
        }
        let available = self.channel.len() - self.channel.last_checkpoint();
        let n = available.min(self.seats.len());
        self.channel
            .rollback(RollbackTarget::DropLast(n))
            .map_err(|e| WhodunitError::InvalidIntervention(e.to_string()))
    }
}

pub fn player_name(i: usize) -> String {
    let base = PLAYER_NAMES[i % PLAYER_NAMES.len()];
    if i < PLAYER_NAMES.len() {
        base.to_string()
    } else {
        format!("{base}{}", i / PLAYER_NAMES.len() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhodunitMetrics {
    /// Percent of games ending in the culprit's identification.
    pub success_rate: f64,
    /// Percent of accused games that were correct; absent with no accusations.
    pub precision: Option<f64>,
    /// Mean final cumulative dialog index.
    pub avg_length: f64,
    pub games: usize,
}

pub fn whodunit_metrics(trajectories: &[Trajectory]) -> Option<WhodunitMetrics> {
    let results: Vec<(Outcome, u64)> = trajectories
        .iter()
        .filter_map(|t| match &t.result {
            TrajectoryResult::Whodunit { outcome, .. } => Some((*outcome, t.final_dialog_index())),
            _ => None,
        })
        .collect();
    metrics_from_outcomes(&results)
}

/// Metrics from `(outcome, final dialog index)` pairs.
pub fn metrics_from_outcomes(results: &[(Outcome, u64)]) -> Option<WhodunitMetrics> {
    if results.is_empty() {
        return None;
    }
    let total = results.len() as f64;
    let successes = results.iter().filter(|(o, _)| *o == Outcome::Success).count() as f64;
    let accused = results.iter().filter(|(o, _)| *o != Outcome::Timeout).count() as f64;
    let length: u64 = results.iter().map(|(_, l)| l).sum();
    Some(WhodunitMetrics {
        success_rate: 100.0 * successes / total,
        precision: (accused > 0.0).then(|| 100.0 * successes / accused),
        avg_length: length as f64 / total,
        games: results.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{generate_game, Attribute, AttributeSchema};
    use std::collections::{BTreeMap, HashSet};

    fn hats_spec() -> GameSpec {
        let schema = AttributeSchema::new(vec![
            Attribute {
                name: "hat".into(),
                values: vec!["brown".into(), "black".into()],
            },
            Attribute {
                name: "mood".into(),
                values: vec!["happy".into(), "sad".into()],
            },
        ])
        .unwrap();
        let mk = |id, hat: &str, mood: &str| SuspectProfile {
            id,
            attributes: BTreeMap::from([
                ("hat".to_string(), hat.to_string()),
                ("mood".to_string(), mood.to_string()),
            ]),
        };
        GameSpec {
            variant: Variant::Asymmetric,
            schema,
            suspects: vec![mk(1, "brown", "happy"), mk(2, "black", "happy"), mk(3, "brown", "sad")],
            culprit_id: 3,
            turn_limit: 6,
            seed: 0,
        }
    }

    fn asym(a: AsymAction) -> Action {
        Action::Asym(a)
    }

    #[test]
    fn match_suspects_examples() {
        let spec = hats_spec();
        assert_eq!(match_suspects(&spec, "hat", "brown").unwrap(), vec![1, 3]);
        assert!(matches!(
            match_suspects(&spec, "hat", "green"),
            Err(WhodunitError::UnknownValue { .. })
        ));
        assert!(matches!(
            match_suspects(&spec, "scarf", "red"),
            Err(WhodunitError::UnknownProperty(_))
        ));
        assert_eq!(match_suspects(&spec, "mood", "sad").unwrap(), vec![3]);
        let mut spec2 = hats_spec();
        for s in &mut spec2.suspects {
            s.attributes.insert("mood".into(), "happy".into());
        }
        assert!(match_suspects(&spec2, "mood", "sad").unwrap().is_empty());
    }

    #[test]
    fn templates_are_exact() {
        assert_eq!(
            render_request_specific("Beth", 1, "eye_glasses", "circular"),
            "Agent Beth has requested information: is property eye_glasses of character 1 circular?"
        );
        assert_eq!(
            render_respond_broad("Alex", &[1, 3, 5], "hobby", "basketball"),
            "Agent Alex has decided to return a broad message: For characters [1, 3, 5], the property hobby is basketball"
        );
        assert_eq!(
            render_respond("Alex", 3, "mood", "sad", false),
            "Agent Alex has responded that character 3 is not sad for property mood"
        );
        assert_eq!(
            render_share("Casey", "hat", "brown"),
            "Player Casey has decided to share a fact about the Winner: hat is brown."
        );
        assert_eq!(render_accuse(4), "The winner is character 4.");
    }

    #[test]
    fn accusations_terminate() {
        let mut st = WhodunitState::asymmetric(hats_spec());
        let r = st.step(&asym(AsymAction::Accuse { target: 3 })).unwrap();
        assert_eq!(r.outcome, Some(Outcome::Success));
        assert_eq!(st.channel().checkpoints(), &[1]);
        assert_eq!(st.step(&asym(AsymAction::RequestBroad)), Err(WhodunitError::GameOver));

        let mut st = WhodunitState::asymmetric(hats_spec());
        st.step(&asym(AsymAction::Accuse { target: 1 })).unwrap();
        assert_eq!(st.outcome(), Some(Outcome::WrongAccusation));
        assert_eq!(st.accused(), Some(1));
    }

    #[test]
    fn timeout_after_turn_limit() {
        let spec = generate_game(Variant::Asymmetric, 10, 31, 1).unwrap();
        let mut st = WhodunitState::asymmetric(spec);
        for turn in 1..=31 {
            assert!(!st.is_terminal(), "terminal early at {turn}");
            if st.seats()[st.next_agent()].role == Role::Accuser {
                st.step(&asym(AsymAction::RequestBroad)).unwrap();
            } else {
                st.step(&asym(AsymAction::RespondBroad {
                    property: "hat".into(),
                    value: "brown".into(),
                    suspects: vec![],
                }))
                .unwrap();
            }
        }
        assert_eq!(st.outcome(), Some(Outcome::Timeout));
    }

    #[test]
    fn role_forbidden_actions_are_illegal() {
        let mut st = WhodunitState::asymmetric(hats_spec());
        assert!(matches!(
            st.step(&asym(AsymAction::Respond { answer: true })),
            Err(WhodunitError::IllegalAction(_))
        ));
        assert!(matches!(
            st.step(&Action::Sym(SymAction::Skip)),
            Err(WhodunitError::IllegalAction(_))
        ));
        st.step(&asym(AsymAction::RequestBroad)).unwrap();
        // intel cannot answer a boolean when no specific request is pending
        assert!(matches!(
            st.step(&asym(AsymAction::Respond { answer: true })),
            Err(WhodunitError::IllegalAction(_))
        ));
        assert!(matches!(
            st.step(&asym(AsymAction::Accuse { target: 1 })),
            Err(WhodunitError::IllegalAction(_))
        ));
    }

    #[test]
    fn intel_may_answer_specific_with_broad() {
        let mut st = WhodunitState::asymmetric(hats_spec());
        st.step(&asym(AsymAction::RequestSpecific {
            target: 1,
            property: "hat".into(),
            value: "brown".into(),
        }))
        .unwrap();
        st.step(&asym(AsymAction::RespondBroad {
            property: "mood".into(),
            value: "sad".into(),
            suspects: vec![3],
        }))
        .unwrap();
        assert_eq!(st.channel().len(), 2);
    }

    #[test]
    fn respond_renders_pending_request() {
        let mut st = WhodunitState::asymmetric(hats_spec());
        st.step(&asym(AsymAction::RequestSpecific {
            target: 2,
            property: "hat".into(),
            value: "brown".into(),
        }))
        .unwrap();
        st.step(&asym(AsymAction::Respond { answer: false })).unwrap();
        assert_eq!(
            st.channel().messages()[1].text,
            "Agent Alex has responded that character 2 is not brown for property hat"
        );
    }

    #[test]
    fn full_reset_restores_start() {
        let mut st = WhodunitState::asymmetric(hats_spec());
        st.step(&asym(AsymAction::RequestBroad)).unwrap();
        st.skip_turn().unwrap();
        st.full_reset().unwrap();
        assert!(st.channel().is_empty());
        assert_eq!(st.turn_index(), 1);
        assert_eq!(st.next_agent(), 0);
        st.step(&asym(AsymAction::Accuse { target: 2 })).unwrap();
        assert!(matches!(st.full_reset(), Err(WhodunitError::InvalidIntervention(_))));
    }

    #[test]
    fn deal_facts_examples() {
        let spec = generate_game(Variant::Symmetric, 20, 20, 3).unwrap();
        let dealt = deal_symmetric_facts(&spec, 4, 3, 11).unwrap();
        assert_eq!(dealt.len(), 4);
        let mut seen = HashSet::new();
        for k in &dealt {
            assert_eq!(k.culprit_facts.len(), 3);
            assert_eq!(k.suspect_table.as_ref().unwrap().len(), 20);
            for (p, v) in &k.culprit_facts {
                assert!(seen.insert(p.clone()), "fact {p} dealt twice");
                assert_eq!(spec.culprit().value(p), Some(v.as_str()));
            }
        }
        assert_eq!(seen.len(), 12);

        let one = deal_symmetric_facts(&spec, 1, 1, 0).unwrap();
        let (p, v) = &one[0].culprit_facts[0];
        assert_eq!(spec.culprit().value(p), Some(v.as_str()));

        assert!(matches!(
            deal_symmetric_facts(&spec, 7, 3, 0),
            Err(WhodunitError::Infeasible(_))
        ));
        assert_eq!(dealt, deal_symmetric_facts(&spec, 4, 3, 11).unwrap());
    }

    #[test]
    fn share_validates_fact_index() {
        let spec = generate_game(Variant::Symmetric, 20, 20, 3).unwrap();
        let mut st = WhodunitState::symmetric(spec, 4, 3, 0).unwrap();
        let (p, v) = st.knowledge(0).culprit_facts[0].clone();
        assert!(st
            .step(&Action::Sym(SymAction::Share {
                fact_index: 3,
                property: p.clone(),
                value: v.clone()
            }))
            .is_err());
        st.step(&Action::Sym(SymAction::Share {
            fact_index: 0,
            property: p,
            value: v,
        }))
        .unwrap();
        st.step(&Action::Sym(SymAction::Skip)).unwrap();
        assert_eq!(st.next_agent(), 2);
        assert_eq!(st.turn_index(), 3);
        assert_eq!(
            st.channel().messages()[1].text,
            "Player Beth has decided to skip their turn."
        );
    }

    #[test]
    fn metrics_examples() {
        let mut v = vec![(Outcome::Success, 10u64); 108];
        v.extend(vec![(Outcome::WrongAccusation, 10u64); 72]);
        let m = metrics_from_outcomes(&v).unwrap();
        assert!((m.success_rate - 60.0).abs() < 1e-12);
        assert!((m.precision.unwrap() - 60.0).abs() < 1e-12);

        let m = metrics_from_outcomes(&[
            (Outcome::Success, 4),
            (Outcome::Success, 6),
            (Outcome::WrongAccusation, 3),
            (Outcome::Timeout, 31),
        ])
        .unwrap();
        assert!((m.success_rate - 50.0).abs() < 1e-12);
        assert!((m.precision.unwrap() - 200.0 / 3.0).abs() < 1e-9);
        assert!((m.avg_length - 11.0).abs() < 1e-12);

        let m = metrics_from_outcomes(&[(Outcome::Timeout, 31), (Outcome::Timeout, 31)]).unwrap();
        assert_eq!(m.success_rate, 0.0);
        assert_eq!(m.precision, None);
        assert!(metrics_from_outcomes(&[]).is_none());
    }
}
