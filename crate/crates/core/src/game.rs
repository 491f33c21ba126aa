//! Shared game data model: attribute schemas, suspect lineups, the message
//! channel with checkpoint/rollback, and the identifiers used by every
//! environment.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;

pub type SuspectId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid game spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("rollback of {requested} messages would cross the checkpoint at {checkpoint} (only {available} reversible messages)")]
    RollbackPastCheckpoint {
        requested: usize,
        available: usize,
        checkpoint: usize,
    },
}

/// The agent roles that exist across environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Accuser,
    Intel,
    Player,
    Fisher,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Accuser => "accuser",
            Role::Intel => "intel",
            Role::Player => "player",
            Role::Fisher => "fisher",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accuser" => Ok(Role::Accuser),
            "intel" => Ok(Role::Intel),
            "player" => Ok(Role::Player),
            "fisher" => Ok(Role::Fisher),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Asymmetric,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
}

/// Ordered attribute list. Names are unique and each attribute has at least
/// two distinct values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Attribute>", into = "Vec<Attribute>")]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
}

const ATTRIBUTE_TABLE: &[(&str, &[&str])] = &[
    ("hat", &["brown", "black"]),
    ("mood", &["happy", "sad"]),
    ("shirt_color", &["pink", "green"]),
    ("hobby", &["basketball", "dancing"]),
    ("pants", &["long", "short"]),
    ("pants_color", &["brown", "black"]),
    ("eye_color", &["blue", "brown", "green"]),
    ("eye_glasses", &["circular", "square"]),
    ("shirt", &["button-up", "tee"]),
    ("shoe_color", &["red", "white"]),
    ("hair", &["long", "short"]),
    ("watch", &["bronze", "silver"]),
    // symmetric-only attributes
    ("socks", &["dotted", "white"]),
    ("jacket", &["yellow", "jean"]),
    ("height", &["short", "tall"]),
    ("age", &["young", "old"]),
    ("build", &["medium", "muscular"]),
    ("personality", &["introverted", "extroverted"]),
    ("interests", &["sports", "arts"]),
    ("occupation", &["professional", "student"]),
];

const ASYMMETRIC_ATTRIBUTE_COUNT: usize = 12;

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self, GameError> {
        if attributes.is_empty() {
            return Err(GameError::InvalidSchema("schema has no attributes".into()));
        }
        let mut names = HashSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(GameError::InvalidSchema(format!("duplicate attribute {:?}", attr.name)));
            }
            let distinct: HashSet<&str> = attr.values.iter().map(String::as_str).collect();
            if distinct.len() < 2 || distinct.len() != attr.values.len() {
                return Err(GameError::InvalidSchema(format!(
                    "attribute {:?} needs at least two distinct values",
                    attr.name
                )));
            }
        }
        Ok(Self { attributes })
    }

    /// The 12-attribute schema used by the asymmetric variant.
    pub fn asymmetric() -> Self {
        Self::from_table(&ATTRIBUTE_TABLE[..ASYMMETRIC_ATTRIBUTE_COUNT])
    }

    /// The full 20-attribute schema used by the symmetric variant.
    pub fn symmetric() -> Self {
        Self::from_table(ATTRIBUTE_TABLE)
    }

    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Asymmetric => Self::asymmetric(),
            Variant::Symmetric => Self::symmetric(),
        }
    }

    fn from_table(rows: &[(&str, &[&str])]) -> Self {
        let attributes = rows
            .iter()
            .map(|(name, values)| Attribute {
                name: (*name).to_string(),
                values: values.iter().map(|v| (*v).to_string()).collect(),
            })
            .collect();
        Self { attributes }
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn has_value(&self, name: &str, value: &str) -> bool {
        self.get(name)
            .map(|a| a.values.iter().any(|v| v == value))
            .unwrap_or(false)
    }

    /// Number of distinct full assignments, saturating at `u128::MAX`.
    pub fn combination_count(&self) -> u128 {
        self.attributes
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.values.len() as u128))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }
}

impl TryFrom<Vec<Attribute>> for AttributeSchema {
    type Error = GameError;

    fn try_from(value: Vec<Attribute>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<AttributeSchema> for Vec<Attribute> {
    fn from(schema: AttributeSchema) -> Self {
        schema.attributes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SuspectProfile {
    pub id: SuspectId,
    pub attributes: BTreeMap<String, String>,
}

impl SuspectProfile {
    pub fn value(&self, attribute: &str) -> Option<&str> {
        self.attributes.get(attribute).map(String::as_str)
    }

    pub fn matches(&self, attribute: &str, value: &str) -> bool {
        self.value(attribute) == Some(value)
    }

    /// Human readable description in schema order, e.g. `hat: brown, mood: sad`.
    pub fn describe(&self, schema: &AttributeSchema) -> String {
        schema
            .names()
            .filter_map(|name| self.value(name).map(|v| format!("{name}: {v}")))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// A sampled game instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub variant: Variant,
    pub schema: AttributeSchema,
    pub suspects: Vec<SuspectProfile>,
    pub culprit_id: SuspectId,
    pub turn_limit: u32,
    pub seed: u64,
}

impl GameSpec {
    pub fn n_suspects(&self) -> usize {
        self.suspects.len()
    }

    pub fn suspect(&self, id: SuspectId) -> Option<&SuspectProfile> {
        if id == 0 {
            return None;
        }
        self.suspects.get(id as usize - 1)
    }

    pub fn culprit(&self) -> &SuspectProfile {
        self.suspect(self.culprit_id)
            .expect("culprit id is validated at construction")
    }

    pub fn is_valid_suspect(&self, id: SuspectId) -> bool {
        id >= 1 && (id as usize) <= self.suspects.len()
    }

    /// Checks every structural invariant of a spec (used after parsing).
    pub fn validate(&self) -> Result<(), GameError> {
        if self.suspects.len() < 2 {
            return Err(GameError::InvalidSpec("need at least two suspects".into()));
        }
        if self.turn_limit == 0 {
            return Err(GameError::InvalidSpec("turn limit must be positive".into()));
        }
        if !self.is_valid_suspect(self.culprit_id) {
            return Err(GameError::InvalidSpec(format!(
                "culprit id {} outside 1..={}",
                self.culprit_id,
                self.suspects.len()
            )));
        }
        let mut seen = HashSet::new();
        for (i, s) in self.suspects.iter().enumerate() {
            if s.id as usize != i + 1 {
                return Err(GameError::InvalidSpec(format!(
                    "suspect ids must be 1..=n in order, found {} at position {}",
                    s.id,
                    i + 1
                )));
            }
            if s.attributes.len() != self.schema.len() {
                return Err(GameError::InvalidSpec(format!(
                    "suspect {} does not cover the schema",
                    s.id
                )));
            }
            for attr in self.schema.attributes() {
                match s.value(&attr.name) {
                    Some(v) if attr.values.iter().any(|x| x == v) => {}
                    _ => {
                        return Err(GameError::InvalidSpec(format!(
                            "suspect {} has no valid value for {}",
                            s.id, attr.name
                        )))
                    }
                }
            }
            if !seen.insert(&s.attributes) {
                return Err(GameError::InvalidSpec(format!(
                    "suspect {} duplicates another profile",
                    s.id
                )));
            }
        }
        Ok(())
    }
}

/// Sample a game instance. Deterministic in all arguments.
pub fn generate_game(variant: Variant, n_suspects: usize, turn_limit: u32, seed: u64) -> Result<GameSpec, GameError> {
    generate_game_with_schema(
        AttributeSchema::for_variant(variant),
        variant,
        n_suspects,
        turn_limit,
        seed,
    )
}

pub fn generate_game_with_schema(
    schema: AttributeSchema,
    variant: Variant,
    n_suspects: usize,
    turn_limit: u32,
    seed: u64,
) -> Result<GameSpec, GameError> {
    if n_suspects < 2 {
        return Err(GameError::Infeasible(format!(
            "need at least two suspects, got {n_suspects}"
        )));
    }
    if turn_limit == 0 {
        return Err(GameError::Infeasible("turn limit must be at least 1".into()));
    }
    if (n_suspects as u128) >= schema.combination_count() {
        return Err(GameError::Infeasible(format!(
            "{n_suspects} distinct suspects requested but the schema only has {} combinations",
            schema.combination_count()
        )));
    }

    let mut rng = rng_from_seed(seed);
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(n_suspects);
    let mut suspects = Vec::with_capacity(n_suspects);
    while suspects.len() < n_suspects {
        let draw: Vec<usize> = schema
            .attributes()
            .iter()
            .map(|a| rng.gen_range(0..a.values.len()))
            .collect();
        if !seen.insert(draw.clone()) {
            continue;
        }
        let attributes = schema
            .attributes()
            .iter()
            .zip(&draw)
            .map(|(a, &i)| (a.name.clone(), a.values[i].clone()))
            .collect();
        suspects.push(SuspectProfile {
            id: suspects.len() as SuspectId + 1,
            attributes,
        });
    }
    let culprit_id = rng.gen_range(1..=n_suspects as SuspectId);

    Ok(GameSpec {
        variant,
        schema,
        suspects,
        culprit_id,
        turn_limit,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Author {
    System,
    Agent(String),
}

impl Author {
    pub fn is(&self, name: &str) -> bool {
        matches!(self, Author::Agent(n) if n == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    RequestSpecific,
    RequestBroad,
    Respond,
    RespondBroad,
    Share,
    Accuse,
    Skip,
    Discussion,
    System,
}

/// Structured, public content of a message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    RequestSpecific {
        target: SuspectId,
        property: String,
        value: String,
    },
    RequestBroad,
    Respond {
        target: SuspectId,
        property: String,
        value: String,
        answer: bool,
    },
    RespondBroad {
        property: String,
        value: String,
        suspects: Vec<SuspectId>,
    },
    Share {
        fact_index: usize,
        property: String,
        value: String,
    },
    Accuse {
        target: SuspectId,
    },
    Skip,
    Discussion {
        amounts: Vec<f64>,
    },
    Harvest {
        round: u32,
        amounts: Vec<(String, f64)>,
    },
    Note,
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::RequestSpecific { .. } => MessageKind::RequestSpecific,
            Payload::RequestBroad => MessageKind::RequestBroad,
            Payload::Respond { .. } => MessageKind::Respond,
            Payload::RespondBroad { .. } => MessageKind::RespondBroad,
            Payload::Share { .. } => MessageKind::Share,
            Payload::Accuse { .. } => MessageKind::Accuse,
            Payload::Skip => MessageKind::Skip,
            Payload::Discussion { .. } => MessageKind::Discussion,
            Payload::Harvest { .. } | Payload::Note => MessageKind::System,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub author: Author,
    pub kind: MessageKind,
    pub text: String,
    pub payload: Payload,
}

impl Message {
    pub fn new(author: Author, text: String, payload: Payload) -> Self {
        Self {
            author,
            kind: payload.kind(),
            text,
            payload,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RollbackTarget {
    /// Remove every message after the last checkpoint.
    ToLastCheckpoint,
    /// Remove the trailing `n` messages.
    DropLast(usize),
}

/// Ordered message log. A checkpoint `k` seals the first `k` messages: no
/// rollback may remove them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommunicationChannel {
    messages: Vec<Message>,
    checkpoints: Vec<usize>,
}

impl CommunicationChannel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn checkpoints(&self) -> &[usize] {
        &self.checkpoints
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Number of sealed messages (0 when no checkpoint exists).
    pub fn last_checkpoint(&self) -> usize {
        self.checkpoints.last().copied().unwrap_or(0)
    }

    pub fn append(&mut self, message: Message, irreversible: bool) {
        self.messages.push(message);
        if irreversible {
            self.checkpoints.push(self.messages.len());
        }
    }

    /// Seal the current tail without appending anything.
    pub fn seal(&mut self) {
        if self.last_checkpoint() < self.messages.len() {
            self.checkpoints.push(self.messages.len());
        }
    }

    /// Roll back reversible messages. Returns the number removed.
    pub fn rollback(&mut self, target: RollbackTarget) -> Result<usize, ChannelError> {
        let sealed = self.last_checkpoint();
        let available = self.messages.len() - sealed;
        let n = match target {
            RollbackTarget::ToLastCheckpoint => available,
            RollbackTarget::DropLast(k) => {
                if k > available {
                    return Err(ChannelError::RollbackPastCheckpoint {
                        requested: k,
                        available,
                        checkpoint: sealed,
                    });
                }
                k
            }
        };
        self.messages.truncate(self.messages.len() - n);
        Ok(n)
    }

    pub fn rendered(&self) -> Vec<&str> {
        self.messages.iter().map(|m| m.text.as_str()).collect()
    }

    pub fn render_block(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Final result of a deduction game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    WrongAccusation,
    Timeout,
}

/// Shuffle helper shared by dataset splitting and fact dealing.
pub(crate) fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(&mut rng_from_seed(seed));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn note(i: usize) -> Message {
        Message::new(Author::System, format!("m{i}"), Payload::Note)
    }

    #[test]
    fn schemas_match_attribute_table() {
        let asym = AttributeSchema::asymmetric();
        let sym = AttributeSchema::symmetric();
        assert_eq!(asym.len(), 12);
        assert_eq!(sym.len(), 20);
        assert_eq!(&sym.attributes()[..12], asym.attributes());
        assert_eq!(asym.get("eye_color").unwrap().values.len(), 3);
        assert!(sym.attributes().iter().all(|a| (2..=3).contains(&a.values.len())));
    }

    #[test]
    fn schema_rejects_duplicates_and_single_values() {
        let dup = vec![
            Attribute {
                name: "a".into(),
                values: vec!["x".into(), "y".into()],
            },
            Attribute {
                name: "a".into(),
                values: vec!["x".into(), "y".into()],
            },
        ];
        assert!(AttributeSchema::new(dup).is_err());
        let single = vec![Attribute {
            name: "a".into(),
            values: vec!["x".into(), "x".into()],
        }];
        assert!(AttributeSchema::new(single).is_err());
    }

    #[test]
    fn generate_asymmetric_default() {
        let spec = generate_game(Variant::Asymmetric, 10, 31, 5).unwrap();
        assert_eq!(spec.suspects.len(), 10);
        assert!(spec.suspects.iter().all(|s| s.attributes.len() == 12));
        assert!(spec.is_valid_suspect(spec.culprit_id));
        spec.validate().unwrap();
    }

    #[test]
    fn generate_symmetric_default() {
        let spec = generate_game(Variant::Symmetric, 20, 20, 9).unwrap();
        assert_eq!(spec.suspects.len(), 20);
        assert!(spec.suspects.iter().all(|s| s.attributes.len() == 20));
        spec.validate().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let a = serde_json::to_string(&generate_game(Variant::Asymmetric, 10, 31, 77).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_game(Variant::Asymmetric, 10, 31, 77).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&generate_game(Variant::Asymmetric, 10, 31, 78).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn infeasible_requests() {
        let tiny = AttributeSchema::new(vec![Attribute {
            name: "hat".into(),
            values: vec!["a".into(), "b".into()],
        }])
        .unwrap();
        assert!(matches!(
            generate_game_with_schema(tiny, Variant::Asymmetric, 3, 5, 0),
            Err(GameError::Infeasible(_))
        ));
        assert!(generate_game(Variant::Asymmetric, 1, 5, 0).is_err());
        assert!(generate_game(Variant::Asymmetric, 4, 0, 0).is_err());
    }

    #[test]
    fn culprit_description_matches_exactly_one_suspect() {
        for seed in 0..50 {
            let spec = generate_game(Variant::Asymmetric, 10, 31, seed).unwrap();
            let culprit = spec.culprit();
            let hits: Vec<_> = spec
                .suspects
                .iter()
                .filter(|s| s.attributes == culprit.attributes)
                .map(|s| s.id)
                .collect();
            assert_eq!(hits, vec![spec.culprit_id]);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = generate_game(Variant::Symmetric, 6, 20, 3).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: GameSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        back.validate().unwrap();
    }

    #[test]
    fn append_reversible_and_irreversible() {
        let mut ch = CommunicationChannel::new();
        ch.append(note(0), false);
        assert_eq!(ch.len(), 1);
        assert!(ch.checkpoints().is_empty());
        ch.append(note(1), true);
        assert_eq!(ch.checkpoints(), &[2]);
        assert_eq!(ch.rendered(), vec!["m0", "m1"]);
    }

    #[test]
    fn rollback_examples() {
        let mut ch = CommunicationChannel::new();
        for i in 0..5 {
            ch.append(note(i), false);
        }
        ch.rollback(RollbackTarget::ToLastCheckpoint).unwrap();
        assert!(ch.is_empty());

        let mut ch = CommunicationChannel::new();
        for i in 0..5 {
            ch.append(note(i), i == 2);
        }
        assert_eq!(ch.checkpoints(), &[3]);
        let mut a = ch.clone();
        a.rollback(RollbackTarget::ToLastCheckpoint).unwrap();
        assert_eq!(a.len(), 3);
        let mut b = ch.clone();
        b.rollback(RollbackTarget::DropLast(2)).unwrap();
        assert_eq!(b.len(), 3);
        let mut c = ch;
        assert!(matches!(
            c.rollback(RollbackTarget::DropLast(3)),
            Err(ChannelError::RollbackPastCheckpoint { .. })
        ));
        assert_eq!(c.len(), 5);
    }
}
