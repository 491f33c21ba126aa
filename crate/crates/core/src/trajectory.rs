//! Per-turn run records and their JSONL form.
//!
//! A trajectory file holds, per game, one `header` line, one `turn` line per
//! dialog turn and one closing `outcome` line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentDecision;
use crate::commons::{CommonsConfig, CommonsMetrics, RoundRecord};
use crate::game::{GameSpec, Outcome, Role, SuspectId};
use crate::intervention::InterventionKind;
use crate::uncertainty::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    /// Per-game turn counter (restarts after a full reset); the round in
    /// the commons environment.
    pub turn_index: u32,
    /// Run-wide counter, never reset.
    pub dialog_index: u64,
    pub agent: String,
    pub role: Role,
    /// Absent when the backend failed to produce anything usable.
    pub decision: Option<AgentDecision>,
    pub features: Option<FeatureVector>,
    pub trigger_fired: bool,
    pub intervention: Option<InterventionKind>,
    /// False when the decision was discarded by an intervention.
    pub committed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum GameRef {
    Whodunit { spec: GameSpec },
    Commons { config: CommonsConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryResult {
    Whodunit {
        outcome: Outcome,
        accused: Option<SuspectId>,
    },
    Commons {
        metrics: CommonsMetrics,
        history: Vec<RoundRecord>,
    },
    /// The game was aborted after unrecoverable backend errors.
    Invalid { reason: String },
}

impl TrajectoryResult {
    /// Task success: culprit identified, or the commons survived all rounds.
    pub fn success(&self) -> Option<bool> {
        match self {
            TrajectoryResult::Whodunit { outcome, .. } => Some(*outcome == Outcome::Success),
            TrajectoryResult::Commons { metrics, .. } => Some(metrics.survived),
            TrajectoryResult::Invalid { .. } => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        !matches!(self, TrajectoryResult::Invalid { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub game_id: String,
    pub repetition: u32,
    pub seed: u64,
    pub game: GameRef,
    pub turns: Vec<TurnRecord>,
    pub result: TrajectoryResult,
}

impl Trajectory {
    pub fn final_dialog_index(&self) -> u64 {
        self.turns.last().map(|t| t.dialog_index).unwrap_or(0)
    }

    pub fn had_intervention(&self) -> bool {
        self.turns.iter().any(|t| t.intervention.is_some())
    }

    pub fn triggers(&self, role: Role) -> usize {
        self.turns.iter().filter(|t| t.role == role && t.trigger_fired).count()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header {
        game_id: String,
        repetition: u32,
        seed: u64,
        game: GameRef,
    },
    Turn(TurnRecord),
    Outcome(TrajectoryResult),
}

#[derive(Debug, Error)]
pub enum TrajectoryIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
}

pub fn write_jsonl<W: Write>(mut out: W, trajectories: &[Trajectory]) -> Result<(), TrajectoryIoError> {
    for t in trajectories {
        let header = Line::Header {
            game_id: t.game_id.clone(),
            repetition: t.repetition,
            seed: t.seed,
            game: t.game.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&header).expect("serializable"))?;
        for turn in &t.turns {
            let line = serde_json::to_string(&Line::Turn(turn.clone())).expect("serializable");
            writeln!(out, "{line}")?;
        }
        let line = serde_json::to_string(&Line::Outcome(t.result.clone())).expect("serializable");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<Trajectory>, TrajectoryIoError> {
    let mut out = Vec::new();
    let mut current: Option<Trajectory> = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let no = i + 1;
        let parsed: Line =
            serde_json::from_str(&line).map_err(|source| TrajectoryIoError::Parse { line: no, source })?;
        let structure = |message: &str| TrajectoryIoError::Structure {
            line: no,
            message: message.into(),
        };
        match parsed {
            Line::Header {
                game_id,
                repetition,
                seed,
                game,
            } => {
                if current.is_some() {
                    return Err(structure("header before the previous game's outcome"));
                }
                current = Some(Trajectory {
                    game_id,
                    repetition,
                    seed,
                    game,
                    turns: Vec::new(),
                    result: TrajectoryResult::Invalid {
                        reason: "incomplete".into(),
                    },
                });
            }
            Line::Turn(turn) => current
                .as_mut()
                .ok_or_else(|| structure("turn outside a game"))?
                .turns
                .push(turn),
            Line::Outcome(result) => {
                let mut t = current.take().ok_or_else(|| structure("outcome outside a game"))?;
                t.result = result;
                out.push(t);
            }
        }
    }
    if current.is_some() {
        return Err(TrajectoryIoError::Structure {
            line: 0,
            message: "truncated file".into(),
        });
    }
    Ok(out)
}

pub fn to_jsonl_string(trajectories: &[Trajectory]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, trajectories).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}
