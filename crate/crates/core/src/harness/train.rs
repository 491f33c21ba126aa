use crate::game::Role;
use crate::monitor::{grid_search, GridResult, MonitorError, TrainingCorpus, TrainingRow, ValidationGame};
use crate::trajectory::Trajectory;

use super::HarnessError;

fn game_key(t: &Trajectory) -> String {
    format!("{}#{}", t.game_id, t.repetition)
}

/// Monitored turns of `role` from valid, intervention-free trajectories,
/// labelled with their game's outcome.
pub fn training_corpus(trajectories: &[Trajectory], role: Role) -> TrainingCorpus {
    let mut rows = Vec::new();
    for t in trajectories.iter().filter(|t| !t.had_intervention()) {
        let Some(label) = t.result.success() else { continue };
        for r in t.turns.iter().filter(|r| r.role == role && r.committed) {
            if let Some(features) = r.features {
                rows.push(TrainingRow {
                    features,
                    game_id: game_key(t),
                    role,
                    label,
                });
            }
        }
    }
    TrainingCorpus { rows }
}

/// Every valid, intervention-free game with the features of its `role`
/// turns; games without monitored turns are kept so they count in the gain
/// denominator.
pub fn validation_games(trajectories: &[Trajectory], role: Role) -> Vec<ValidationGame> {
    trajectories
        .iter()
        .filter(|t| !t.had_intervention())
        .filter_map(|t| {
            let success = t.result.success()?;
            let features = t
                .turns
                .iter()
                .filter(|r| r.role == role && r.committed)
                .filter_map(|r| r.features)
                .collect();
            Some(ValidationGame {
                game_id: game_key(t),
                success,
                features,
            })
        })
        .collect()
}

/// Fit every grid cell on the training logs and select on the validation
/// logs.
pub fn train_monitor(
    train: &[Trajectory],
    validation: &[Trajectory],
    role: Role,
    alpha: f64,
) -> Result<GridResult, HarnessError> {
    let corpus = training_corpus(train, role);
    if corpus.rows.is_empty() {
        return Err(HarnessError::InsufficientData(format!(
            "no monitored {role} turns in the training logs"
        )));
    }
    if !corpus.has_both_classes() {
        let class = if corpus.rows[0].label { "failed" } else { "successful" };
        return Err(HarnessError::InsufficientData(format!(
            "the training logs contain no {class} games"
        )));
    }
    let games = validation_games(validation, role);
    grid_search(&corpus, &games, role, alpha).map_err(|e| match e {
        MonitorError::EmptyCorpus => HarnessError::InsufficientData("no validation games".into()),
        other => HarnessError::Monitor(other),
    })
}
