use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::commons::CommonsConfig;
use crate::game::{generate_game, GameSpec, SuspectId, SuspectProfile};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::trajectory::GameRef;

use super::{EnvironmentConfig, HarnessError};

pub const WHODUNIT_SPLIT_SIZES: (usize, usize, usize) = (210, 90, 180);
pub const COMMONS_TRAIN_SIZE: usize = 14;
pub const COMMONS_VALIDATION_SIZE: usize = 6;

const MAX_ATTEMPTS_PER_GAME: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(HarnessError::Config(format!("unknown split {s:?}"))),
        }
    }
}

/// Train/validation/test partition of game specs or initial stocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum SplitManifest {
    Whodunit {
        seed: u64,
        train: Vec<GameSpec>,
        validation: Vec<GameSpec>,
        test: Vec<GameSpec>,
    },
    Commons {
        seed: u64,
        train: Vec<f64>,
        validation: Vec<f64>,
        test: Vec<f64>,
    },
}

/// One playable game with a stable identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    pub id: String,
    pub game: GameRef,
}

/// Identity of a deduction game for split disjointness.
pub fn spec_key(spec: &GameSpec) -> (Vec<SuspectProfile>, SuspectId) {
    (spec.suspects.clone(), spec.culprit_id)
}

/// Commons train/validation pool and test stocks.
pub fn commons_pool() -> Vec<f64> {
    (0..20).map(|k| 105.0 + 5.0 * k as f64).collect()
}

pub fn commons_test_stocks() -> Vec<f64> {
    std::iter::once(100.0)
        .chain((210..=300).step_by(5).map(f64::from))
        .collect()
}

pub fn gen_dataset(
    env: &EnvironmentConfig,
    sizes: (usize, usize, usize),
    seed: u64,
) -> Result<SplitManifest, HarnessError> {
    match env {
        EnvironmentConfig::Whodunit {
            variant,
            n_suspects,
            turn_limit,
            ..
        } => {
            let total = sizes.0 + sizes.1 + sizes.2;
            let mut seen = BTreeSet::new();
            let mut specs = Vec::with_capacity(total);
            let mut attempt = 0u64;
            while specs.len() < total {
                if attempt as usize >= total.max(1) * MAX_ATTEMPTS_PER_GAME {
                    return Err(HarnessError::Infeasible(format!(
                        "only {} distinct games after {attempt} draws",
                        specs.len()
                    )));
                }
                let spec = generate_game(
                    *variant,
                    *n_suspects,
                    *turn_limit,
                    derive_seed(seed, stream::GAME, attempt),
                )
                .map_err(|e| HarnessError::Infeasible(e.to_string()))?;
                attempt += 1;
                if seen.insert(spec_key(&spec)) {
                    specs.push(spec);
                }
            }
            let test = specs.split_off(sizes.0 + sizes.1);
            let validation = specs.split_off(sizes.0);
            Ok(SplitManifest::Whodunit {
                seed,
                train: specs,
                validation,
                test,
            })
        }
        EnvironmentConfig::Commons { .. } => {
            let mut pool = commons_pool();
            pool.shuffle(&mut rng_from_seed(derive_seed(seed, stream::SPLIT, 0)));
            let validation = pool.split_off(COMMONS_TRAIN_SIZE);
            Ok(SplitManifest::Commons {
                seed,
                train: pool,
                validation,
                test: commons_test_stocks(),
            })
        }
    }
}

impl SplitManifest {
    pub fn kind(&self) -> &'static str {
        match self {
            SplitManifest::Whodunit { .. } => "whodunit",
            SplitManifest::Commons { .. } => "commons",
        }
    }

    pub fn len(&self, split: Split) -> usize {
        match (self, split) {
            (SplitManifest::Whodunit { train, .. }, Split::Train) => train.len(),
            (SplitManifest::Whodunit { validation, .. }, Split::Validation) => validation.len(),
            (SplitManifest::Whodunit { test, .. }, Split::Test) => test.len(),
            (SplitManifest::Commons { train, .. }, Split::Train) => train.len(),
            (SplitManifest::Commons { validation, .. }, Split::Validation) => validation.len(),
            (SplitManifest::Commons { test, .. }, Split::Test) => test.len(),
        }
    }

    pub fn is_empty(&self, split: Split) -> bool {
        self.len(split) == 0
    }

    /// Playable games of a split. Commons games take their agent count and
    /// horizon from `env`.
    pub fn games(&self, split: Split, env: &EnvironmentConfig) -> Result<Vec<GameInstance>, HarnessError> {
        match (self, env) {
            (
                SplitManifest::Whodunit {
                    train,
                    validation,
                    test,
                    ..
                },
                EnvironmentConfig::Whodunit { .. },
            ) => {
                let specs = match split {
                    Split::Train => train,
                    Split::Validation => validation,
                    Split::Test => test,
                };
                Ok(specs
                    .iter()
                    .enumerate()
                    .map(|(i, s)| GameInstance {
                        id: format!("{}-{i:04}", split.as_str()),
                        game: GameRef::Whodunit { spec: s.clone() },
                    })
                    .collect())
            }
            (
                SplitManifest::Commons {
                    train,
                    validation,
                    test,
                    ..
                },
                EnvironmentConfig::Commons { gamma, m, n_agents },
            ) => {
                let stocks = match split {
                    Split::Train => train,
                    Split::Validation => validation,
                    Split::Test => test,
                };
                Ok(stocks
                    .iter()
                    .map(|&r0| GameInstance {
                        id: format!("{}-r0-{}", split.as_str(), crate::commons::fmt_amount(r0)),
                        game: GameRef::Commons {
                            config: CommonsConfig {
                                r0,
                                gamma: *gamma,
                                m: *m,
                                n_agents: *n_agents,
                                seed: 0,
                            },
                        },
                    })
                    .collect())
            }
            _ => Err(HarnessError::Config(format!(
                "a {} manifest cannot drive a {} experiment",
                self.kind(),
                env.kind()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Variant;

    #[test]
    fn whodunit_splits_are_disjoint() {
        let env = EnvironmentConfig::whodunit(Variant::Asymmetric, 6, 31);
        let m = gen_dataset(&env, (20, 10, 15), 3).unwrap();
        let SplitManifest::Whodunit {
            train,
            validation,
            test,
            ..
        } = &m
        else {
            panic!()
        };
        assert_eq!((train.len(), validation.len(), test.len()), (20, 10, 15));
        let keys: BTreeSet<_> = train.iter().chain(validation).chain(test).map(spec_key).collect();
        assert_eq!(keys.len(), 45);
        assert_eq!(m, gen_dataset(&env, (20, 10, 15), 3).unwrap());
    }

    #[test]
    fn infeasible_request() {
        let env = EnvironmentConfig::whodunit(Variant::Asymmetric, 1, 31);
        assert!(matches!(
            gen_dataset(&env, (1, 0, 0), 0),
            Err(HarnessError::Infeasible(_))
        ));
    }

    #[test]
    fn commons_manifest() {
        let m = gen_dataset(&EnvironmentConfig::commons(5), (0, 0, 0), 9).unwrap();
        let SplitManifest::Commons {
            train,
            validation,
            test,
            ..
        } = &m
        else {
            panic!()
        };
        assert_eq!((train.len(), validation.len(), test.len()), (14, 6, 20));
        let mut pool: Vec<f64> = train.iter().chain(validation).copied().collect();
        pool.sort_by(f64::total_cmp);
        assert_eq!(pool, commons_pool());
        assert_eq!(test[0], 100.0);
        assert_eq!(test[19], 300.0);
        let games = m.games(Split::Test, &EnvironmentConfig::commons(5)).unwrap();
        assert_eq!(games[0].id, "test-r0-100");
    }
}
