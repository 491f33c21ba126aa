//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's game logic; only its plain data types are used.

#![allow(dead_code)]

use std::collections::HashMap;

use agentwatch::game::{GameSpec, Outcome};

/// Result of replaying the scripted accuser and intel on one spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairReplay {
    pub outcome: Outcome,
    /// Accuser decisions including the final accusation.
    pub accuser_turns: u32,
}

enum Query {
    Broad,
    Specific { target: usize, attr: usize, value: usize },
}

/// Replays the elimination pair with suspects as bit masks. Suspect `i`
/// (0-based) is bit `i`; attribute sets are bit sets over schema order.
pub fn replay_oracle_pair(spec: &GameSpec) -> PairReplay {
    let n = spec.suspects.len();
    assert!(n <= 64);
    let attrs: Vec<(&str, &[String])> = spec
        .schema
        .attributes()
        .iter()
        .map(|a| (a.name.as_str(), a.values.as_slice()))
        .collect();
    let n_attr = attrs.len();
    let all_attrs: u32 = if n_attr == 32 { u32::MAX } else { (1u32 << n_attr) - 1 };
    let value_of = |s: usize, a: usize| -> usize {
        let v = &spec.suspects[s].attributes[attrs[a].0];
        attrs[a].1.iter().position(|x| x == v).unwrap()
    };
    let has: Vec<Vec<u64>> = (0..n_attr)
        .map(|a| {
            (0..attrs[a].1.len())
                .map(|v| (0..n).filter(|&s| value_of(s, a) == v).fold(0u64, |m, s| m | 1 << s))
                .collect()
        })
        .collect();
    let culprit = spec.culprit_id as usize - 1;

    let mut cand: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut known = vec![0u32; n];
    let mut broadcast: u32 = 0;
    let mut lists: Vec<u64> = Vec::new();
    let mut turn = 1u32;
    let mut accuser_turns = 0u32;
    let limit = spec.turn_limit;

    while turn <= limit {
        accuser_turns += 1;
        let lowest = |m: u64| m.trailing_zeros() as usize;
        let confirmed = (0..n).find(|&s| cand >> s & 1 == 1 && known[s] == all_attrs);
        let query = if cand.count_ones() == 1 {
            let target = lowest(cand);
            let outcome = if target == culprit {
                Outcome::Success
            } else {
                Outcome::WrongAccusation
            };
            return PairReplay { outcome, accuser_turns };
        } else if let Some(target) = confirmed {
            let outcome = if target == culprit {
                Outcome::Success
            } else {
                Outcome::WrongAccusation
            };
            return PairReplay { outcome, accuser_turns };
        } else if cand == 0 || broadcast != all_attrs {
            Query::Broad
        } else {
            let target = lowest(cand);
            let attr = (0..n_attr).find(|a| known[target] >> a & 1 == 0).unwrap();
            Query::Specific {
                target,
                attr,
                value: value_of(culprit, attr),
            }
        };
        turn += 1;
        if turn > limit {
            break;
        }
        match query {
            Query::Specific { target, attr, value } => {
                if value_of(target, attr) == value {
                    known[target] |= 1 << attr;
                } else {
                    cand &= !(1u64 << target);
                }
            }
            Query::Broad => {
                let mut cells: HashMap<Vec<bool>, u64> = HashMap::new();
                for s in 0..n {
                    let sig = lists.iter().map(|l| l >> s & 1 == 1).collect();
                    *cells.entry(sig).or_insert(0) |= 1 << s;
                }
                let pool: Vec<usize> = if broadcast == all_attrs {
                    (0..n_attr).collect()
                } else {
                    (0..n_attr).filter(|a| broadcast >> a & 1 == 0).collect()
                };
                let mut best: Option<(u32, usize, usize)> = None;
                for &a in &pool {
                    for (v, &mask) in has[a].iter().enumerate() {
                        let score: u32 = cells
                            .values()
                            .map(|&c| {
                                let x = (c & mask).count_ones();
                                let y = c.count_ones() - x;
                                x * x + y * y
                            })
                            .sum();
                        if best.is_none_or(|(s, _, _)| score < s) {
                            best = Some((score, a, v));
                        }
                    }
                }
                let (_, a, v) = best.unwrap();
                let listed = has[a][v];
                lists.push(listed);
                broadcast |= 1 << a;
                if value_of(culprit, a) == v {
                    cand &= listed;
                    for s in (0..n).filter(|s| listed >> s & 1 == 1) {
                        known[s] |= 1 << a;
                    }
                } else {
                    cand &= !listed;
                    if attrs[a].1.len() == 2 {
                        for s in (0..n).filter(|s| listed >> s & 1 == 0) {
                            known[s] |= 1 << a;
                        }
                    }
                }
            }
        }
        turn += 1;
    }
    PairReplay {
        outcome: Outcome::Timeout,
        accuser_turns,
    }
}

/// Expected success gain of a full reset with one trigger per game, for an
/// accuser corrupted independently with probability `epsilon` per turn,
/// every corruption fatal and detected. A game succeeding cleanly after `k`
/// accuser turns survives a run with probability `q = (1 - epsilon)^k`;
/// the reset recovers it with probability `(1 - q) q`.
pub fn expected_reset_gain(specs: &[GameSpec], epsilon: f64) -> f64 {
    let total: f64 = specs
        .iter()
        .map(|s| {
            let r = replay_oracle_pair(s);
            if r.outcome != Outcome::Success {
                return 0.0;
            }
            let q = (1.0 - epsilon).powi(r.accuser_turns as i32);
            q * (1.0 - q)
        })
        .sum();
    total / specs.len() as f64
}

/// Fixed-point scale of the moment accumulators.
const SCALE: f64 = 1e30;

fn fixed(x: f64) -> i128 {
    (x * SCALE).round() as i128
}

fn unfixed(x: i128) -> f64 {
    x as f64 / SCALE
}

/// Entropy, surprisal variance and standardized fourth moment, each sum
/// accumulated exactly in 128-bit fixed point.
pub fn moments_oracle(p: &[f64]) -> (f64, f64, Option<f64>) {
    let terms: Vec<(f64, f64)> = p.iter().filter(|&&x| x > 0.0).map(|&x| (x, -x.ln())).collect();
    let h = unfixed(terms.iter().map(|&(x, s)| fixed(x * s)).sum());
    let var = unfixed(terms.iter().map(|&(x, s)| fixed(x * (s - h) * (s - h))).sum());
    let m4 = unfixed(terms.iter().map(|&(x, s)| fixed(x * (s - h).powi(4))).sum());
    let kurt = (var > 1e-12).then(|| m4 / (var * var));
    (h, var, kurt)
}

/// One round as computed by hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandRound {
    pub before: f64,
    pub harvested: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandCommons {
    pub rounds: Vec<HandRound>,
    pub survival_time: u32,
    pub survived: bool,
    pub efficiency: f64,
}

/// Stock arithmetic of a commons game played with fixed per-round requests.
/// The order of service does not change the total removed, which is the
/// smaller of the total request and the stock.
pub fn hand_commons(r0: f64, gamma: f64, m: u32, requests: &[Vec<f64>]) -> HandCommons {
    let mut stock = r0;
    let mut rounds = Vec::new();
    for req in requests.iter().take(m as usize) {
        let asked: f64 = req.iter().sum();
        let harvested = asked.min(stock);
        let after = stock - harvested;
        rounds.push(HandRound {
            before: stock,
            harvested,
            after,
        });
        if after <= gamma {
            break;
        }
        stock = (after * 2.0).min(r0);
    }
    let survival_time = rounds.iter().filter(|r| r.after > gamma).count() as u32;
    let total: f64 = rounds.iter().map(|r| r.harvested).sum();
    let c = m as f64 * r0 / 2.0;
    HandCommons {
        survival_time,
        survived: survival_time == m,
        efficiency: (total / c).min(1.0),
        rounds,
    }
}

/// Two-sided binomial acceptance band holding `level` of the mass.
pub fn binomial_band(n: u64, p: f64, level: f64) -> (u64, u64) {
    use statrs::distribution::{Binomial, DiscreteCDF};
    let b = Binomial::new(p, n).unwrap();
    let tail = (1.0 - level) / 2.0;
    (b.inverse_cdf(tail), b.inverse_cdf(1.0 - tail))
}
