//! Common-pool fishing environment.
//!
//! Each round agents first harvest (irreversible, sealed by a channel
//! checkpoint) and then discuss. Between rounds the stock doubles, capped at
//! the starting stock `R0`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentObservation, CommonsPhase, ObservationView};
use crate::game::{Author, CommunicationChannel, Message, Payload, Role, RollbackTarget};
use crate::rng::SimRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommonsError {
    #[error("negative or non-finite harvest request {amount} from {agent}")]
    NegativeRequest { agent: String, amount: f64 },
    #[error("the simulation already ended after round {0}")]
    Finished(u32),
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

fn default_gamma() -> f64 {
    5.0
}

fn default_rounds() -> u32 {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonsConfig {
    pub r0: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_rounds")]
    pub m: u32,
    pub n_agents: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CommonsConfig {
    pub fn new(r0: f64, n_agents: usize) -> Self {
        Self {
            r0,
            gamma: default_gamma(),
            m: default_rounds(),
            n_agents,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CommonsError> {
        if !(self.r0.is_finite() && self.r0 >= 0.0) {
            return Err(CommonsError::InvalidConfig(format!("R0 = {}", self.r0)));
        }
        if self.n_agents == 0 || self.m == 0 {
            return Err(CommonsError::InvalidConfig("need agents and rounds".into()));
        }
        Ok(())
    }

    /// Sustainable benchmark harvest `c = m * R0 / 2`.
    pub fn sustainable_total(&self) -> f64 {
        self.m as f64 * self.r0 / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestEntry {
    pub round: u32,
    pub agent: String,
    pub amount: f64,
}

/// Stock bookkeeping for one completed harvest phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub stock_before: f64,
    pub harvested: f64,
    pub stock_after: f64,
}

#[derive(Debug, Clone)]
pub struct CommonsState {
    config: CommonsConfig,
    agents: Vec<String>,
    round: u32,
    stock: f64,
    harvest_log: Vec<HarvestEntry>,
    history: Vec<RoundRecord>,
    channel: CommunicationChannel,
    harvested_this_round: bool,
    finished: bool,
}

pub fn fisher_name(i: usize) -> String {
    crate::whodunit::player_name(i)
}

impl CommonsState {
    pub fn new(config: CommonsConfig) -> Result<Self, CommonsError> {
        config.validate()?;
        let agents = (0..config.n_agents).map(fisher_name).collect();
        Ok(Self {
            stock: config.r0,
            config,
            agents,
            round: 1,
            harvest_log: Vec::new(),
            history: Vec::new(),
            channel: CommunicationChannel::new(),
            harvested_this_round: false,
            finished: false,
        })
    }

    pub fn config(&self) -> &CommonsConfig {
        &self.config
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn stock(&self) -> f64 {
        self.stock
    }

    pub fn harvest_log(&self) -> &[HarvestEntry] {
        &self.harvest_log
    }

    pub fn history(&self) -> &[RoundRecord] {
        &self.history
    }

    pub fn channel(&self) -> &CommunicationChannel {
        &self.channel
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn harvested_this_round(&self) -> bool {
        self.harvested_this_round
    }

    pub fn observation(&self, agent: usize, phase: CommonsPhase) -> AgentObservation {
        AgentObservation {
            agent: self.agents[agent].clone(),
            role: Role::Fisher,
            turn_index: self.round,
            turn_limit: self.config.m,
            channel: self.channel.messages().to_vec(),
            view: ObservationView::Commons {
                stock: self.stock,
                r0: self.config.r0,
                gamma: self.config.gamma,
                round: self.round,
                max_rounds: self.config.m,
                n_agents: self.config.n_agents,
                phase,
            },
        }
    }

    /// Process one harvest phase. Requests are served in a random order and
    /// clipped to whatever stock remains; the phase is sealed in the channel.
    pub fn harvest_phase(&mut self, requests: &[(usize, f64)], rng: &mut SimRng) -> Result<f64, CommonsError> {
        if self.finished {
            return Err(CommonsError::Finished(self.round));
        }
        for &(agent, amount) in requests {
            if !amount.is_finite() || amount < 0.0 {
                return Err(CommonsError::NegativeRequest {
                    agent: self.agents.get(agent).cloned().unwrap_or_default(),
                    amount,
                });
            }
        }
        let mut order: Vec<usize> = (0..requests.len()).collect();
        order.shuffle(rng);

        let stock_before = self.stock;
        let mut taken = Vec::with_capacity(requests.len());
        for i in order {
            let (agent, amount) = requests[i];
            let got = amount.min(self.stock);
            self.stock -= got;
            let name = self.agents[agent].clone();
            self.harvest_log.push(HarvestEntry {
                round: self.round,
                agent: name.clone(),
                amount: got,
            });
            taken.push((name, got));
        }
        if self.stock < 0.0 {
            self.stock = 0.0;
        }
        let harvested = stock_before - self.stock;
        self.history.push(RoundRecord {
            round: self.round,
            stock_before,
            harvested,
            stock_after: self.stock,
        });
        let text = format!(
            "Round {} harvest: {}. Remaining stock: {}.",
            self.round,
            taken
                .iter()
                .map(|(n, a)| format!("{n} caught {}", fmt_amount(*a)))
                .collect::<Vec<_>>()
                .join(", "),
            fmt_amount(self.stock)
        );
        self.channel.append(
            Message::new(
                Author::System,
                text,
                Payload::Harvest {
                    round: self.round,
                    amounts: taken,
                },
            ),
            true,
        );
        self.harvested_this_round = true;
        if self.stock <= self.config.gamma {
            self.finished = true;
        }
        Ok(harvested)
    }

    pub fn post_discussion(&mut self, agent: usize, text: &str, amounts: &[f64]) {
        let name = self.agents[agent].clone();
        self.channel.append(
            Message::new(
                Author::Agent(name.clone()),
                format!("{name}: {text}"),
                Payload::Discussion {
                    amounts: amounts.to_vec(),
                },
            ),
            false,
        );
    }

    /// Double the stock up to `R0` and move to the next round.
    pub fn regrow(&mut self) {
        self.stock = (2.0 * self.stock).min(self.config.r0);
        self.round += 1;
        self.harvested_this_round = false;
        if self.round > self.config.m {
            self.finished = true;
        }
    }

    /// Remove the discussion after the last harvest checkpoint.
    pub fn rollback_discussion(&mut self) -> Result<usize, CommonsError> {
        self.channel
            .rollback(RollbackTarget::ToLastCheckpoint)
            .map_err(|e| CommonsError::InvalidIntervention(e.to_string()))
    }
}

/// Stock update between rounds.
pub fn regrow(stock: f64, r0: f64) -> f64 {
    (2.0 * stock).min(r0)
}

pub fn fmt_amount(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x:.2}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommonsMetrics {
    pub survival_time: u32,
    pub survived: bool,
    pub efficiency: f64,
    pub total_harvest: f64,
}

/// Survival time counts rounds whose post-harvest stock stayed above
/// `gamma`; efficiency is the total harvest relative to `c = m * R0 / 2`.
pub fn commons_metrics(history: &[RoundRecord], config: &CommonsConfig) -> CommonsMetrics {
    let survival_time = history
        .iter()
        .filter(|r| r.round <= config.m && r.stock_after > config.gamma)
        .count() as u32;
    let total: f64 = history
        .iter()
        .filter(|r| r.round <= config.m)
        .map(|r| r.harvested)
        .sum();
    let c = config.sustainable_total();
    let efficiency = if c > 0.0 { 1.0 - (c - total).max(0.0) / c } else { 0.0 };
    CommonsMetrics {
        survival_time,
        survived: survival_time >= config.m,
        efficiency,
        total_harvest: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn state(r0: f64, n: usize) -> CommonsState {
        CommonsState::new(CommonsConfig::new(r0, n)).unwrap()
    }

    #[test]
    fn harvest_examples() {
        let mut s = state(100.0, 2);
        let mut rng = rng_from_seed(1);
        s.harvest_phase(&[(0, 10.0), (1, 10.0)], &mut rng).unwrap();
        assert_eq!(s.stock(), 80.0);
        assert_eq!(s.harvest_log().len(), 2);
        assert_eq!(s.channel().checkpoints(), &[1]);

        let mut s = state(10.0, 2);
        s.harvest_phase(&[(0, 8.0), (1, 8.0)], &mut rng).unwrap();
        let total: f64 = s.harvest_log().iter().map(|e| e.amount).sum();
        assert_eq!(total, 10.0);
        assert!(s.harvest_log().iter().any(|e| e.amount == 2.0));

        let mut s = state(50.0, 3);
        s.harvest_phase(&[(0, 0.0), (1, 0.0), (2, 0.0)], &mut rng).unwrap();
        assert_eq!(s.stock(), 50.0);

        let mut s = state(50.0, 1);
        assert!(matches!(
            s.harvest_phase(&[(0, -1.0)], &mut rng),
            Err(CommonsError::NegativeRequest { .. })
        ));
        assert!(s.harvest_log().is_empty());
    }

    #[test]
    fn regrow_examples() {
        assert_eq!(regrow(30.0, 100.0), 60.0);
        assert_eq!(regrow(60.0, 100.0), 100.0);
        assert_eq!(regrow(0.0, 100.0), 0.0);
    }

    #[test]
    fn metrics_examples() {
        let cfg = CommonsConfig::new(100.0, 4);
        assert_eq!(cfg.sustainable_total(), 600.0);
        let rounds = |per_round: f64| -> Vec<RoundRecord> {
            (1..=12)
                .map(|r| RoundRecord {
                    round: r,
                    stock_before: 100.0,
                    harvested: per_round,
                    stock_after: 100.0 - per_round,
                })
                .collect()
        };
        let m = commons_metrics(&rounds(50.0), &cfg);
        assert_eq!(m.efficiency, 1.0);
        assert_eq!(m.survival_time, 12);
        assert!(m.survived);
        assert_eq!(commons_metrics(&rounds(0.0), &cfg).efficiency, 0.0);
        assert_eq!(commons_metrics(&rounds(25.0), &cfg).efficiency, 0.5);
    }

    #[test]
    fn discussion_rollback_keeps_harvest() {
        let mut s = state(100.0, 2);
        let mut rng = rng_from_seed(3);
        s.harvest_phase(&[(0, 10.0), (1, 5.0)], &mut rng).unwrap();
        s.post_discussion(0, "I took 10", &[10.0]);
        s.post_discussion(1, "I took 5", &[5.0]);
        let log = s.harvest_log().to_vec();
        assert_eq!(s.rollback_discussion().unwrap(), 2);
        assert_eq!(s.channel().len(), 1);
        assert_eq!(s.harvest_log(), &log[..]);
    }

    proptest! {
        #[test]
        fn harvest_total_is_order_invariant(
            stock in 0.0f64..500.0,
            reqs in prop::collection::vec(0.0f64..200.0, 1..6),
            seed_a in any::<u64>(),
            seed_b in any::<u64>(),
        ) {
            let run = |seed: u64| {
                let mut s = state(stock, reqs.len());
                let r: Vec<(usize, f64)> = reqs.iter().copied().enumerate().collect();
                s.harvest_phase(&r, &mut rng_from_seed(seed)).unwrap();
                (s.history()[0].harvested, s.stock())
            };
            let (ha, sa) = run(seed_a);
            let (hb, sb) = run(seed_b);
            let want = reqs.iter().sum::<f64>().min(stock);
            prop_assert!((ha - hb).abs() < 1e-9);
            prop_assert!((ha - want).abs() < 1e-9);
            prop_assert!(sa >= 0.0 && sb >= 0.0);
        }

        #[test]
        fn regrow_bounded(stock in 0.0f64..1000.0, r0 in 0.0f64..1000.0) {
            let s = regrow(stock.min(r0), r0);
            prop_assert!(s <= r0 && s >= 0.0);
        }

        #[test]
        fn efficiency_in_unit_interval_and_monotone(a in 0.0f64..800.0, b in 0.0f64..800.0) {
            let cfg = CommonsConfig::new(100.0, 2);
            let hist = |t: f64| vec![RoundRecord { round: 1, stock_before: 100.0, harvested: t, stock_after: 50.0 }];
            let ea = commons_metrics(&hist(a), &cfg).efficiency;
            let eb = commons_metrics(&hist(b), &cfg).efficiency;
            prop_assert!((0.0..=1.0).contains(&ea));
            if a <= b { prop_assert!(ea <= eb); }
        }
    }
}
