use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::action::{Action, CommonsAction};
use crate::agents::{
    scripted_for, AgentBackend, AgentDecision, AgentObservation, CommonsPhase, CommonsPolicy, SyntheticRogue,
};
use crate::commons::{commons_metrics, CommonsConfig, CommonsState};
use crate::game::{GameSpec, Role};
use crate::intervention::{apply_intervention, evaluate_trigger, EnvState, InterventionKind, TriggerBudget};
use crate::llm::{LlmAgent, LlmClient};
use crate::monitor::{random_monitor, ModelMonitor, MonitorModel, TurnMonitor};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::trajectory::{write_jsonl, GameRef, Trajectory, TrajectoryResult, TurnRecord};
use crate::uncertainty::{extract_features, FeatureVector};
use crate::whodunit::WhodunitState;

use super::report::{build_report, RunReport};
use super::{AgentSpec, EnvironmentConfig, ExperimentConfig, GameInstance, HarnessError, MonitorSource};

pub const TRAJECTORY_FILE: &str = "trajectories.jsonl";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectories: Vec<Trajectory>,
    pub report: RunReport,
}

/// Shared, read-only resources of one experiment.
pub struct Experiment {
    config: ExperimentConfig,
    clients: BTreeMap<Role, Arc<LlmClient>>,
    models: Vec<MonitorModel>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let mut clients = BTreeMap::new();
        for (role, spec) in &config.agents {
            if let AgentSpec::Llm { config: llm } = spec {
                let client = LlmClient::new(llm.clone()).map_err(|e| HarnessError::Config(e.to_string()))?;
                clients.insert(*role, Arc::new(client));
            }
        }
        let models = match &config.monitor {
            MonitorSource::Models { paths } => paths
                .iter()
                .map(|p| {
                    let text =
                        std::fs::read_to_string(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
                    MonitorModel::from_json(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))
                })
                .collect::<Result<Vec<_>, _>>()?,
            _ => Vec::new(),
        };
        Ok(Self {
            config,
            clients,
            models,
        })
    }

    /// Use in-memory models in place of the configured model files.
    pub fn with_models(config: ExperimentConfig, models: Vec<MonitorModel>) -> Result<Self, HarnessError> {
        let mut e = Self::new(config)?;
        e.models = models;
        Ok(e)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    fn backend(&self, role: Role, seed: u64, spec: Option<&GameSpec>) -> Result<Box<dyn AgentBackend>, HarnessError> {
        Ok(match self.config.agent(role) {
            AgentSpec::Scripted => scripted_for(role, CommonsPolicy::default()),
            AgentSpec::ScriptedFisher { policy } => scripted_for(role, policy),
            AgentSpec::Rogue { profile } => {
                let base = scripted_for(role, CommonsPolicy::default());
                Box::new(
                    SyntheticRogue::new(profile, base, seed, spec.cloned())
                        .map_err(|e| HarnessError::Config(e.to_string()))?,
                )
            }
            AgentSpec::Llm { .. } => {
                let client = self.clients.get(&role).expect("client built for every llm role");
                Box::new(LlmAgent::new(Arc::clone(client)))
            }
        })
    }

    fn monitor(&self, seed: u64) -> Option<Box<dyn TurnMonitor>> {
        if !self.config.intervention.is_active() {
            return None;
        }
        match &self.config.monitor {
            MonitorSource::None => None,
            MonitorSource::Models { .. } => Some(Box::new(ModelMonitor::new(self.models.iter().cloned()))),
            MonitorSource::Random { p, roles } => {
                let mut m = random_monitor(*p, seed).ok()?;
                if let Some(r) = roles {
                    m = m.for_roles(r.clone());
                }
                Some(Box::new(m))
            }
        }
    }

    /// Play one game once. Seeds derive from the base seed, the repetition
    /// and the game's position in the batch.
    pub fn run_game(&self, instance: &GameInstance, index: usize, repetition: u32) -> Trajectory {
        let rep_seed = derive_seed(self.config.seed, stream::REPETITION, repetition as u64);
        let seed = derive_seed(rep_seed, stream::GAME, index as u64);
        let mut rec = Recorder {
            turns: Vec::new(),
            dialog: 0,
            budget: TriggerBudget::new(self.config.intervention.cap),
            monitor: self.monitor(derive_seed(seed, stream::MONITOR, 0)),
            kurtosis_fallback: self.config.kurtosis_fallback,
        };
        let result = match &instance.game {
            GameRef::Whodunit { spec } => {
                let facts_seed = derive_seed(self.config.seed, stream::FACTS, index as u64);
                self.play_whodunit(spec, seed, facts_seed, &mut rec)
            }
            GameRef::Commons { config } => self.play_commons(config, seed, &mut rec),
        };
        let result = result.unwrap_or_else(|reason| TrajectoryResult::Invalid { reason });
        Trajectory {
            game_id: instance.id.clone(),
            repetition,
            seed,
            game: instance.game.clone(),
            turns: rec.turns,
            result,
        }
    }

    fn play_whodunit(
        &self,
        spec: &GameSpec,
        seed: u64,
        facts_seed: u64,
        rec: &mut Recorder,
    ) -> Result<TrajectoryResult, String> {
        let (n_agents, facts) = match self.config.environment {
            EnvironmentConfig::Whodunit {
                n_agents,
                facts_per_agent,
                ..
            } => (n_agents, facts_per_agent),
            EnvironmentConfig::Commons { .. } => return Err("commons config for a deduction game".into()),
        };
        let mut state =
            WhodunitState::for_spec(spec.clone(), n_agents, facts, facts_seed).map_err(|e| e.to_string())?;
        let mut agents = state
            .seats()
            .iter()
            .enumerate()
            .map(|(i, s)| self.backend(s.role, derive_seed(seed, stream::AGENT, i as u64), Some(spec)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let policy = &self.config.intervention;
        while !state.is_terminal() {
            let seat = state.next_agent();
            let obs = state.observation(seat);
            match rec.turn(
                &mut agents[seat],
                &obs,
                state.turn_index(),
                policy.kind,
                policy.resample_temperature,
            )? {
                Turn::Commit(d) => commit_whodunit(&mut state, &d),
                Turn::Intervene(d) => {
                    if apply_intervention(policy.kind, EnvState::Whodunit(&mut state)).is_err() {
                        rec.revoke_last();
                        commit_whodunit(&mut state, &d);
                    }
                }
            }
        }
        Ok(TrajectoryResult::Whodunit {
            outcome: state.outcome().expect("terminal state has an outcome"),
            accused: state.accused(),
        })
    }

    fn play_commons(&self, config: &CommonsConfig, seed: u64, rec: &mut Recorder) -> Result<TrajectoryResult, String> {
        let mut state = CommonsState::new(config.clone()).map_err(|e| e.to_string())?;
        let mut agents = (0..config.n_agents)
            .map(|i| self.backend(Role::Fisher, derive_seed(seed, stream::AGENT, i as u64), None))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let mut harvest_rng = rng_from_seed(derive_seed(seed, stream::HARVEST, 0));
        let policy = &self.config.intervention;
        let (kind, temp) = (policy.kind, policy.resample_temperature);
        while !state.is_finished() {
            let requests = 'harvest: loop {
                let mut requests = Vec::with_capacity(agents.len());
                for (i, agent) in agents.iter_mut().enumerate() {
                    let obs = state.observation(i, CommonsPhase::Harvest);
                    match rec.turn(agent, &obs, state.round(), kind, temp)? {
                        Turn::Commit(d) => requests.push((i, harvest_amount(&d))),
                        Turn::Intervene(_) => {
                            // Undo the discussion that preceded this harvest and hold it again.
                            if state.round() > 1 && state.rollback_discussion().is_ok() {
                                discuss(&mut state, &mut agents, rec, kind, temp)?;
                            }
                            continue 'harvest;
                        }
                    }
                }
                break requests;
            };
            state
                .harvest_phase(&requests, &mut harvest_rng)
                .map_err(|e| e.to_string())?;
            if state.is_finished() {
                break;
            }
            discuss(&mut state, &mut agents, rec, kind, temp)?;
            state.regrow();
        }
        let history = state.history().to_vec();
        Ok(TrajectoryResult::Commons {
            metrics: commons_metrics(&history, config),
            history,
        })
    }

    /// Run every game `repetitions` times on the worker pool. Results keep
    /// (repetition, game) order regardless of scheduling.
    pub fn run(&self, games: &[GameInstance]) -> Result<RunOutput, HarnessError> {
        let jobs: Vec<(u32, usize)> = (0..self.config.repetitions)
            .flat_map(|r| (0..games.len()).map(move |g| (r, g)))
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.parallelism.unwrap_or(0))
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let trajectories: Vec<Trajectory> =
            pool.install(|| jobs.par_iter().map(|&(r, g)| self.run_game(&games[g], g, r)).collect());
        let report = build_report(&self.config, &trajectories);
        if let Some(dir) = &self.config.output_dir {
            write_outputs(dir, &trajectories, &report)?;
        }
        Ok(RunOutput { trajectories, report })
    }
}

pub fn run_experiment(config: &ExperimentConfig, games: &[GameInstance]) -> Result<RunOutput, HarnessError> {
    Experiment::new(config.clone())?.run(games)
}

pub fn write_outputs(dir: &Path, trajectories: &[Trajectory], report: &RunReport) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let file = File::create(dir.join(TRAJECTORY_FILE)).map_err(io)?;
    write_jsonl(BufWriter::new(file), trajectories).map_err(|e| HarnessError::Io(e.to_string()))?;
    let json = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Io(e.to_string()))?;
    std::fs::write(dir.join(REPORT_FILE), json + "\n").map_err(io)?;
    Ok(())
}

fn commit_whodunit(state: &mut WhodunitState, decision: &AgentDecision) {
    let stepped = decision.action.as_ref().is_some_and(|a| state.step(a).is_ok());
    if !stepped {
        // Malformed or illegal actions consume the turn.
        let _ = state.skip_turn();
    }
}

fn harvest_amount(decision: &AgentDecision) -> f64 {
    match &decision.action {
        Some(Action::Commons(CommonsAction::Harvest { amount })) if amount.is_finite() && *amount >= 0.0 => *amount,
        _ => 0.0,
    }
}

fn discuss(
    state: &mut CommonsState,
    agents: &mut [Box<dyn AgentBackend>],
    rec: &mut Recorder,
    kind: InterventionKind,
    temp: Option<f64>,
) -> Result<(), String> {
    'round: loop {
        for (i, agent) in agents.iter_mut().enumerate() {
            let obs = state.observation(i, CommonsPhase::Discussion);
            match rec.turn(agent, &obs, state.round(), kind, temp)? {
                Turn::Commit(d) => {
                    if let Some(Action::Commons(CommonsAction::Discuss { text, amounts })) = &d.action {
                        state.post_discussion(i, text, amounts);
                    }
                }
                Turn::Intervene(_) => {
                    state.rollback_discussion().map_err(|e| e.to_string())?;
                    continue 'round;
                }
            }
        }
        return Ok(());
    }
}

enum Turn {
    Commit(AgentDecision),
    /// A trigger fired under a state-modifying policy; the decision was
    /// recorded as uncommitted.
    Intervene(AgentDecision),
}

struct Recorder {
    turns: Vec<TurnRecord>,
    dialog: u64,
    budget: TriggerBudget,
    monitor: Option<Box<dyn TurnMonitor>>,
    kurtosis_fallback: f64,
}

impl Recorder {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        turn_index: u32,
        obs: &AgentObservation,
        decision: Option<AgentDecision>,
        features: Option<FeatureVector>,
        trigger_fired: bool,
        intervention: Option<InterventionKind>,
        committed: bool,
    ) {
        self.dialog += 1;
        self.turns.push(TurnRecord {
            turn_index,
            dialog_index: self.dialog,
            agent: obs.agent.clone(),
            role: obs.role,
            decision,
            features,
            trigger_fired,
            intervention,
            committed,
        });
    }

    /// The intervention could not be applied; the decision stands.
    fn revoke_last(&mut self) {
        if let Some(t) = self.turns.last_mut() {
            t.intervention = None;
            t.committed = true;
        }
    }

    fn fires(&mut self, role: Role, features: Option<&FeatureVector>) -> bool {
        let (Some(monitor), Some(f)) = (self.monitor.as_mut(), features) else {
            return false;
        };
        match monitor.assess(role, f) {
            Some((score, tau)) => evaluate_trigger(score, tau, &mut self.budget, role),
            None => false,
        }
    }

    /// Ask the agent, score the decision and decide whether it stands.
    fn turn(
        &mut self,
        agent: &mut Box<dyn AgentBackend>,
        obs: &AgentObservation,
        turn_index: u32,
        kind: InterventionKind,
        resample_temperature: Option<f64>,
    ) -> Result<Turn, String> {
        let decision = match agent.decide(obs) {
            Ok(d) => d,
            Err(e) => {
                self.push(turn_index, obs, None, None, false, None, false);
                return Err(e.to_string());
            }
        };
        let features = extract_features(&decision.positions, turn_index, self.kurtosis_fallback);
        if !self.fires(obs.role, features.as_ref()) {
            self.push(turn_index, obs, Some(decision.clone()), features, false, None, true);
            return Ok(Turn::Commit(decision));
        }
        self.push(
            turn_index,
            obs,
            Some(decision.clone()),
            features,
            true,
            Some(kind),
            false,
        );
        if kind != InterventionKind::Resample {
            return Ok(Turn::Intervene(decision));
        }
        let again = match agent.resample(obs, resample_temperature) {
            Ok(d) => d,
            Err(e) => {
                self.push(turn_index, obs, None, None, false, None, false);
                return Err(e.to_string());
            }
        };
        let features = extract_features(&again.positions, turn_index, self.kurtosis_fallback);
        self.push(turn_index, obs, Some(again.clone()), features, false, None, true);
        Ok(Turn::Commit(again))
    }
}
