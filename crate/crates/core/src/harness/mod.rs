//! Experiment orchestration: dataset splits, seeded batch runs with
//! monitoring and interventions, monitor training from logs and reports.

mod config;
mod dataset;
mod engine;
mod report;
mod train;

pub use config::{AgentSpec, EnvironmentConfig, ExperimentConfig, MonitorSource};
pub use dataset::{
    commons_pool, commons_test_stocks, gen_dataset, spec_key, GameInstance, Split, SplitManifest, COMMONS_TRAIN_SIZE,
    COMMONS_VALIDATION_SIZE, WHODUNIT_SPLIT_SIZES,
};
pub use engine::{run_experiment, write_outputs, Experiment, RunOutput, REPORT_FILE, TRAJECTORY_FILE};
pub use report::{build_report, mean_se, summarize, t_interval, MetricSummary, RunMetrics, RunReport, SummaryTable};
pub use train::{train_monitor, training_corpus, validation_games};

use thiserror::Error;

use crate::monitor::MonitorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("cannot combine reports: {0}")]
    MixedEnvironments(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}
