use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::game::Role;
use crate::trajectory::{Trajectory, TrajectoryResult};
use crate::whodunit::whodunit_metrics;

use super::{EnvironmentConfig, ExperimentConfig, HarnessError};

/// Mean with its standard error across runs and, where requested, a
/// t-based 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    pub mean: f64,
    /// Absent with fewer than two values.
    pub se: Option<f64>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci95: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum RunMetrics {
    Whodunit {
        repetition: u32,
        success_rate: f64,
        precision: Option<f64>,
        avg_length: f64,
        games: usize,
    },
    Commons {
        repetition: u32,
        survival_time: f64,
        survival_rate: f64,
        efficiency: f64,
        games: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub env: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub n_games: usize,
    pub invalid_games: usize,
    pub runs: Vec<RunMetrics>,
    pub summary: Vec<MetricSummary>,
    /// Fired triggers by per-game turn index.
    pub trigger_histogram: BTreeMap<u32, usize>,
    pub triggers_by_role: BTreeMap<Role, usize>,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|m| m.name == name)
    }
}

pub fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

/// Two-sided t interval for the mean at `level`.
pub fn t_interval(values: &[f64], level: f64) -> Option<(f64, f64)> {
    let (mean, se) = mean_se(values);
    let se = se?;
    let t = StudentsT::new(0.0, 1.0, (values.len() - 1) as f64).ok()?;
    let q = t.inverse_cdf(0.5 + level / 2.0);
    Some((mean - q * se, mean + q * se))
}

fn summary(name: &str, values: &[f64]) -> MetricSummary {
    let (mean, se) = mean_se(values);
    MetricSummary {
        name: name.to_string(),
        mean,
        se,
        n: values.len(),
        ci95: None,
    }
}

pub fn build_report(config: &ExperimentConfig, trajectories: &[Trajectory]) -> RunReport {
    let mut by_rep: BTreeMap<u32, Vec<&Trajectory>> = BTreeMap::new();
    for t in trajectories {
        by_rep.entry(t.repetition).or_default().push(t);
    }
    let valid: Vec<&Trajectory> = trajectories.iter().filter(|t| t.result.is_valid()).collect();
    let mut runs = Vec::new();
    for (&repetition, ts) in &by_rep {
        let ok: Vec<Trajectory> = ts
            .iter()
            .filter(|t| t.result.is_valid())
            .map(|t| (*t).clone())
            .collect();
        match config.environment {
            EnvironmentConfig::Whodunit { .. } => {
                if let Some(m) = whodunit_metrics(&ok) {
                    runs.push(RunMetrics::Whodunit {
                        repetition,
                        success_rate: m.success_rate,
                        precision: m.precision,
                        avg_length: m.avg_length,
                        games: m.games,
                    });
                }
            }
            EnvironmentConfig::Commons { .. } => {
                let ms: Vec<_> = ok
                    .iter()
                    .filter_map(|t| match &t.result {
                        TrajectoryResult::Commons { metrics, .. } => Some(*metrics),
                        _ => None,
                    })
                    .collect();
                if !ms.is_empty() {
                    let n = ms.len() as f64;
                    runs.push(RunMetrics::Commons {
                        repetition,
                        survival_time: ms.iter().map(|m| m.survival_time as f64).sum::<f64>() / n,
                        survival_rate: 100.0 * ms.iter().filter(|m| m.survived).count() as f64 / n,
                        efficiency: 100.0 * ms.iter().map(|m| m.efficiency).sum::<f64>() / n,
                        games: ms.len(),
                    });
                }
            }
        }
    }

    let mut out = Vec::new();
    match config.environment {
        EnvironmentConfig::Whodunit { .. } => {
            let pick = |f: fn(&RunMetrics) -> Option<f64>| runs.iter().filter_map(f).collect::<Vec<_>>();
            out.push(summary(
                "success_rate",
                &pick(|r| match r {
                    RunMetrics::Whodunit { success_rate, .. } => Some(*success_rate),
                    _ => None,
                }),
            ));
            out.push(summary(
                "precision",
                &pick(|r| match r {
                    RunMetrics::Whodunit { precision, .. } => *precision,
                    _ => None,
                }),
            ));
            out.push(summary(
                "game_length",
                &pick(|r| match r {
                    RunMetrics::Whodunit { avg_length, .. } => Some(*avg_length),
                    _ => None,
                }),
            ));
        }
        EnvironmentConfig::Commons { .. } => {
            let pick = |f: fn(&RunMetrics) -> Option<f64>| runs.iter().filter_map(f).collect::<Vec<_>>();
            out.push(summary(
                "survival_time",
                &pick(|r| match r {
                    RunMetrics::Commons { survival_time, .. } => Some(*survival_time),
                    _ => None,
                }),
            ));
            out.push(summary(
                "survival_rate",
                &pick(|r| match r {
                    RunMetrics::Commons { survival_rate, .. } => Some(*survival_rate),
                    _ => None,
                }),
            ));
            let mut eff = summary(
                "efficiency",
                &pick(|r| match r {
                    RunMetrics::Commons { efficiency, .. } => Some(*efficiency),
                    _ => None,
                }),
            );
            let per_game: Vec<f64> = valid
                .iter()
                .filter_map(|t| match &t.result {
                    TrajectoryResult::Commons { metrics, .. } => Some(100.0 * metrics.efficiency),
                    _ => None,
                })
                .collect();
            eff.ci95 = t_interval(&per_game, 0.95);
            out.push(eff);
        }
    }

    let mut trigger_histogram = BTreeMap::new();
    let mut triggers_by_role = BTreeMap::new();
    for t in trajectories {
        for r in t.turns.iter().filter(|r| r.trigger_fired) {
            *trigger_histogram.entry(r.turn_index).or_insert(0) += 1;
            *triggers_by_role.entry(r.role).or_insert(0) += 1;
        }
    }
    let n_games = by_rep.values().next().map_or(0, Vec::len);
    RunReport {
        env: config.environment.kind().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        n_games,
        invalid_games: trajectories.len() - valid.len(),
        runs,
        summary: out,
        trigger_histogram,
        triggers_by_role,
    }
}

/// Plain-text and CSV rendering of several reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite())
        .map(|v| format!("{v:.2}"))
        .unwrap_or_default()
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        let line = |cells: &[String]| {
            cells
                .iter()
                .map(|c| {
                    if c.contains([',', '"']) {
                        format!("\"{}\"", c.replace('"', "\"\""))
                    } else {
                        c.clone()
                    }
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = line(&self.header);
        for r in &self.rows {
            s.push('\n');
            s.push_str(&line(r));
        }
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|r| r[i].len())
                    .chain(std::iter::once(self.header[i].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut s = line(&self.header);
        s.push('\n');
        s.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        for r in &self.rows {
            s.push('\n');
            s.push_str(&line(r));
        }
        s.push('\n');
        s
    }
}

/// Tabulate labelled reports of one environment kind.
pub fn summarize(reports: &[(String, RunReport)]) -> Result<SummaryTable, HarnessError> {
    let Some((_, first)) = reports.first() else {
        return Err(HarnessError::Config("no reports to summarize".into()));
    };
    if let Some((label, r)) = reports.iter().find(|(_, r)| r.env != first.env) {
        return Err(HarnessError::MixedEnvironments(format!(
            "{label} is a {} report, expected {}",
            r.env, first.env
        )));
    }
    let metrics: &[&str] = if first.env == "whodunit" {
        &["success_rate", "precision", "game_length"]
    } else {
        &["survival_time", "survival_rate", "efficiency"]
    };
    let mut header = vec![
        "run".to_string(),
        "games".into(),
        "invalid".into(),
        "repetitions".into(),
    ];
    for m in metrics {
        header.push((*m).to_string());
        header.push(format!("{m}_se"));
    }
    if first.env == "commons" {
        header.push("efficiency_ci95_low".into());
        header.push("efficiency_ci95_high".into());
    }
    let rows = reports
        .iter()
        .map(|(label, r)| {
            let mut row = vec![
                label.clone(),
                r.n_games.to_string(),
                r.invalid_games.to_string(),
                r.runs.len().to_string(),
            ];
            for m in metrics {
                let s = r.metric(m);
                row.push(fmt_opt(s.map(|s| s.mean)));
                row.push(fmt_opt(s.and_then(|s| s.se)));
            }
            if r.env == "commons" {
                let ci = r.metric("efficiency").and_then(|s| s.ci95);
                row.push(fmt_opt(ci.map(|c| c.0)));
                row.push(fmt_opt(ci.map(|c| c.1)));
            }
            row
        })
        .collect();
    Ok(SummaryTable { header, rows })
}
