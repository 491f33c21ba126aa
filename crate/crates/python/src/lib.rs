//! Python bindings. Configs, manifests, trajectories, reports and monitor
//! models cross the boundary as JSON text.

#![allow(clippy::useless_conversion)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use agentwatch::game::Role;
use agentwatch::harness::{self, Experiment, ExperimentConfig, RunReport, Split, SplitManifest};
use agentwatch::monitor::MonitorModel;
use agentwatch::trajectory::{read_jsonl, to_jsonl_string};
use agentwatch::uncertainty::{self, FeatureVector};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

#[pyfunction]
fn entropy(p: Vec<f64>) -> PyResult<f64> {
    uncertainty::entropy(&p).map_err(value_error)
}

#[pyfunction]
fn varentropy(p: Vec<f64>) -> PyResult<f64> {
    uncertainty::varentropy(&p).map_err(value_error)
}

#[pyfunction]
fn kurtosis(p: Vec<f64>) -> PyResult<f64> {
    uncertainty::kurtosis(&p).map_err(value_error)
}

/// Pooled features of one turn, or None when no position is usable.
#[pyfunction]
#[pyo3(signature = (positions, turn_index, kurtosis_fallback = 0.0))]
fn extract_features<'py>(
    py: Python<'py>,
    positions: Vec<Vec<f64>>,
    turn_index: u32,
    kurtosis_fallback: f64,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let Some(f) = uncertainty::extract_features(&positions, turn_index, kurtosis_fallback) else {
        return Ok(None);
    };
    let d = PyDict::new_bound(py);
    d.set_item("max_entropy", f.max_entropy)?;
    d.set_item("max_varentropy", f.max_varentropy)?;
    d.set_item("max_kurtosis", f.max_kurtosis)?;
    d.set_item("turn_index", f.turn_index)?;
    Ok(Some(d))
}

/// Split manifest for the environment of `config`.
#[pyfunction]
#[pyo3(signature = (config, sizes = None, seed = 0))]
fn gen_dataset(config: &str, sizes: Option<(usize, usize, usize)>, seed: u64) -> PyResult<String> {
    let config: ExperimentConfig = parse(config, "config")?;
    let manifest = harness::gen_dataset(
        &config.environment,
        sizes.unwrap_or(harness::WHODUNIT_SPLIT_SIZES),
        seed,
    )
    .map_err(value_error)?;
    serde_json::to_string(&manifest).map_err(value_error)
}

/// Play a split. Returns `(trajectories_jsonl, report_json)`.
#[pyfunction]
#[pyo3(signature = (config, manifest, split = "test"))]
fn run(py: Python<'_>, config: &str, manifest: &str, split: &str) -> PyResult<(String, String)> {
    let config: ExperimentConfig = parse(config, "config")?;
    let manifest: SplitManifest = parse(manifest, "manifest")?;
    let split: Split = split.parse().map_err(value_error)?;
    let games = manifest.games(split, &config.environment).map_err(value_error)?;
    let out = py
        .allow_threads(|| Experiment::new(config).and_then(|e| e.run(&games)))
        .map_err(value_error)?;
    let report = serde_json::to_string(&out.report).map_err(value_error)?;
    Ok((to_jsonl_string(&out.trajectories), report))
}

/// Grid-search a monitor for `role`; returns the selected model as JSON.
#[pyfunction]
#[pyo3(signature = (train, validation, role, alpha = 1.0))]
fn train_monitor(py: Python<'_>, train: &str, validation: &str, role: &str, alpha: f64) -> PyResult<String> {
    let role: Role = role.parse().map_err(value_error)?;
    let train = read_jsonl(train.as_bytes()).map_err(value_error)?;
    let validation = read_jsonl(validation.as_bytes()).map_err(value_error)?;
    let grid = py
        .allow_threads(|| harness::train_monitor(&train, &validation, role, alpha))
        .map_err(value_error)?;
    Ok(grid.best.to_json())
}

#[pyfunction]
fn predict_success(
    model: &str,
    max_entropy: f64,
    max_varentropy: f64,
    max_kurtosis: f64,
    turn_index: u32,
) -> PyResult<f64> {
    let model = MonitorModel::from_json(model).map_err(value_error)?;
    Ok(model.predict(&FeatureVector {
        max_entropy,
        max_varentropy,
        max_kurtosis,
        turn_index,
    }))
}

/// Plain-text table of `(label, report_json)` pairs.
#[pyfunction]
fn summarize(reports: Vec<(String, String)>) -> PyResult<String> {
    let parsed = reports
        .into_iter()
        .map(|(label, text)| Ok((label, parse::<RunReport>(&text, "report")?)))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(harness::summarize(&parsed).map_err(value_error)?.to_text())
}

#[pymodule]
fn agentwatch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(varentropy, m)?)?;
    m.add_function(wrap_pyfunction!(kurtosis, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(gen_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(train_monitor, m)?)?;
    m.add_function(wrap_pyfunction!(predict_success, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    Ok(())
}
