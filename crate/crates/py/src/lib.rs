//! Python bindings. The plain functions return JSON strings so they can be
//! tested from Rust without an interpreter.

use nested_control::harness::acceptance::run_acceptance;
use nested_control::harness::{run_all, ScenarioConfig, SCENARIOS};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

/// `(name, description)` for every built-in scenario.
pub fn scenario_list() -> Vec<(String, String)> {
    SCENARIOS.iter().map(|(n, d)| (n.to_string(), d.to_string())).collect()
}

/// Runs every seed of a JSON config. Returns one `(summary_json, csv)` pair per seed.
pub fn run_config_json(config: &str) -> Result<Vec<(String, String)>, String> {
    let cfg = ScenarioConfig::from_json(config).map_err(|e| e.to_string())?;
    let records = run_all(&cfg).map_err(|e| e.to_string())?;
    records
        .iter()
        .map(|rec| {
            let summary = serde_json::json!({
                "config_hash": rec.config_hash,
                "scenario": rec.scenario,
                "controller": rec.controller,
                "seed": rec.seed,
                "summary": rec.summary,
            });
            Ok((summary.to_string(), rec.to_csv().map_err(|e| e.to_string())?))
        })
        .collect()
}

/// Acceptance results as `(passed, line)`.
pub fn acceptance_lines(filter: Option<&str>) -> Vec<(bool, String)> {
    run_acceptance(filter).iter().map(|r| (r.passed, r.line())).collect()
}

#[pyfunction]
fn list_scenarios() -> Vec<(String, String)> {
    scenario_list()
}

/// Run a JSON scenario config; returns a list of (summary_json, csv) per seed.
#[pyfunction]
fn run_config(py: Python<'_>, config: &str) -> PyResult<Vec<(String, String)>> {
    py.detach(|| run_config_json(config)).map_err(PyValueError::new_err)
}

#[pyfunction]
#[pyo3(signature = (filter=None))]
fn accept(py: Python<'_>, filter: Option<String>) -> Vec<(bool, String)> {
    py.detach(|| acceptance_lines(filter.as_deref()))
}

#[pymodule]
fn nested_control_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(list_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(accept, m)?)?;
    Ok(())
}
