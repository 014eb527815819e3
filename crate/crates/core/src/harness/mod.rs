//! Scenario runner: builds a configured scenario, runs a controller on it,
//! audits the trajectory and writes per-round CSV plus a JSON summary.

pub mod acceptance;
pub mod audit;
pub mod config;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controllers::{
    linear_policy_run, nested_bco_run, oen_ftrl_ap_run, oen_ftrl_run_with, oen_ftrl_uap_run, probing_oco_run,
    state_targeting_run_with, TrajectoryLog,
};
use crate::error::{Error, Result};
use crate::linalg::norm;

pub use audit::{audit_run, Audit, Benchmark};
pub use config::{AdversarySpec, LossSpec, ScenarioConfig};
pub use scenarios::{prepare, AuditKind, Prepared, SCENARIOS};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "NESTED_CONTROL_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: usize,
    pub target: Vec<f64>,
    pub action: Vec<f64>,
    pub state: Vec<f64>,
    pub w_norm: f64,
    pub loss: f64,
    pub cum_regret: f64,
    pub residual: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub final_regret: f64,
    pub bound: Option<f64>,
    /// final_regret / bound.
    pub bound_ratio: Option<f64>,
    pub wall_time_ms: f64,
    pub failed: bool,
    pub defects: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub summary: Summary,
    #[serde(skip)]
    pub log: Option<TrajectoryLog>,
    #[serde(skip)]
    pub audit: Option<Audit>,
}

impl RunRecord {
    /// Per-round CSV. Wall time is kept out so reruns are byte-identical.
    pub fn to_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        let first = self.rows.first();
        let width = |f: fn(&Row) -> usize| first.map(f).unwrap_or(0);
        let (nt, na, ns) = (width(|r| r.target.len()), width(|r| r.action.len()), width(|r| r.state.len()));
        let mut header = vec!["t".to_string()];
        header.extend((0..nt).map(|i| format!("target_{i}")));
        header.extend((0..na).map(|i| format!("action_{i}")));
        header.extend((0..ns).map(|i| format!("state_{i}")));
        header.extend(["w_norm", "loss", "cum_regret", "residual", "feasible"].map(String::from));
        w.write_record(&header).map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![r.t.to_string()];
            rec.extend(r.target.iter().chain(&r.action).chain(&r.state).map(|v| format!("{v:e}")));
            rec.extend([r.w_norm, r.loss, r.cum_regret, r.residual].map(|v| format!("{v:e}")));
            rec.push(r.feasible.to_string());
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Summary JSON without the wall time.
    pub fn deterministic_summary(&self) -> String {
        let mut s = self.summary.clone();
        s.wall_time_ms = 0.0;
        serde_json::to_string_pretty(&s).expect("summary serializes")
    }

    /// SHA-256 of the CSV and the deterministic summary.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(self.to_csv()?.as_bytes());
        h.update(self.deterministic_summary().as_bytes());
        Ok(config::hex(&h.finalize()))
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns the CSV path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let stem = format!("{}_{}_seed{}", self.scenario, self.controller, self.seed);
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, self.to_csv()?).map_err(io)?;
        let json = serde_json::json!({
            "config_hash": self.config_hash,
            "scenario": self.scenario,
            "controller": self.controller,
            "seed": self.seed,
            "summary": self.summary,
        });
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&json).expect("json")).map_err(io)?;
        Ok(csv_path)
    }
}

fn gain_matrix(config: &ScenarioConfig, prepared: &Prepared) -> Result<DMatrix<f64>> {
    let (m, n) = (prepared.model.action_space.dim(), prepared.model.state_space.dim());
    match &config.linear_gain {
        None => Ok(DMatrix::zeros(m, n)),
        Some(rows) => {
            if rows.len() != m || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config { key: "linear_gain".into(), reason: format!("expected a {m}x{n} matrix") });
            }
            Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
        }
    }
}

/// Runs the configured controller on a prepared scenario.
pub fn run_controller(config: &ScenarioConfig, prepared: &mut Prepared) -> Result<TrajectoryLog> {
    if config.controller == "linear_policy" {
        let gain = gain_matrix(config, prepared)?;
        return linear_policy_run(&prepared.model, prepared.losses.as_ref(), &gain, config.horizon);
    }
    let Prepared { model, losses, adversary, true_matrix, cfg, .. } = prepared;
    let losses = losses.as_ref();
    let adversary = adversary.as_mut();
    match config.controller.as_str() {
        "oen_ftrl" => oen_ftrl_run_with(model, losses, cfg, adversary),
        "oen_ftrl_ap" => oen_ftrl_ap_run(model, losses, adversary, cfg),
        "oen_ftrl_uap" => oen_ftrl_uap_run(model, losses, adversary, cfg),
        "probing_oco" => probing_oco_run(model, losses, cfg, true_matrix.as_ref()),
        "nested_bco" => nested_bco_run(model, losses, cfg),
        "state_targeting" => state_targeting_run_with(model, losses, cfg, adversary),
        other => Err(Error::Config { key: "controller".into(), reason: format!("unknown controller '{other}'") }),
    }
}

/// Runs and audits one seed.
pub fn run_scenario_seed(config: &ScenarioConfig, seed: u64) -> Result<RunRecord> {
    let start = Instant::now();
    let mut prepared = prepare(config, seed)?;
    let log = run_controller(config, &mut prepared)?;
    let audit = audit_run(&prepared, &prepared.cfg, &log);
    let cum = audit.cumulative_regret();
    let rows = log
        .rounds
        .iter()
        .enumerate()
        .map(|(t, r)| Row {
            t,
            target: r.target.clone(),
            action: r.action.clone(),
            state: r.state.clone(),
            w_norm: norm(&r.disturbance),
            loss: audit.losses[t],
            cum_regret: cum[t],
            residual: r.residual,
            feasible: r.feasible,
        })
        .collect();
    let final_regret = audit.regret();
    let summary = Summary {
        final_regret,
        bound: audit.bound,
        bound_ratio: audit.bound.map(|b| final_regret / b),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        failed: log.failed,
        defects: log.defects.clone(),
    };
    Ok(RunRecord {
        config_hash: config.hash(),
        scenario: config.scenario.clone(),
        controller: config.controller.clone(),
        seed,
        rows,
        summary,
        log: Some(log),
        audit: Some(audit),
    })
}

/// Runs the first configured seed.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunRecord> {
    run_scenario_seed(config, config.seeds[0])
}

/// Runs every configured seed on its own thread, in seed order.
pub fn run_all(config: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    std::thread::scope(|s| {
        let handles: Vec<_> = config.seeds.iter().map(|&seed| s.spawn(move || run_scenario_seed(config, seed))).collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    })
}

/// Output directory: explicit argument, then the config, then the
/// environment, then `./runs`.
pub fn output_dir(explicit: Option<&Path>, config: &ScenarioConfig) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}
