//! Per-round losses, hindsight comparators and regret bounds for a finished run.

use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerConfig, TrajectoryLog};
use crate::geometry::ConvexBody;
use crate::harness::scenarios::{AuditKind, Prepared};
use crate::oco::{minimize_cumulative, minimize_cumulative_from, LossStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Benchmark {
    /// Best fixed state: grid search refined by subgradient descent.
    BestFixedStateGrid { spacing: f64 },
    /// Subgradient descent only (large intrinsic dimension).
    AnalyticMinimizer,
    /// Best stable reserve level for pricing.
    StableReserveGrid,
    /// Best fixed action profile for steering.
    BestProfileGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    /// Loss charged in each round.
    pub losses: Vec<f64>,
    /// Comparator's loss in each round.
    pub comparator: Vec<f64>,
    pub comparator_state: Option<Vec<f64>>,
    pub benchmark: Benchmark,
    /// Regret bound the run is held to; `None` for baselines without one.
    pub bound: Option<f64>,
}

impl Audit {
    pub fn regret(&self) -> f64 {
        self.losses.iter().sum::<f64>() - self.comparator.iter().sum::<f64>()
    }

    pub fn cumulative_regret(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.losses
            .iter()
            .zip(&self.comparator)
            .map(|(l, c)| {
                acc += l - c;
                acc
            })
            .collect()
    }
}

// Loss evaluations allowed for each search stage, in units of one cheap loss.
const EVAL_BUDGET: f64 = 5e6;

/// Approximate argmin over `body` of Σ_{t < horizon} f_t.
pub fn best_fixed_state(losses: &dyn LossStream, horizon: usize, body: &ConvexBody) -> (Vec<f64>, f64, Benchmark) {
    best_fixed_state_budgeted(losses, horizon, body, 1.0)
}

/// [`best_fixed_state`] for losses costing `unit_cost` cheap evaluations each.
pub fn best_fixed_state_budgeted(
    losses: &dyn LossStream,
    horizon: usize,
    body: &ConvexBody,
    unit_cost: f64,
) -> (Vec<f64>, f64, Benchmark) {
    let free = body.intrinsic_dim();
    let cost = unit_cost * if losses.stationary() { 1.0 } else { horizon.max(1) as f64 };
    let iters = ((EVAL_BUDGET / (2.0 * cost)) as usize).clamp(20, 3000);
    let (mut best, mut best_val) = minimize_cumulative(losses, horizon, body, iters);
    if free > 3 {
        return (best, best_val, Benchmark::AnalyticMinimizer);
    }
    let (lo, hi) = body.bounding_box();
    let span = (0..body.dim()).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    let per_axis = [200.0, 40.0, 12.0][free - 1];
    let mut spacing = span / per_axis;
    while (span / spacing + 1.0).powi(free as i32) * cost > EVAL_BUDGET {
        spacing *= 1.5;
    }
    let mut grid_best: Option<(Vec<f64>, f64)> = None;
    for p in body.grid(spacing) {
        let v = losses.cumulative(horizon, &p);
        if grid_best.as_ref().is_none_or(|(_, b)| v < *b) {
            grid_best = Some((p, v));
        }
    }
    if let Some((p, v)) = grid_best {
        if v < best_val {
            best = p.clone();
            best_val = v;
        }
        let (q, w) = minimize_cumulative_from(losses, horizon, body, &p, spacing, iters);
        if w < best_val {
            best = q;
            best_val = w;
        }
    }
    (best, best_val, Benchmark::BestFixedStateGrid { spacing })
}

fn per_round(losses: &dyn LossStream, horizon: usize, y: &[f64]) -> Vec<f64> {
    (0..horizon).map(|t| losses.value(t, y)).collect()
}

fn fixed_state_audit(losses: &dyn LossStream, body: &ConvexBody, realized: Vec<f64>, bound: Option<f64>, unit_cost: f64) -> Audit {
    let horizon = realized.len();
    let (y, _, benchmark) = best_fixed_state_budgeted(losses, horizon, body, unit_cost);
    let comparator = per_round(losses, horizon, &y);
    Audit { losses: realized, comparator, comparator_state: Some(y), benchmark, bound }
}

fn has_bound(log: &TrajectoryLog) -> Option<f64> {
    (log.calibration.regret_bound > 0.0).then_some(log.calibration.regret_bound)
}

/// Audits `log` against the comparator that fits its scenario.
pub fn audit_run(prepared: &Prepared, cfg: &ControllerConfig, log: &TrajectoryLog) -> Audit {
    let horizon = log.rounds.len();
    let body = &prepared.model.state_space;
    match &prepared.audit {
        AuditKind::Plain => {
            let realized = log.rounds.iter().map(|r| r.loss).collect();
            fixed_state_audit(prepared.losses.as_ref(), body, realized, has_bound(log), 1.0)
        }
        AuditKind::Performative { env, score } => {
            let realized = env.true_losses(score, log);
            let tail = env.tail_constant(score, log);
            let bound = has_bound(log).map(|inner| {
                env.regret_bound(score, inner, log.calibration.eta, cfg.gamma, tail, horizon)
            });
            fixed_state_audit(prepared.losses.as_ref(), body, realized, bound, env.noise.len() as f64)
        }
        AuditKind::Recommendations { env, losses } => {
            let served = env.served(log);
            let realized = served.iter().enumerate().map(|(t, p)| losses.value(t, p)).collect();
            let bound = has_bound(log).map(|_| recommendation_bound(body, cfg, prepared.model.rho, env.theta, log.calibration.eta, horizon));
            fixed_state_audit(losses.as_ref(), body, realized, bound, 1.0)
        }
        AuditKind::Pricing { .. } => {
            let realized = log.rounds.iter().map(|r| r.loss).collect();
            let mut audit = fixed_state_audit(prepared.losses.as_ref(), body, realized, has_bound(log), 1.0);
            audit.benchmark = Benchmark::StableReserveGrid;
            audit
        }
        AuditKind::Steering { env } => {
            let mut y = log.initial_state.clone();
            let mut realized = Vec::with_capacity(horizon);
            for (t, r) in log.rounds.iter().enumerate() {
                realized.push(-crate::linalg::dot(&r.action, &crate::linalg::mat_vec(&env.games[t].a, &y)));
                y = r.state.clone();
            }
            // The best fixed profile is the largest entry of Σ A_t.
            let (m, n) = (env.m, env.n);
            let mut best = (0, 0, f64::NEG_INFINITY);
            for i in 0..m {
                for j in 0..n {
                    let s: f64 = env.games[..horizon].iter().map(|g| g.a[(i, j)]).sum();
                    if s > best.2 {
                        best = (i, j, s);
                    }
                }
            }
            let comparator = env.games[..horizon].iter().map(|g| -g.a[(best.0, best.1)]).collect();
            let bound = has_bound(log).map(|b| steering_bound(b, cfg, env.n, log.calibration.eta, horizon));
            Audit { losses: realized, comparator, comparator_state: None, benchmark: Benchmark::BestProfileGrid, bound }
        }
    }
}

/// η(2 + R/(rρ) + 1/θ)TL²/γ + G/η for the served item distributions.
pub fn recommendation_bound(body: &ConvexBody, cfg: &ControllerConfig, rho: f64, theta: f64, eta: f64, horizon: usize) -> f64 {
    let factor = 2.0 + body.circumradius() / (body.inradius() * rho) + 1.0 / theta;
    let l = cfg.lipschitz;
    eta * factor * horizon as f64 * l * l / cfg.gamma + cfg.range_g(body) / eta
}

/// Surrogate bound plus the profile-to-surrogate gap L/√n and the one-step
/// lag ηTL²/γ.
pub fn steering_bound(surrogate_bound: f64, cfg: &ControllerConfig, n: usize, eta: f64, horizon: usize) -> f64 {
    let l = cfg.lipschitz;
    surrogate_bound + l / (n as f64).sqrt() + eta * horizon as f64 * l * l / cfg.gamma
}
