//! Nested controllers: an inner OCO engine proposes target states and an
//! action oracle steers the system toward them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{solve_action_linear, DisturbanceAdversary, DisturbanceSource, DynamicsModel, RoundView, REACH_TOL};
use crate::error::{invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{add, axpy, dist, mat_vec, norm, scale, sub, unit};
use crate::oco::{holder_calibrate, holder_regret_bound, minimize_cumulative, FkmState, FtrlState, LossStream};

/// Slack allowed on step-norm audits.
pub const STEP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub horizon: usize,
    /// Loss Lipschitz constant L.
    pub lipschitz: f64,
    /// Controllability radius; defaults to the model's.
    pub rho: Option<f64>,
    /// Margin for the disturbance-robust variants.
    pub alpha: f64,
    pub gamma: f64,
    /// Step-size override.
    pub eta: Option<f64>,
    pub probe_eps: f64,
    /// Near-stabilizing action required by probing.
    pub stabilizer: Option<Vec<f64>>,
    /// Fixed target for state targeting; defaults to the hindsight optimum.
    pub target: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            horizon: 1000,
            lipschitz: 1.0,
            rho: None,
            alpha: 0.1,
            gamma: 1.0,
            eta: None,
            probe_eps: 0.01,
            stabilizer: None,
            target: None,
            seed: 0,
        }
    }
}

impl ControllerConfig {
    pub fn new(horizon: usize) -> Self {
        Self { horizon, ..Self::default() }
    }

    fn rho_for(&self, model: &DynamicsModel) -> f64 {
        self.rho.unwrap_or(model.rho)
    }

    /// G for ψ = (γ/2)‖y − anchor‖² over Y.
    pub fn range_g(&self, body: &ConvexBody) -> f64 {
        0.5 * self.gamma * body.circumradius().powi(2)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub eta: f64,
    pub delta: f64,
    /// Bound on ‖ŷ_t − y_{t−1}‖ enforced each round (0 when unused).
    pub target_step_bound: f64,
    /// Bound on consecutive engine outputs.
    pub engine_step_bound: f64,
    /// Regret bound excluding disturbance terms.
    pub regret_bound: f64,
    pub probe_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// Engine output ŷ_t (the shadow state for robust variants).
    pub target: Vec<f64>,
    /// State the solver aimed at after clipping.
    pub aim: Vec<f64>,
    pub action: Vec<f64>,
    pub undisturbed: Vec<f64>,
    pub disturbance: Vec<f64>,
    pub state: Vec<f64>,
    pub loss: f64,
    pub residual: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub controller: String,
    pub initial_state: Vec<f64>,
    pub rounds: Vec<Round>,
    pub calibration: Calibration,
    pub failed: bool,
    pub aborted: bool,
    pub defects: Vec<String>,
    /// Frobenius errors of each dynamics refit, when the true matrix is known.
    pub fit_errors: Vec<f64>,
}

impl TrajectoryLog {
    fn new(controller: &str, y0: &[f64], calibration: Calibration) -> Self {
        Self {
            controller: controller.to_string(),
            initial_state: y0.to_vec(),
            rounds: Vec::new(),
            calibration,
            failed: false,
            aborted: false,
            defects: Vec::new(),
            fit_errors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn states(&self) -> Vec<Vec<f64>> {
        self.rounds.iter().map(|r| r.state.clone()).collect()
    }

    pub fn total_loss(&self) -> f64 {
        self.rounds.iter().map(|r| r.loss).sum()
    }

    /// Σ‖w_t‖.
    pub fn disturbance_total(&self) -> f64 {
        self.rounds.iter().map(|r| norm(&r.disturbance)).sum()
    }

    /// max_t ‖target_t − target_{t−1}‖.
    pub fn max_target_step(&self) -> f64 {
        self.rounds.windows(2).map(|w| dist(&w[1].target, &w[0].target)).fold(0.0, f64::max)
    }

    /// max_t ‖target_t − y_{t−1}‖.
    pub fn max_reach_step(&self) -> f64 {
        let mut prev = self.initial_state.clone();
        let mut worst: f64 = 0.0;
        for r in &self.rounds {
            worst = worst.max(dist(&r.target, &prev));
            prev = r.state.clone();
        }
        worst
    }

    pub fn max_residual(&self) -> f64 {
        self.rounds.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    fn defect(&mut self, msg: String) {
        self.failed = true;
        if self.defects.len() < 20 {
            self.defects.push(msg);
        }
    }
}

// Shared bookkeeping for one environment round.
struct Stepper<'a> {
    model: &'a DynamicsModel,
    losses: &'a dyn LossStream,
    y_prev: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a DynamicsModel, losses: &'a dyn LossStream) -> Self {
        Self { model, losses, y_prev: model.initial_state.clone() }
    }

    fn play(&mut self, t: usize, target: Vec<f64>, aim: Vec<f64>, action: Vec<f64>, adversary: &mut dyn DisturbanceSource) -> Round {
        let undisturbed = self.model.evaluate(&action, &self.y_prev, t);
        let residual = dist(&undisturbed, &aim);
        let disturbance = adversary.disturb(RoundView {
            t,
            action: &action,
            prev_state: &self.y_prev,
            undisturbed: &undisturbed,
            body: &self.model.state_space,
        });
        let state = add(&undisturbed, &disturbance);
        let loss = self.losses.value(t, &state);
        self.y_prev = state.clone();
        Round { target, aim, action, undisturbed, disturbance, state, loss, residual, feasible: residual <= REACH_TOL }
    }

    fn solve_and_play(&mut self, t: usize, target: Vec<f64>, aim: Vec<f64>, adversary: &mut dyn DisturbanceSource) -> Round {
        let sol = self.model.solve(&self.y_prev, &aim, t);
        self.play(t, target, aim, sol.action, adversary)
    }
}

fn check_horizon(cfg: &ControllerConfig, losses: &dyn LossStream, model: &DynamicsModel) -> Result<()> {
    if losses.dim() != model.state_space.dim() {
        return Err(Error::DimensionMismatch { expected: model.state_space.dim(), got: losses.dim() });
    }
    if !(cfg.lipschitz > 0.0) {
        return Err(invalid("lipschitz", "must be positive"));
    }
    Ok(())
}

/// η = √(Gγ/((1 + R/(rρ))TL²)), δ = ηL/(rργ), bound 2L√((1 + R/(rρ))TG/γ).
pub fn oen_ftrl_calibration(body: &ConvexBody, cfg: &ControllerConfig, rho: f64) -> Result<Calibration> {
    let (r, big_r) = (body.inradius(), body.circumradius());
    let g = cfg.range_g(body);
    let t = cfg.horizon.max(1) as f64;
    let l = cfg.lipschitz;
    let factor = 1.0 + big_r / (r * rho);
    let eta = cfg.eta.unwrap_or_else(|| (g * cfg.gamma / (factor * t * l * l)).sqrt());
    let delta = eta * l / (r * rho * cfg.gamma);
    if delta >= 1.0 {
        return Err(invalid("horizon", format!("contraction {delta:.3} >= 1; horizon too short for rho = {rho}")));
    }
    Ok(Calibration {
        eta,
        delta,
        target_step_bound: r * delta * rho,
        engine_step_bound: eta * l / cfg.gamma,
        regret_bound: eta * factor * t * l * l / cfg.gamma + g / eta,
        probe_radius: 0.0,
    })
}

/// Calibration for (λ, β)-Hölder losses with β < 1; the contraction keeps
/// every target within the certified reach of the previous state.
pub fn oen_ftrl_holder_calibration(body: &ConvexBody, cfg: &ControllerConfig, rho: f64, holder: (f64, f64)) -> Result<Calibration> {
    let (r, big_r) = (body.inradius(), body.circumradius());
    let g = cfg.range_g(body);
    let (lambda, beta) = holder;
    let hc = holder_calibrate(lambda, beta, g, cfg.gamma, big_r / r, rho, cfg.horizon.max(1))?;
    let eta = cfg.eta.unwrap_or(hc.eta);
    let step = (eta * lambda / cfg.gamma).powf(1.0 / (2.0 - beta));
    let delta = step / (r * rho);
    if delta >= 1.0 {
        return Err(invalid("horizon", format!("contraction {delta:.3} >= 1; horizon too short for rho = {rho}")));
    }
    Ok(Calibration {
        eta,
        delta,
        target_step_bound: step,
        engine_step_bound: step,
        regret_bound: holder_regret_bound(lambda, beta, g, cfg.gamma, big_r / r, rho, cfg.horizon),
        probe_radius: 0.0,
    })
}

/// Nested FTRL without disturbances.
pub fn oen_ftrl_run(model: &DynamicsModel, losses: &dyn LossStream, cfg: &ControllerConfig) -> Result<TrajectoryLog> {
    oen_ftrl_run_with(model, losses, cfg, &mut DisturbanceAdversary::None)
}

/// Nested FTRL with an external disturbance source. Disturbances are outside
/// this controller's contract; rounds whose targets become unreachable are
/// logged as defects.
pub fn oen_ftrl_run_with(
    model: &DynamicsModel,
    losses: &dyn LossStream,
    cfg: &ControllerConfig,
    adversary: &mut dyn DisturbanceSource,
) -> Result<TrajectoryLog> {
    check_horizon(cfg, losses, model)?;
    let rho = cfg.rho_for(model);
    let holder = losses.holder();
    let cal = if holder.1 < 1.0 {
        oen_ftrl_holder_calibration(&model.state_space, cfg, rho, holder)?
    } else {
        oen_ftrl_calibration(&model.state_space, cfg, rho)?
    };
    let mut ftrl = FtrlState::with_gamma(model.state_space.contract(cal.delta)?, cal.eta, cfg.gamma)?;
    let mut log = TrajectoryLog::new("oen_ftrl", &model.initial_state, cal.clone());
    let mut step = Stepper::new(model, losses);
    for t in 0..cfg.horizon {
        let target = ftrl.next();
        let gap = dist(&target, &step.y_prev);
        if gap > cal.target_step_bound + STEP_TOL {
            log.defect(format!("round {t}: target step {gap:.3e} exceeds {:.3e}", cal.target_step_bound));
        }
        let round = step.solve_and_play(t, target.clone(), target.clone(), adversary);
        if !round.feasible {
            log.defect(format!("round {t}: residual {:.3e}", round.residual));
        }
        log.rounds.push(round);
        ftrl.update(&losses.gradient(t, &target))?;
    }
    Ok(log)
}

/// Per-round disturbance cap ((ρ − αρ)/(1 + ρ))·π(ŷ) tolerated by the AP variant.
pub fn ap_cap_factor(rho: f64, alpha: f64) -> f64 {
    (rho - alpha * rho) / (1.0 + rho)
}

/// Nested FTRL against bounded disturbances. The inner engine follows the
/// undisturbed shadow trajectory; actions are solved from the true state.
pub fn oen_ftrl_ap_run(
    model: &DynamicsModel,
    losses: &dyn LossStream,
    adversary: &mut dyn DisturbanceSource,
    cfg: &ControllerConfig,
) -> Result<TrajectoryLog> {
    check_horizon(cfg, losses, model)?;
    if !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
        return Err(invalid("alpha", "margin must lie in (0, 1]"));
    }
    let rho = cfg.rho_for(model);
    let cal = oen_ftrl_calibration(&model.state_space, cfg, cfg.alpha * rho)?;
    let cap = ap_cap_factor(rho, cfg.alpha);
    let mut ftrl = FtrlState::with_gamma(model.state_space.contract(cal.delta)?, cal.eta, cfg.gamma)?;
    let mut log = TrajectoryLog::new("oen_ftrl_ap", &model.initial_state, cal.clone());
    let mut step = Stepper::new(model, losses);
    for t in 0..cfg.horizon {
        let target = ftrl.next();
        let round = step.solve_and_play(t, target.clone(), target.clone(), adversary);
        let allowed = cap * model.state_space.boundary_distance(&round.undisturbed).unwrap_or(0.0);
        let w = norm(&round.disturbance);
        if !round.feasible {
            log.defect(format!("round {t}: residual {:.3e}", round.residual));
        }
        log.rounds.push(round);
        if w > allowed + 1e-12 {
            log.aborted = true;
            log.defect(format!("round {t}: disturbance {w:.4e} exceeds cap {allowed:.4e}"));
            break;
        }
        ftrl.update(&losses.gradient(t, &target))?;
    }
    log.calibration.regret_bound = cal.regret_bound + cfg.lipschitz * log.disturbance_total();
    Ok(log)
}

/// Calibration for the unbounded-disturbance variant: plain FTRL over Y,
/// rejected when ηL/γ exceeds ρα.
pub fn uap_calibration(body: &ConvexBody, cfg: &ControllerConfig, rho: f64) -> Result<Calibration> {
    let g = cfg.range_g(body);
    let t = cfg.horizon.max(1) as f64;
    let l = cfg.lipschitz;
    let eta = cfg.eta.unwrap_or_else(|| (g * cfg.gamma / (t * l * l)).sqrt());
    let step = eta * l / cfg.gamma;
    if step > rho * cfg.alpha + 1e-15 {
        return Err(invalid(
            "horizon",
            format!("engine step {step:.4e} exceeds rho*alpha = {:.4e}", rho * cfg.alpha),
        ));
    }
    Ok(Calibration {
        eta,
        delta: 0.0,
        target_step_bound: 0.0,
        engine_step_bound: step,
        regret_bound: eta * t * l * l / cfg.gamma + g / eta,
        probe_radius: 0.0,
    })
}

/// Nested FTRL against unbounded disturbances under strong controllability.
pub fn oen_ftrl_uap_run(
    model: &DynamicsModel,
    losses: &dyn LossStream,
    adversary: &mut dyn DisturbanceSource,
    cfg: &ControllerConfig,
) -> Result<TrajectoryLog> {
    check_horizon(cfg, losses, model)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(invalid("alpha", "margin must lie in (0, 1)"));
    }
    let rho = cfg.rho_for(model);
    let cal = uap_calibration(&model.state_space, cfg, rho)?;
    let mut ftrl = FtrlState::with_gamma(model.state_space.clone(), cal.eta, cfg.gamma)?;
    let mut log = TrajectoryLog::new("oen_ftrl_uap", &model.initial_state, cal.clone());
    let mut step = Stepper::new(model, losses);
    for t in 0..cfg.horizon {
        let target = ftrl.next();
        let gap = sub(&target, &step.y_prev);
        let len = norm(&gap);
        let aim = if len > rho { axpy(&step.y_prev, rho / len, &gap) } else { target.clone() };
        let aim = model.state_space.project(&aim)?;
        let round = step.solve_and_play(t, target.clone(), aim, adversary);
        log.rounds.push(round);
        ftrl.update(&losses.gradient(t, &target))?;
    }
    let big_r = model.state_space.circumradius();
    log.calibration.regret_bound = cal.regret_bound
        + 2.0 * cfg.lipschitz * big_r * log.disturbance_total() / ((1.0 - cfg.alpha) * rho);
    Ok(log)
}

// Ridge least squares for Δy ≈ Â x + b̂ over a window of (x, Δy) pairs. The
// data are centered first so the intercept is exact, and the ridge is taken
// relative to the design's trace so tiny probes are not swamped.
fn fit_affine(xs: &[Vec<f64>], dys: &[Vec<f64>]) -> (DMatrix<f64>, Vec<f64>) {
    let m = xs[0].len();
    let n = dys[0].len();
    let k = xs.len() as f64;
    let mean = |v: &[Vec<f64>], d: usize| -> Vec<f64> {
        (0..d).map(|j| v.iter().map(|r| r[j]).sum::<f64>() / k).collect()
    };
    let (mx, md) = (mean(xs, m), mean(dys, n));
    let z = DMatrix::from_fn(xs.len(), m, |i, j| xs[i][j] - mx[j]);
    let d = DMatrix::from_fn(dys.len(), n, |i, j| dys[i][j] - md[j]);
    let gram = z.transpose() * &z;
    let ridge = 1e-10 * (gram.trace() / m as f64).max(1e-300);
    let gram = gram + DMatrix::identity(m, m) * ridge;
    let coef = gram.lu().solve(&(z.transpose() * d)).unwrap_or_else(|| DMatrix::zeros(m, n));
    let a = coef.transpose();
    let b = sub(&md, &mat_vec(&a, &mx));
    (a, b)
}

/// Probing OCO for unknown time-invariant dynamics: each inner step of the
/// robust FTRL is spread over 2n+1 rounds of small probes that keep a
/// trailing-window affine fit Δy ≈ Â x + b̂ current.
///
/// `true_matrix`, when known, is used only to log fit errors.
pub fn probing_oco_run(
    model: &DynamicsModel,
    losses: &dyn LossStream,
    cfg: &ControllerConfig,
    true_matrix: Option<&DMatrix<f64>>,
) -> Result<TrajectoryLog> {
    check_horizon(cfg, losses, model)?;
    let x1 = cfg
        .stabilizer
        .clone()
        .ok_or_else(|| Error::Config { key: "stabilizer".into(), reason: "probing needs a near-stabilizing action".into() })?;
    if x1.len() != model.action_space.dim() {
        return Err(Error::DimensionMismatch { expected: model.action_space.dim(), got: x1.len() });
    }
    let n = model.action_space.dim();
    let block = 2 * n + 1;
    let eps = cfg.probe_eps;
    let rho = cfg.rho_for(model);
    let inner_t = (cfg.horizon / block).saturating_sub(1).max(1);
    let inner_cfg = ControllerConfig { horizon: inner_t, ..cfg.clone() };
    let mut cal = oen_ftrl_calibration(&model.state_space, &inner_cfg, cfg.alpha * rho)?;
    cal.probe_radius = eps;
    let mut ftrl = FtrlState::with_gamma(model.state_space.contract(cal.delta)?, cal.eta, cfg.gamma)?;
    let mut log = TrajectoryLog::new("probing_oco", &model.initial_state, cal);
    let mut step = Stepper::new(model, losses);
    let mut none = DisturbanceAdversary::None;
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut dys: Vec<Vec<f64>> = Vec::new();

    let mut record = |log: &mut TrajectoryLog, step: &mut Stepper, xs: &mut Vec<Vec<f64>>, dys: &mut Vec<Vec<f64>>, t: usize, target: Vec<f64>, aim: Vec<f64>, x: Vec<f64>| {
        let before = step.y_prev.clone();
        let round = step.play(t, target, aim, x.clone(), &mut none);
        dys.push(sub(&round.state, &before));
        xs.push(x);
        if xs.len() > block {
            xs.remove(0);
            dys.remove(0);
        }
        log.rounds.push(round);
    };

    // Estimation phase.
    let mut t = 0;
    for k in 0..block.min(cfg.horizon) {
        let x = if k == 0 {
            x1.clone()
        } else {
            let i = (k - 1) / 2;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            axpy(&x1, sign * eps, &unit(n, i))
        };
        let y = step.y_prev.clone();
        record(&mut log, &mut step, &mut xs, &mut dys, t, y.clone(), y, x);
        t += 1;
    }
    if t < block {
        return Ok(log);
    }
    let (mut a_hat, mut b_hat) = fit_affine(&xs, &dys);
    if let Some(a) = true_matrix {
        log.fit_errors.push((&a_hat - a).norm());
    }

    let dim_y = model.state_space.dim();
    while t + block <= cfg.horizon {
        let base = step.y_prev.clone();
        let shadow = ftrl.next();
        let mut targets = vec![base.clone()];
        for i in 1..=n {
            let e = if i <= dim_y { unit(dim_y, i - 1) } else { vec![0.0; dim_y] };
            let a1 = (2 * i - 1) as f64 / (2 * n) as f64;
            let a2 = (2 * i) as f64 / (2 * n) as f64;
            targets.push(axpy(&axpy(&base, a1, &sub(&shadow, &base)), eps, &e));
            targets.push(axpy(&axpy(&base, a2, &sub(&shadow, &base)), -eps, &e));
        }
        for aim in targets {
            let aim = model.state_space.project(&aim)?;
            let (x, _) = solve_action_linear(&a_hat, &add(&step.y_prev, &b_hat), &aim, &model.action_space);
            record(&mut log, &mut step, &mut xs, &mut dys, t, shadow.clone(), aim, x);
            t += 1;
        }
        ftrl.update(&losses.gradient(t - 1, &shadow))?;
        let fit = fit_affine(&xs, &dys);
        a_hat = fit.0;
        b_hat = fit.1;
        if let Some(a) = true_matrix {
            log.fit_errors.push((&a_hat - a).norm());
        }
    }
    // Leftover rounds hold position.
    while t < cfg.horizon {
        let y = step.y_prev.clone();
        let (x, _) = solve_action_linear(&a_hat, &add(&y, &b_hat), &y, &model.action_space);
        record(&mut log, &mut step, &mut xs, &mut dys, t, y.clone(), y, x);
        t += 1;
    }
    Ok(log)
}

/// Nested bandit optimization: FKM over the contracted state space, fed only
/// the realized loss values.
pub fn nested_bco_calibration(body: &ConvexBody, cfg: &ControllerConfig, rho: f64) -> Result<Calibration> {
    let (r, big_r) = (body.inradius(), body.circumradius());
    let t = cfg.horizon.max(1) as f64;
    let n = body.intrinsic_dim() as f64;
    let probe = t.powf(-0.25);
    let delta = 4.0 / (r * rho * t.powf(0.25));
    if delta >= 1.0 {
        return Err(invalid("horizon", format!("contraction {delta:.3} >= 1; horizon too short for rho = {rho}")));
    }
    let eta = cfg.eta.unwrap_or(big_r / (2.0 * n * r * cfg.lipschitz * t.powf(0.75)));
    Ok(Calibration {
        eta,
        delta,
        target_step_bound: r * delta * rho,
        engine_step_bound: 2.0 * probe + eta * n * cfg.lipschitz / probe,
        regret_bound: n * big_r * cfg.lipschitz * t.powf(0.75) / (r * rho),
        probe_radius: probe,
    })
}

pub fn nested_bco_run(model: &DynamicsModel, losses: &dyn LossStream, cfg: &ControllerConfig) -> Result<TrajectoryLog> {
    check_horizon(cfg, losses, model)?;
    let rho = cfg.rho_for(model);
    let cal = nested_bco_calibration(&model.state_space, cfg, rho)?;
    let mut fkm = FkmState::new(model.state_space.contract(cal.delta)?, cal.eta, cal.probe_radius, cfg.seed)?;
    let mut log = TrajectoryLog::new("nested_bco", &model.initial_state, cal.clone());
    let mut step = Stepper::new(model, losses);
    let mut none = DisturbanceAdversary::None;
    let mut target = fkm.point();
    for t in 0..cfg.horizon {
        let round = step.solve_and_play(t, target.clone(), target.clone(), &mut none);
        if !round.feasible {
            log.defect(format!("round {t}: residual {:.3e}", round.residual));
        }
        let observed = round.loss;
        log.rounds.push(round);
        target = fkm.step(observed);
    }
    Ok(log)
}

/// {y : π(y) ≥ (Tρ)^{−1/2}}, realized as a contraction about the anchor.
pub fn default_target_body(body: &ConvexBody, horizon: usize, rho: f64) -> Result<ConvexBody> {
    let margin = 1.0 / (horizon.max(1) as f64 * rho).sqrt();
    body.contract((margin / body.inradius()).min(0.999))
}

/// One state-targeting step: the action whose next state is closest to
/// `y_hat` among those landing in `target_body`.
pub fn state_targeting_policy_step(
    model: &DynamicsModel,
    y_prev: &[f64],
    target_body: &ConvexBody,
    y_hat: &[f64],
    t: usize,
) -> Vec<f64> {
    let direct = model.solve(y_prev, y_hat, t);
    if target_body.contains(&direct.reached, 1e-12) {
        return direct.action;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = model.solve(y_prev, y_prev, t);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let aim = axpy(y_prev, mid, &sub(y_hat, y_prev));
        let sol = model.solve(y_prev, &aim, t);
        if target_body.contains(&sol.reached, 1e-12) {
            best = sol;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.action
}

pub fn state_targeting_run(model: &DynamicsModel, losses: &dyn LossStream, cfg: &ControllerConfig) -> Result<TrajectoryLog> {
    state_targeting_run_with(model, losses, cfg, &mut DisturbanceAdversary::None)
}

pub fn state_targeting_run_with(
    model: &DynamicsModel,
    losses: &dyn LossStream,
    cfg: &ControllerConfig,
    adversary: &mut dyn DisturbanceSource,
) -> Result<TrajectoryLog> {
    check_horizon(cfg, losses, model)?;
    let rho = cfg.rho_for(model);
    let body = default_target_body(&model.state_space, cfg.horizon, rho)?;
    let y_hat = match &cfg.target {
        Some(y) => body.project(y)?,
        None => minimize_cumulative(losses, cfg.horizon, &body, 2000).0,
    };
    let mut log = TrajectoryLog::new("state_targeting", &model.initial_state, Calibration::default());
    let mut step = Stepper::new(model, losses);
    for t in 0..cfg.horizon {
        let x = state_targeting_policy_step(model, &step.y_prev, &body, &y_hat, t);
        let round = step.play(t, y_hat.clone(), y_hat.clone(), x, adversary);
        log.rounds.push(round);
    }
    Ok(log)
}

/// Plays x_t = Π_X(−K y_{t−1}).
pub fn linear_policy_run(model: &DynamicsModel, losses: &dyn LossStream, gain: &DMatrix<f64>, horizon: usize) -> Result<TrajectoryLog> {
    if gain.nrows() != model.action_space.dim() || gain.ncols() != model.state_space.dim() {
        return Err(Error::DimensionMismatch { expected: model.action_space.dim(), got: gain.nrows() });
    }
    let mut log = TrajectoryLog::new("linear_policy", &model.initial_state, Calibration::default());
    let mut step = Stepper::new(model, losses);
    let mut none = DisturbanceAdversary::None;
    for t in 0..horizon {
        let x = model.action_space.project(&scale(&mat_vec(gain, &step.y_prev), -1.0))?;
        let y = step.y_prev.clone();
        let round = step.play(t, y.clone(), y, x, &mut none);
        log.rounds.push(round);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::make_example1_isotropic;
    use crate::oco::DistanceLoss;

    #[test]
    fn calibration_matches_closed_form() {
        let body = ConvexBody::centered_ball(2, 1.0).unwrap();
        let cfg = ControllerConfig { horizon: 10_000, ..Default::default() };
        let cal = oen_ftrl_calibration(&body, &cfg, 0.5).unwrap();
        let eta = (0.5f64 / (3.0 * 1e4)).sqrt();
        assert!((cal.eta - eta).abs() < 1e-15);
        assert!((cal.delta - 2.0 * eta).abs() < 1e-15);
        assert!((cal.regret_bound - 2.0 * (3.0f64 * 1e4 * 0.5).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn loss_minimized_at_start_gives_zero_regret() {
        let m = make_example1_isotropic(2, 0.5).unwrap();
        let f = DistanceLoss::new(vec![0.0, 0.0]);
        let log = oen_ftrl_run(&m, &f, &ControllerConfig::new(50)).unwrap();
        assert!(log.rounds.iter().all(|r| r.target == vec![0.0, 0.0]));
        assert_eq!(log.total_loss(), 0.0);
    }

    #[test]
    fn probing_requires_stabilizer() {
        let m = make_example1_isotropic(2, 0.5).unwrap();
        let f = DistanceLoss::new(vec![0.0, 0.0]);
        let err = probing_oco_run(&m, &f, &ControllerConfig::new(50), None).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn uap_rejects_short_horizon() {
        let m = make_example1_isotropic(2, 0.5).unwrap();
        let f = DistanceLoss::new(vec![0.0, 0.0]);
        let cfg = ControllerConfig::new(10);
        assert!(oen_ftrl_uap_run(&m, &f, &mut DisturbanceAdversary::None, &cfg).is_err());
    }

    #[test]
    fn affine_fit_recovers_noiseless_map() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let b = [0.1, -0.2];
        let xs: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.01, 0.0], vec![-0.01, 0.0], vec![0.0, 0.01], vec![0.0, -0.01]];
        let dys: Vec<Vec<f64>> = xs.iter().map(|x| add(&mat_vec(&a, x), &b)).collect();
        let (ah, bh) = fit_affine(&xs, &dys);
        assert!((&ah - &a).norm() < 1e-6);
        assert!(dist(&bh, &b) < 1e-9);
    }
}
