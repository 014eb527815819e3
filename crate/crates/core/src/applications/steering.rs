//! Steering a gradient-ascent learner in a repeated bimatrix game. The
//! learner plays y ∈ Δ(n) and updates y ← Π(y + θ·xB_t) after seeing the
//! optimizer's mixed strategy x ∈ Δ(m); the optimizer earns x·A_t·y.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::controllers::TrajectoryLog;
use crate::dynamics::{Controllability, DisturbanceSource, DynamicsModel, RoundView};
use crate::error::{invalid, Error, Result};
use crate::geometry::{project_simplex, ConvexBody};
use crate::linalg::{axpy, dist, dot, mat_vec, norm, simplex_least_squares, sub};
use crate::oco::FnLoss;

/// Radius of the learner's simplex used in its regret bound.
pub const LEARNER_RADIUS: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug)]
pub struct Game {
    /// Optimizer payoffs, m×n.
    pub a: DMatrix<f64>,
    /// Learner payoffs, m×n.
    pub b: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteeringRound {
    pub action: Vec<f64>,
    pub state: Vec<f64>,
    pub true_reward: f64,
    pub surrogate_loss: f64,
    pub disturbance: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SteeringEnv {
    pub m: usize,
    pub n: usize,
    /// Bound on payoff entries and on the learner's gradient norm.
    pub entry_bound: f64,
    /// Learner step size.
    pub theta: f64,
    pub games: Vec<Game>,
    /// Learner payoffs known before the first round.
    pub b_initial: DMatrix<f64>,
    pub state: Vec<f64>,
    pub round: usize,
    pub history: Vec<SteeringRound>,
}

/// Rows ±√n·e_i: their hull is the cross-polytope of radius √n, which
/// contains the unit ball.
pub fn cross_rows(n: usize) -> DMatrix<f64> {
    let s = (n as f64).sqrt();
    DMatrix::from_fn(2 * n, n, |i, j| if i / 2 == j { if i % 2 == 0 { s } else { -s } } else { 0.0 })
}

/// Rotates every row in the plane of the first two coordinates.
pub fn rotate_rows(b: &DMatrix<f64>, angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    let mut out = b.clone();
    for i in 0..b.nrows() {
        let (u, v) = (b[(i, 0)], b[(i, 1)]);
        out[(i, 0)] = c * u - s * v;
        out[(i, 1)] = s * u + c * v;
    }
    out
}

/// Largest ‖xΔ‖ over x ∈ Δ(m): the largest row norm of Δ.
pub fn max_row_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).norm()).fold(0.0, f64::max)
}

impl SteeringEnv {
    pub fn new(games: Vec<Game>, b_initial: DMatrix<f64>, entry_bound: f64) -> Result<Self> {
        let (m, n) = b_initial.shape();
        if n < 2 || m < 1 {
            return Err(invalid("games", "need n >= 2 learner actions"));
        }
        for g in &games {
            if g.a.shape() != (m, n) || g.b.shape() != (m, n) {
                return Err(invalid("games", "all payoff matrices must be m×n"));
            }
            if g.a.amax() > entry_bound + 1e-12 || g.b.amax() > entry_bound + 1e-12 {
                return Err(invalid("entry_bound", "payoff entry exceeds the bound"));
            }
        }
        let horizon = games.len().max(1) as f64;
        let theta = (2.0 / (entry_bound * entry_bound * horizon)).sqrt();
        Ok(Self {
            m,
            n,
            entry_bound,
            theta,
            games,
            b_initial,
            state: vec![1.0 / n as f64; n],
            round: 0,
            history: Vec::new(),
        })
    }

    /// Constant game with identical optimizer rows `row` and cross learner rows.
    pub fn fixed_game(row: &[f64], horizon: usize) -> Result<Self> {
        let n = row.len();
        let b = cross_rows(n);
        let a = DMatrix::from_fn(b.nrows(), n, |_, j| row[j]);
        let bound = (n as f64).sqrt().max(a.amax());
        Self::new(vec![Game { a, b: b.clone() }; horizon], b, bound)
    }

    /// Like [`fixed_game`] but the learner rows rotate steadily so that the
    /// per-round drifts ε_t sum to `total_drift`.
    pub fn drifting_game(row: &[f64], horizon: usize, total_drift: f64) -> Result<Self> {
        let n = row.len();
        let b0 = cross_rows(n);
        let a = DMatrix::from_fn(b0.nrows(), n, |_, j| row[j]);
        let per_round = total_drift / horizon.max(1) as f64;
        // chord of a row of norm √n turned by dφ is 2√n·sin(dφ/2)
        let dphi = 2.0 * (per_round / (2.0 * (n as f64).sqrt())).asin();
        let games = (0..horizon).map(|t| Game { a: a.clone(), b: rotate_rows(&b0, dphi * (t + 1) as f64) }).collect();
        let bound = (n as f64).sqrt().max(a.amax());
        Self::new(games, b0, bound)
    }

    pub fn horizon(&self) -> usize {
        self.games.len()
    }

    pub fn b_before(&self, t: usize) -> &DMatrix<f64> {
        if t == 0 {
            &self.b_initial
        } else {
            &self.games[t - 1].b
        }
    }

    /// ε_t = max over x of ‖xB_t − xB_{t−1}‖.
    pub fn drift(&self, t: usize) -> f64 {
        max_row_norm(&(&self.games[t].b - self.b_before(t)))
    }

    /// Uniform average of the optimizer's rows of A_t.
    pub fn row_average(&self, t: usize) -> Vec<f64> {
        let a = &self.games[t].a;
        (0..self.n).map(|j| a.column(j).sum() / self.m as f64).collect()
    }

    pub fn surrogate_lipschitz(&self) -> f64 {
        (0..self.games.len()).map(|t| norm(&self.row_average(t))).fold(0.0, f64::max).max(1e-12)
    }

    /// Learner update Π(y + θ·xB).
    pub fn learner_step(&self, y: &[f64], x: &[f64], b: &DMatrix<f64>) -> Vec<f64> {
        project_simplex(&axpy(y, self.theta, &mat_vec(&b.transpose(), x)), 1.0)
    }

    /// Optimizer strategy whose payoff row xB_prev best matches the step
    /// (target − y)/θ.
    pub fn action(&self, y: &[f64], target: &[f64], b_prev: &DMatrix<f64>) -> Result<Vec<f64>> {
        let simplex = ConvexBody::simplex(self.n)?;
        if !simplex.contains(target, crate::MEMBERSHIP_TOL) {
            return Err(Error::Rejected("target lies outside the learner's simplex".into()));
        }
        let need: Vec<f64> = sub(target, y).iter().map(|v| v / self.theta).collect();
        Ok(simplex_least_squares(b_prev, &need))
    }

    /// Plays one round toward `target`.
    pub fn step(&mut self, target: &[f64]) -> Result<SteeringRound> {
        let t = self.round;
        if t >= self.games.len() {
            return Err(Error::Rejected("game stream exhausted".into()));
        }
        let y = self.state.clone();
        let b_prev = self.b_before(t).clone();
        let x = self.action(&y, target, &b_prev)?;
        let game = &self.games[t];
        let next = self.learner_step(&y, &x, &game.b);
        let predicted = self.learner_step(&y, &x, &b_prev);
        let true_reward = dot(&x, &mat_vec(&game.a, &y));
        let surrogate_loss = if t == 0 { 0.0 } else { -dot(&self.row_average(t - 1), &y) };
        let round = SteeringRound { action: x, disturbance: sub(&next, &predicted), state: next.clone(), true_reward, surrogate_loss };
        self.state = next;
        self.round += 1;
        self.history.push(round.clone());
        Ok(round)
    }

    /// Surrogate loss for the state reached after round t: −ā_t·y.
    pub fn surrogate_losses(self: &Arc<Self>) -> FnLoss {
        let (e1, e2) = (self.clone(), self.clone());
        FnLoss::new(
            self.n,
            self.surrogate_lipschitz(),
            move |t, y| -dot(&e1.row_average(t), y),
            move |t, _| e2.row_average(t).iter().map(|v| -v).collect(),
        )
    }

    /// Learner dynamics as seen by the optimizer, who knows only B_{t−1}.
    pub fn model(self: &Arc<Self>) -> Result<DynamicsModel> {
        let e = self.clone();
        let eval = Arc::new(move |x: &[f64], y: &[f64], t: usize| e.learner_step(y, x, e.b_before(t)));
        let e = self.clone();
        let solver = Arc::new(move |y: &[f64], target: &[f64], t: usize| {
            e.action(y, target, e.b_before(t)).unwrap_or_else(|_| vec![1.0 / e.m as f64; e.m])
        });
        let mut model = DynamicsModel::new(
            "steering",
            ConvexBody::simplex(self.n)?,
            ConvexBody::simplex(self.m)?,
            self.theta,
            Controllability::Strong,
            eval,
        )?
        .with_solver(solver)
        .with_initial_state(self.state.clone())?;
        model.time_varying = true;
        Ok(model)
    }

    /// Disturbance source replaying the true learner payoffs.
    pub fn disturbances(self: &Arc<Self>) -> SteeringDisturbance {
        SteeringDisturbance { env: self.clone(), spent: 0.0 }
    }

    /// Σ x_t·A_t·y_t over a run whose rounds hold x_t and y_{t+1}.
    pub fn total_reward(&self, log: &TrajectoryLog) -> f64 {
        let mut y = log.initial_state.clone();
        let mut total = 0.0;
        for (t, r) in log.rounds.iter().enumerate() {
            total += dot(&r.action, &mat_vec(&self.games[t].a, &y));
            y = r.state.clone();
        }
        total
    }

    /// Best fixed profile: the largest entry of Σ_t A_t.
    pub fn profile_benchmark(&self, horizon: usize) -> f64 {
        let mut sum = DMatrix::zeros(self.m, self.n);
        for g in &self.games[..horizon] {
            sum += &g.a;
        }
        sum.max()
    }

    /// Learner's regret for its linear rewards y ↦ x_t·B_t·y.
    pub fn learner_regret(&self, log: &TrajectoryLog) -> f64 {
        let mut y = log.initial_state.clone();
        let mut gsum = vec![0.0; self.n];
        let mut earned = 0.0;
        for (t, r) in log.rounds.iter().enumerate() {
            let g = mat_vec(&self.games[t].b.transpose(), &r.action);
            earned += dot(&g, &y);
            for (s, v) in gsum.iter_mut().zip(&g) {
                *s += v;
            }
            y = r.state.clone();
        }
        gsum.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - earned
    }

    /// 2·R_B·G_B·√T with G_B the largest learner gradient norm.
    pub fn learner_bound(&self, horizon: usize) -> f64 {
        let g = self.games[..horizon].iter().map(|g| max_row_norm(&g.b)).fold(0.0, f64::max);
        2.0 * LEARNER_RADIUS * g * (horizon as f64).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct SteeringDisturbance {
    env: Arc<SteeringEnv>,
    spent: f64,
}

impl DisturbanceSource for SteeringDisturbance {
    fn disturb(&mut self, view: RoundView<'_>) -> Vec<f64> {
        let e = &self.env;
        let truth = e.learner_step(view.prev_state, view.action, &e.games[view.t].b);
        let w = sub(&truth, view.undisturbed);
        self.spent += norm(&w);
        w
    }

    fn spent(&self) -> f64 {
        self.spent
    }
}

/// Largest ‖w_t‖ − θ·ε_t over a run; nonpositive when disturbances respect
/// the payoff drift.
pub fn disturbance_excess(env: &SteeringEnv, log: &TrajectoryLog) -> f64 {
    log.rounds
        .iter()
        .enumerate()
        .map(|(t, r)| norm(&r.disturbance) - env.theta * env.drift(t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Residual of the best achievable learner step toward `need` (test helper
/// shared with the acceptance suite).
pub fn step_residual(b: &DMatrix<f64>, need: &[f64]) -> f64 {
    let x = simplex_least_squares(b, need);
    dist(&mat_vec(&b.transpose(), &x), need)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_formula() {
        let g = Game { a: DMatrix::from_element(2, 2, 0.5), b: DMatrix::from_element(2, 2, 1.0) };
        let env = SteeringEnv::new(vec![g; 10_000], DMatrix::from_element(2, 2, 1.0), 1.0).unwrap();
        assert!((env.theta - 2f64.sqrt() / 100.0).abs() < 1e-15);
    }

    #[test]
    fn cross_rows_reach_unit_steps() {
        let b = cross_rows(2);
        assert!(step_residual(&b, &[0.5, 0.0]) < 1e-12);
        assert!(step_residual(&b, &[0.0, 0.0]) < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(step_residual(&b, &[s, -s]) < 1e-12);
    }

    #[test]
    fn fixed_game_has_no_disturbance() {
        let mut env = SteeringEnv::fixed_game(&[0.7, -0.7], 50).unwrap();
        for _ in 0..50 {
            let y = env.state.clone();
            let target = project_simplex(&[y[0] + 0.5 * env.theta, y[1] - 0.5 * env.theta], 1.0);
            let r = env.step(&target).unwrap();
            assert!(norm(&r.disturbance) == 0.0);
            assert!(dist(&r.state, &target) < 1e-10);
        }
    }

    #[test]
    fn drift_sums_to_requested_total() {
        let env = SteeringEnv::drifting_game(&[0.7, -0.7], 1000, 3.0).unwrap();
        let total: f64 = (0..1000).map(|t| env.drift(t)).sum();
        assert!((total - 3.0).abs() < 1e-9);
    }
}
