//! Performative prediction: a deployed classifier shifts the data
//! distribution, which relaxes toward the classifier's induced distribution.
//!
//! The state is the location y of the distribution's deterministic part;
//! deploying x moves it to A(x, y) = κ·M·x + (1 − κ)·y, and data are drawn as
//! z = y + ξ. The stable classifier for state y is x = M⁻¹y.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::controllers::TrajectoryLog;
use crate::dynamics::{Controllability, DynamicsModel, LocalForm};
use crate::error::{invalid, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{add, axpy, mat_vec, norm, scale, sub};
use crate::oco::FnLoss;
use crate::rng::{gaussian_vec, stream_rng, streams};

pub type ScoreValue = Arc<dyn Fn(usize, &[f64], &[f64]) -> f64 + Send + Sync>;
/// Returns (∇_x f, ∇_z f).
pub type ScoreGrad = Arc<dyn Fn(usize, &[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// Loss f_t(x, z) of classifier x on data point z; convex and
/// `lipschitz`-Lipschitz in (x, z) jointly.
#[derive(Clone)]
pub struct Score {
    pub value: ScoreValue,
    pub gradient: ScoreGrad,
    pub lipschitz: f64,
}

impl Score {
    /// f(x, z) = ⟨c, z⟩.
    pub fn linear_in_data(c: Vec<f64>) -> Self {
        let l = norm(&c);
        let c2 = c.clone();
        Self {
            value: Arc::new(move |_, _, z| crate::linalg::dot(&c, z)),
            gradient: Arc::new(move |_, x, _| (vec![0.0; x.len()], c2.clone())),
            lipschitz: l,
        }
    }

    /// f(x, z) = ‖x − w·z − c_t‖ with c_t circling `center` at `amplitude`.
    pub fn tracking(w: f64, center: Vec<f64>, amplitude: f64, period: f64) -> Self {
        let offset = move |t: usize| -> Vec<f64> {
            let phase = std::f64::consts::TAU * t as f64 / period;
            let mut c = center.clone();
            c[0] += amplitude * phase.cos();
            if c.len() > 1 {
                c[1] += amplitude * phase.sin();
            }
            c
        };
        let off2 = offset.clone();
        Self {
            value: Arc::new(move |t, x, z| norm(&sub(&axpy(x, -w, z), &offset(t)))),
            gradient: Arc::new(move |t, x, z| {
                let d = sub(&axpy(x, -w, z), &off2(t));
                let len = norm(&d);
                if len < 1e-300 {
                    return (vec![0.0; x.len()], vec![0.0; z.len()]);
                }
                let u = scale(&d, 1.0 / len);
                (u.clone(), scale(&u, -w))
            }),
            lipschitz: (1.0 + w * w).sqrt(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PerformativeEnv {
    /// Mixing weight of each new deployment in the data distribution.
    pub theta: f64,
    /// Weight of the classifier in the state update.
    pub kappa: f64,
    pub map: DMatrix<f64>,
    pub map_inv: DMatrix<f64>,
    /// Lipschitz constant of the inverse map.
    pub inverse_lipschitz: f64,
    pub mu: Vec<f64>,
    pub sigma: DMatrix<f64>,
    pub action_space: ConvexBody,
    pub state_space: ConvexBody,
    /// Fixed noise draws shared by every expectation (common random numbers).
    pub noise: Vec<Vec<f64>>,
    pub initial_state: Vec<f64>,
}

impl PerformativeEnv {
    /// `map` must be a positive multiple of an orthogonal matrix so that the
    /// state space M·X of the action ball is itself a ball.
    pub fn new(
        map: DMatrix<f64>,
        kappa: f64,
        theta: f64,
        action_radius: f64,
        mu: Vec<f64>,
        sigma: DMatrix<f64>,
        sample_count: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = map.nrows();
        if map.ncols() != n || mu.len() != n || sigma.shape() != (n, n) {
            return Err(invalid("map", "map, mu and sigma must share one dimension"));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(invalid("kappa", "must lie in (0, 1]"));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(invalid("theta", "must lie in (0, 1]"));
        }
        if sample_count == 0 {
            return Err(invalid("sample_count", "need at least one noise draw"));
        }
        let gram = map.transpose() * &map;
        let s2 = gram[(0, 0)];
        if !(s2 > 0.0) || (gram - DMatrix::identity(n, n) * s2).norm() > 1e-10 * s2 {
            return Err(invalid("map", "must be a nonzero multiple of an orthogonal matrix"));
        }
        let scale_m = s2.sqrt();
        let map_inv = map.transpose() / s2;
        let eig = sigma.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -1e-12) {
            return Err(invalid("sigma", "covariance must be positive semidefinite"));
        }
        let root = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let mut rng = stream_rng(seed, streams::NOISE);
        let mut noise = Vec::with_capacity(sample_count);
        // antithetic pairs keep the sample mean exactly at mu
        while noise.len() + 1 < sample_count {
            let g = mat_vec(&root, &gaussian_vec(&mut rng, n));
            noise.push(add(&mu, &g));
            noise.push(sub(&mu, &g));
        }
        if noise.len() < sample_count {
            noise.push(mu.clone());
        }
        let action_space = ConvexBody::centered_ball(n, action_radius)?;
        let state_space = ConvexBody::centered_ball(n, scale_m * action_radius)?;
        Ok(Self {
            theta,
            kappa,
            map,
            map_inv,
            inverse_lipschitz: 1.0 / scale_m,
            mu,
            sigma,
            action_space,
            initial_state: vec![0.0; n],
            state_space,
            noise,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// A(x, y) = κMx + (1 − κ)y.
    pub fn update_map(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        axpy(&scale(y, 1.0 - self.kappa), self.kappa, &mat_vec(&self.map, x))
    }

    /// Stable classifier s⁻¹(y).
    pub fn stable_action(&self, y: &[f64]) -> Vec<f64> {
        mat_vec(&self.map_inv, y)
    }

    /// Action reaching `target` from `y`: M⁻¹(target − (1 − κ)y)/κ.
    pub fn inverse_action(&self, y: &[f64], target: &[f64]) -> Vec<f64> {
        scale(&self.stable_action(&axpy(target, -(1.0 - self.kappa), y)), 1.0 / self.kappa)
    }

    /// Lipschitz constant of the inverse action mapping in the current state.
    pub fn state_lipschitz(&self) -> f64 {
        self.inverse_lipschitz * (1.0 - self.kappa) / self.kappa
    }

    /// Surrogate f*_t(y) = E_ξ f_t(s⁻¹(y), y + ξ) and its gradient.
    pub fn surrogate(&self, score: &Score, t: usize, y: &[f64]) -> (f64, Vec<f64>) {
        let x = self.stable_action(y);
        let k = self.noise.len() as f64;
        let mut value = 0.0;
        let mut gx = vec![0.0; x.len()];
        let mut gz = vec![0.0; y.len()];
        for xi in &self.noise {
            let z = add(y, xi);
            value += (score.value)(t, &x, &z);
            let (a, b) = (score.gradient)(t, &x, &z);
            for (s, v) in gx.iter_mut().zip(a) {
                *s += v;
            }
            for (s, v) in gz.iter_mut().zip(b) {
                *s += v;
            }
        }
        let grad = add(&mat_vec(&self.map_inv.transpose(), &gx), &gz);
        (value / k, scale(&grad, 1.0 / k))
    }

    /// Value of the surrogate alone.
    pub fn surrogate_value(&self, score: &Score, t: usize, y: &[f64]) -> f64 {
        self.expected_score(score, t, &self.stable_action(y), y)
    }

    /// E_{z ~ y + ξ} f_t(x, z) for an arbitrary classifier.
    pub fn expected_score(&self, score: &Score, t: usize, x: &[f64], y: &[f64]) -> f64 {
        self.noise.iter().map(|xi| (score.value)(t, x, &add(y, xi))).sum::<f64>() / self.noise.len() as f64
    }

    pub fn surrogate_lipschitz(&self, score: &Score) -> f64 {
        (1.0 + self.inverse_lipschitz) * score.lipschitz
    }

    pub fn surrogate_losses(self: &Arc<Self>, score: Score) -> FnLoss {
        let l = self.surrogate_lipschitz(&score);
        let (e1, s1) = (self.clone(), score.clone());
        let (e2, s2) = (self.clone(), score);
        FnLoss::new(self.dim(), l, move |t, y| e1.surrogate_value(&s1, t, y), move |t, y| e2.surrogate(&s2, t, y).1)
    }

    pub fn model(self: &Arc<Self>) -> Result<DynamicsModel> {
        let e = self.clone();
        let eval = Arc::new(move |x: &[f64], y: &[f64], _t: usize| e.update_map(x, y));
        let e = self.clone();
        let form = Arc::new(move |y: &[f64], _t: usize| LocalForm {
            a: &e.map * e.kappa,
            b: scale(y, 1.0 - e.kappa),
            q_scale: 0.0,
            q_exp: 0.0,
        });
        let e = self.clone();
        let solver = Arc::new(move |y: &[f64], target: &[f64], _t: usize| {
            e.action_space.project(&e.inverse_action(y, target)).expect("dimension fixed")
        });
        let model = DynamicsModel::new(
            "performative",
            self.state_space.clone(),
            self.action_space.clone(),
            self.kappa,
            Controllability::Weak,
            eval,
        )?
        .with_local_form(form)
        .with_solver(solver)
        .with_initial_state(self.initial_state.clone())?;
        Ok(model)
    }

    /// Weights of the initial distribution and of the h-th most recent update
    /// after `updates` updates: ((1 − θ)^updates, [θ(1 − θ)^h]).
    pub fn mixture_weights(&self, updates: usize) -> (f64, Vec<f64>) {
        let q = 1.0 - self.theta;
        let w: Vec<f64> = (0..updates).map(|h| self.theta * q.powi(h as i32)).collect();
        (q.powi(updates as i32), w)
    }

    /// Per-round loss f̃_t(x_t, p_t) on the true mixture distribution. Terms
    /// whose weight falls below 1e-17 are dropped.
    pub fn true_losses(&self, score: &Score, log: &TrajectoryLog) -> Vec<f64> {
        let states = log.states();
        let q = 1.0 - self.theta;
        let mut out = Vec::with_capacity(states.len());
        for (t, round) in log.rounds.iter().enumerate() {
            let x = &round.action;
            let mut total = 0.0;
            let mut weight = self.theta;
            for h in 0..=t {
                if weight < 1e-17 {
                    break;
                }
                total += weight * self.expected_score(score, t, x, &states[t - h]);
                weight *= q;
            }
            let tail = q.powi(t as i32 + 1);
            if tail >= 1e-17 {
                total += tail * self.expected_score(score, t, x, &log.initial_state);
            }
            out.push(total);
        }
        out
    }

    /// Per-round |f̃_t(x_t, p_t) − f*_t(y_t)|.
    pub fn true_loss_gaps(&self, score: &Score, log: &TrajectoryLog) -> Vec<f64> {
        let truth = self.true_losses(score, log);
        log.rounds
            .iter()
            .enumerate()
            .map(|(t, r)| (truth[t] - self.surrogate(score, t, &r.state).0).abs())
            .collect()
    }

    /// Tail constant: the largest |f_t| seen on the initial distribution plus
    /// the largest surrogate magnitude along the run.
    pub fn tail_constant(&self, score: &Score, log: &TrajectoryLog) -> f64 {
        log.rounds
            .iter()
            .enumerate()
            .map(|(t, r)| {
                self.expected_score(score, t, &r.action, &log.initial_state).abs()
                    + self.surrogate(score, t, &r.state).0.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Gap bound for round t under an engine with step η/γ:
    /// (1 − θ)^{t+1}·M + (η(1 + S)L_z²/γ)·(L_y + (1 − θ)/θ).
    pub fn gap_bound(&self, score: &Score, eta: f64, gamma: f64, tail: f64, t: usize) -> f64 {
        let l_z = score.lipschitz;
        let step = eta * (1.0 + self.inverse_lipschitz) * l_z / gamma;
        (1.0 - self.theta).powi(t as i32 + 1) * tail
            + step * l_z * (self.state_lipschitz() + (1.0 - self.theta) / self.theta)
    }

    /// Regret bound for the true losses: the nested-FTRL bound plus the summed
    /// gap bounds.
    pub fn regret_bound(&self, score: &Score, inner_bound: f64, eta: f64, gamma: f64, tail: f64, horizon: usize) -> f64 {
        let l_z = score.lipschitz;
        let step = eta * (1.0 + self.inverse_lipschitz) * l_z / gamma;
        let q = 1.0 - self.theta;
        inner_bound
            + tail * q * (1.0 - q.powi(horizon as i32)) / self.theta
            + horizon as f64 * step * l_z * (self.state_lipschitz() + q / self.theta)
    }
}

/// Scaled rotation in the first two coordinates.
pub fn scaled_rotation(n: usize, scale_m: f64, angle: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n) * scale_m;
    if n >= 2 {
        let (s, c) = angle.sin_cos();
        m[(0, 0)] = scale_m * c;
        m[(0, 1)] = -scale_m * s;
        m[(1, 0)] = scale_m * s;
        m[(1, 1)] = scale_m * c;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(samples: usize) -> PerformativeEnv {
        PerformativeEnv::new(
            scaled_rotation(2, 0.8, 0.3),
            0.5,
            0.3,
            1.0,
            vec![0.1, 0.0],
            DMatrix::identity(2, 2) * 0.01,
            samples,
            3,
        )
        .unwrap()
    }

    #[test]
    fn fixed_point_of_update_map() {
        let e = env(10);
        let x = vec![0.3, -0.4];
        let y = mat_vec(&e.map, &x);
        let back = e.update_map(&x, &y);
        assert!(crate::linalg::dist(&back, &y) < 1e-14);
    }

    #[test]
    fn linear_score_surrogate_is_exact() {
        let e = env(101);
        let score = Score::linear_in_data(vec![1.0, 2.0]);
        let y = vec![0.2, 0.1];
        let (v, g) = e.surrogate(&score, 0, &y);
        assert!((v - (0.3 + 0.2)).abs() < 1e-12);
        assert!(crate::linalg::dist(&g, &[1.0, 2.0]) < 1e-12);
    }

    #[test]
    fn inverse_action_reaches_target() {
        let e = env(10);
        let y = vec![0.1, 0.2];
        let target = vec![0.15, 0.1];
        let x = e.inverse_action(&y, &target);
        assert!(crate::linalg::dist(&e.update_map(&x, &y), &target) < 1e-14);
    }

    #[test]
    fn rejects_non_conformal_map() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert!(PerformativeEnv::new(m, 0.5, 0.3, 1.0, vec![0.0; 2], DMatrix::zeros(2, 2), 4, 0).is_err());
    }
}
