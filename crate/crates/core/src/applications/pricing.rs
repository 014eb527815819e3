//! Adaptive pricing: a buyer holds reserves y that decay at rate θ_t, and each
//! round buys the bundle maximizing v((1 − θ_t)y + x) − ⟨p, x⟩ at posted
//! prices p. Posting p = ∇v(y*) makes the buyer land exactly on y*.

use std::sync::Arc;

use rand::Rng;

use crate::dynamics::{Controllability, DynamicsModel};
use crate::error::{invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{add, axpy, dist, dot, norm, scale, sub};
use crate::oco::FnLoss;
use crate::rng::{gaussian_vec, round_rng, streams};

#[derive(Clone, Debug, PartialEq)]
pub enum Valuation {
    /// v(y) = Π y_i^{α_i}, homogeneous of degree Σα_i.
    CobbDouglas { alpha: Vec<f64> },
    /// v(y) = (Σ α_i y_i^κ)^{β}, homogeneous of degree κβ.
    Ces { alpha: Vec<f64>, kappa: f64, beta: f64 },
}

impl Valuation {
    pub fn dim(&self) -> usize {
        match self {
            Self::CobbDouglas { alpha } | Self::Ces { alpha, .. } => alpha.len(),
        }
    }

    pub fn degree(&self) -> f64 {
        match self {
            Self::CobbDouglas { alpha } => alpha.iter().sum(),
            Self::Ces { kappa, beta, .. } => kappa * beta,
        }
    }

    fn validate(&self) -> Result<()> {
        let alpha = match self {
            Self::CobbDouglas { alpha } | Self::Ces { alpha, .. } => alpha,
        };
        if alpha.is_empty() || alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(invalid("alpha", "weights must be positive"));
        }
        if let Self::Ces { kappa, beta, .. } = self {
            if !(*kappa > 0.0 && *kappa < 1.0) || !(*beta > 0.0) {
                return Err(invalid("kappa", "CES needs kappa in (0, 1) and beta > 0"));
            }
        }
        let k = self.degree();
        if !(k > 0.0 && k < 1.0) {
            return Err(invalid("alpha", format!("homogeneity degree {k} must lie in (0, 1)")));
        }
        Ok(())
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            Self::CobbDouglas { alpha } => y.iter().zip(alpha).map(|(yi, a)| yi.max(0.0).powf(*a)).product(),
            Self::Ces { alpha, kappa, beta } => {
                let s: f64 = y.iter().zip(alpha).map(|(yi, a)| a * yi.max(0.0).powf(*kappa)).sum();
                s.powf(*beta)
            }
        }
    }

    /// Gradient at a strictly positive bundle.
    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Self::CobbDouglas { alpha } => {
                let v = self.value(y);
                y.iter().zip(alpha).map(|(yi, a)| a * v / yi).collect()
            }
            Self::Ces { alpha, kappa, beta } => {
                let s: f64 = y.iter().zip(alpha).map(|(yi, a)| a * yi.powf(*kappa)).sum();
                let c = beta * kappa * s.powf(beta - 1.0);
                y.iter().zip(alpha).map(|(yi, a)| c * a * yi.powf(kappa - 1.0)).collect()
            }
        }
    }

    /// The unique positive bundle whose gradient equals `prices`.
    pub fn inverse_gradient(&self, prices: &[f64]) -> Option<Vec<f64>> {
        if prices.iter().any(|&p| !(p > 0.0)) {
            return None;
        }
        let k = self.degree();
        match self {
            Self::CobbDouglas { alpha } => {
                let log_v: f64 = alpha.iter().zip(prices).map(|(a, p)| a * (a / p).ln()).sum::<f64>() / (1.0 - k);
                let v = log_v.exp();
                Some(alpha.iter().zip(prices).map(|(a, p)| a * v / p).collect())
            }
            Self::Ces { alpha, kappa, beta } => {
                let e = kappa / (kappa - 1.0);
                let q: f64 = alpha.iter().zip(prices).map(|(a, p)| a * (p / a).powf(e)).sum();
                let log_c = ((beta * kappa).ln() + (beta - 1.0) * q.ln()) * (kappa - 1.0) / (k - 1.0);
                let c = log_c.exp();
                Some(alpha.iter().zip(prices).map(|(a, p)| (p / (c * a)).powf(1.0 / (kappa - 1.0))).collect())
            }
        }
    }

    /// Maximizer of v on the unit sphere's positive part and the maximum V.
    pub fn sphere_max(&self) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = match self {
            Self::CobbDouglas { alpha } => alpha.iter().map(|a| a.sqrt()).collect(),
            Self::Ces { alpha, kappa, .. } => alpha.iter().map(|a| a.powf(1.0 / (2.0 - kappa))).collect(),
        };
        let u = scale(&raw, 1.0 / norm(&raw));
        let v = self.value(&u);
        (u, v)
    }

    /// Upper bound on ‖∇v‖ over the box [lo, hi] (lo > 0).
    pub fn gradient_bound(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            Self::CobbDouglas { alpha } => {
                let vmax = self.value(hi);
                vmax * alpha.iter().zip(lo).map(|(a, l)| (a / l).powi(2)).sum::<f64>().sqrt()
            }
            Self::Ces { alpha, kappa, beta } => {
                let s_lo: f64 = lo.iter().zip(alpha).map(|(y, a)| a * y.powf(*kappa)).sum();
                let s_hi: f64 = hi.iter().zip(alpha).map(|(y, a)| a * y.powf(*kappa)).sum();
                let c = beta * kappa * s_lo.powf(beta - 1.0).max(s_hi.powf(beta - 1.0));
                c * alpha.iter().zip(lo).map(|(a, l)| (a * l.powf(kappa - 1.0)).powi(2)).sum::<f64>().sqrt()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct PricingEnv {
    pub valuation: Valuation,
    /// Per-unit cost slope; also the value-per-norm floor of the reserve region.
    pub phi: f64,
    pub c0: f64,
    /// Bound on the drifting linear cost term ‖a_t‖.
    pub drift: f64,
    pub theta: f64,
    pub schedule_seed: Option<u64>,
    pub cost_seed: u64,
    /// Center and radius of the ball of reserves the seller targets.
    pub center: Vec<f64>,
    pub radius: f64,
    /// Hölder exponent used for calibration.
    pub beta: f64,
    // (θ_t, a_t) for the first rounds, filled by `prepare`.
    cache: Vec<(f64, Vec<f64>)>,
}

impl PricingEnv {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        valuation: Valuation,
        phi: f64,
        c0: f64,
        drift: f64,
        theta: f64,
        center: Vec<f64>,
        radius: f64,
        beta: f64,
    ) -> Result<Self> {
        valuation.validate()?;
        if center.len() != valuation.dim() {
            return Err(Error::DimensionMismatch { expected: valuation.dim(), got: center.len() });
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(invalid("theta", "must lie in (0, 1]"));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid("beta", "must lie in (0, 1]"));
        }
        if !(phi >= 0.0 && drift >= 0.0) {
            return Err(invalid("phi", "cost parameters must be nonnegative"));
        }
        Ok(Self {
            valuation,
            phi,
            c0,
            drift,
            theta,
            schedule_seed: None,
            cost_seed: 0,
            center,
            radius,
            beta,
            cache: Vec::new(),
        })
    }

    /// Precomputes the schedule and cost drift for `horizon` rounds.
    pub fn prepare(mut self, horizon: usize) -> Self {
        self.cache.clear();
        let cache = (0..horizon).map(|t| (self.theta_at(t), self.cost_drift(t))).collect();
        self.cache = cache;
        self
    }

    pub fn with_seeds(mut self, schedule: Option<u64>, cost: u64) -> Self {
        self.schedule_seed = schedule;
        self.cost_seed = cost;
        self.cache.clear();
        self
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn degree(&self) -> f64 {
        self.valuation.degree()
    }

    pub fn theta_at(&self, t: usize) -> f64 {
        if let Some((th, _)) = self.cache.get(t) {
            return *th;
        }
        match self.schedule_seed {
            None => self.theta,
            Some(seed) => {
                let u: f64 = round_rng(seed, streams::SCHEDULE, t as u64).random();
                self.theta + (1.0 - self.theta) * u
            }
        }
    }

    /// Linear cost drift a_t, uniform in the ball of radius `drift`.
    pub fn cost_drift(&self, t: usize) -> Vec<f64> {
        if let Some((_, a)) = self.cache.get(t) {
            return a.clone();
        }
        let mut rng = round_rng(self.cost_seed, streams::LOSSES, t as u64);
        let g = gaussian_vec(&mut rng, self.dim());
        let u: f64 = rng.random();
        let r = self.drift * u.powf(1.0 / self.dim() as f64);
        scale(&g, r / norm(&g).max(1e-300))
    }

    /// c_t(x) = C0 + φ‖x‖ + ⟨a_t, x⟩.
    pub fn cost(&self, t: usize, x: &[f64]) -> f64 {
        self.c0 + self.phi * norm(x) + dot(&self.cost_drift(t), x)
    }

    pub fn cost_gradient(&self, t: usize, x: &[f64]) -> Vec<f64> {
        let len = norm(x);
        let a = self.cost_drift(t);
        if len < 1e-300 {
            return a;
        }
        axpy(&a, self.phi / len, x)
    }

    pub fn cost_lipschitz(&self) -> f64 {
        self.phi + self.drift
    }

    /// Prices ∇v(target) under which the buyer restocks exactly to `target`.
    pub fn price_for_target(&self, y_prev: &[f64], target: &[f64], t: usize) -> Result<Vec<f64>> {
        if target.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Rejected("target reserves must be positive".into()));
        }
        let keep = 1.0 - self.theta_at(t);
        if target.iter().zip(y_prev).any(|(z, y)| *z <= keep * y) {
            return Err(Error::Rejected("target below the decayed reserves".into()));
        }
        Ok(self.valuation.gradient(target))
    }

    /// Buyer's bundle from the closed-form inverse gradient, with a numeric
    /// fallback when the unconstrained optimum would sell back reserves.
    pub fn best_response(&self, prices: &[f64], base: &[f64]) -> Vec<f64> {
        if let Some(z) = self.valuation.inverse_gradient(prices) {
            let x = sub(&z, base);
            if x.iter().all(|&v| v >= 0.0) {
                return x;
            }
        }
        self.best_response_numeric(prices, base)
    }

    /// argmax over x ≥ 0 of v(base + x) − ⟨p, x⟩ by projected gradient ascent
    /// with backtracking.
    pub fn best_response_numeric(&self, prices: &[f64], base: &[f64]) -> Vec<f64> {
        let obj = |x: &[f64]| self.valuation.value(&add(base, x)) - dot(prices, x);
        let clip = |x: Vec<f64>| -> Vec<f64> { x.into_iter().map(|v| v.max(0.0)).collect() };
        let floor = 1e-12;
        let mut x: Vec<f64> = base.iter().map(|&b| if b > floor { 0.0 } else { 1.0 }).collect();
        let mut step = 1.0;
        let mut f = obj(&x);
        for _ in 0..200_000 {
            let z = add(base, &x);
            let safe: Vec<f64> = z.iter().map(|v| v.max(floor)).collect();
            let g = sub(&self.valuation.gradient(&safe), prices);
            let mut moved = false;
            step *= 2.0;
            while step > 1e-16 {
                let cand = clip(axpy(&x, step, &g));
                let fc = obj(&cand);
                let d = sub(&cand, &x);
                if fc >= f + 1e-4 * dot(&g, &d) && fc.is_finite() {
                    moved = dist(&cand, &x) > 1e-15;
                    x = cand;
                    f = fc;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        x
    }

    /// Round reward ⟨p, x⟩ − c_t(x).
    pub fn true_reward(&self, prices: &[f64], x: &[f64], t: usize) -> f64 {
        dot(prices, x) - self.cost(t, x)
    }

    /// θ_t·k·v(y) − c_t(θ_t·y): the reward of holding reserves at y.
    pub fn surrogate_reward(&self, y: &[f64], t: usize) -> f64 {
        let th = self.theta_at(t);
        th * self.degree() * self.valuation.value(y) - self.cost(t, &scale(y, th))
    }

    pub fn surrogate_gradient(&self, y: &[f64], t: usize) -> Vec<f64> {
        let th = self.theta_at(t);
        let gv = scale(&self.valuation.gradient(y), th * self.degree());
        axpy(&gv, -th, &self.cost_gradient(t, &scale(y, th)))
    }

    /// Membership in {y : v(y) ≥ φ‖y‖}.
    pub fn in_reserve_region(&self, y: &[f64]) -> bool {
        y.iter().all(|&v| v >= 0.0) && self.valuation.value(y) >= self.phi * norm(y)
    }

    /// Circumradius (V/φ)^{1/(1−k)} of the reserve region.
    pub fn region_radius(&self) -> f64 {
        let (_, v) = self.valuation.sphere_max();
        (v / self.phi).powf(1.0 / (1.0 - self.degree()))
    }

    /// The targeted ball of reserves, checked to lie inside the reserve region
    /// and far enough from the axes for θ-controllability.
    pub fn state_space(&self) -> Result<ConvexBody> {
        let ball = ConvexBody::ball(self.center.clone(), self.radius)?;
        let lo = self.center.iter().cloned().fold(f64::INFINITY, f64::min) - self.radius;
        if lo < 1.0 {
            return Err(invalid("center", "every reserve in the ball must be at least 1"));
        }
        let mut rng = crate::rng::stream_rng(0, streams::CERTIFY);
        for _ in 0..2000 {
            let u = crate::rng::uniform_sphere(&mut rng, self.dim());
            let y = axpy(&self.center, self.radius, &u);
            if !self.in_reserve_region(&y) {
                return Err(invalid("phi", "cost slope too large: target ball leaves the reserve region"));
            }
        }
        Ok(ball)
    }

    /// Hölder constant of v on the target ball: max(1, ‖∇v‖_max·(2r)^{1−β}).
    pub fn valuation_holder(&self) -> f64 {
        let lo: Vec<f64> = self.center.iter().map(|c| c - self.radius).collect();
        let hi: Vec<f64> = self.center.iter().map(|c| c + self.radius).collect();
        let lip = self.valuation.gradient_bound(&lo, &hi);
        (lip * (2.0 * self.radius).powf(1.0 - self.beta)).max(1.0)
    }

    /// Hölder constant of the surrogate: max(1, k·λ_v + L_c·(2r)^{1−β}).
    pub fn surrogate_holder(&self) -> f64 {
        (self.degree() * self.valuation_holder() + self.cost_lipschitz() * (2.0 * self.radius).powf(1.0 - self.beta)).max(1.0)
    }

    /// Negated surrogate rewards as a Hölder loss stream.
    pub fn surrogate_losses(self: &Arc<Self>) -> FnLoss {
        let (e1, e2) = (self.clone(), self.clone());
        let mut loss = FnLoss::new(
            self.dim(),
            self.surrogate_holder(),
            move |t, y| -e1.surrogate_reward(y, t),
            move |t, y| scale(&e2.surrogate_gradient(y, t), -1.0),
        );
        loss.holder = (self.surrogate_holder(), self.beta);
        loss
    }

    pub fn price_cap(&self) -> f64 {
        let lo: Vec<f64> = self.center.iter().map(|c| c - self.radius).collect();
        let hi: Vec<f64> = self.center.iter().map(|c| c + self.radius).collect();
        self.valuation.gradient_bound(&lo, &hi)
    }

    /// Reserve dynamics with prices as actions, strongly θ-controllable on
    /// the target ball.
    pub fn model(self: &Arc<Self>) -> Result<DynamicsModel> {
        let y_space = self.state_space()?;
        let cap = self.price_cap();
        let x_space = ConvexBody::cube(vec![0.0; self.dim()], vec![cap; self.dim()])?;
        let e = self.clone();
        let eval = Arc::new(move |p: &[f64], y: &[f64], t: usize| {
            let base = scale(y, 1.0 - e.theta_at(t));
            add(&base, &e.best_response(p, &base))
        });
        let e = self.clone();
        let solver = Arc::new(move |y: &[f64], target: &[f64], t: usize| {
            e.price_for_target(y, target, t).unwrap_or_else(|_| e.valuation.gradient(y))
        });
        let mut model = DynamicsModel::new("pricing", y_space, x_space, self.theta, Controllability::Strong, eval)?
            .with_solver(solver)
            .with_initial_state(self.center.clone())?;
        model.time_varying = true;
        Ok(model)
    }
}

/// θ_t = 1 − (y_t − x_t)_i / y_{t−1,i}, checked across coordinates.
pub fn recover_theta(y_prev: &[f64], bundle: &[f64], y_next: &[f64]) -> Result<f64> {
    let mut found: Option<f64> = None;
    for i in 0..y_prev.len() {
        if y_prev[i] > 1e-6 {
            let th = 1.0 - (y_next[i] - bundle[i]) / y_prev[i];
            match found {
                None => found = Some(th),
                Some(prev) if (prev - th).abs() > 1e-8 => {
                    return Err(Error::Rejected(format!("inconsistent decay: {prev} vs {th}")));
                }
                _ => {}
            }
        }
    }
    found.ok_or_else(|| Error::Rejected("no reserve coordinate above 1e-6".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cd() -> Valuation {
        Valuation::CobbDouglas { alpha: vec![0.3, 0.4] }
    }

    #[test]
    fn cobb_douglas_prices_at_ones() {
        let g = cd().gradient(&[1.0, 1.0]);
        assert!((g[0] - 0.3).abs() < 1e-15 && (g[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn ces_square_root_prices() {
        let v = Valuation::Ces { alpha: vec![1.0, 1.0], kappa: 0.5, beta: 1.0 };
        let g = v.gradient(&[1.0, 1.0]);
        assert!((g[0] - 0.5).abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_gradient_round_trips() {
        let vals = [cd(), Valuation::Ces { alpha: vec![0.7, 1.3], kappa: 0.4, beta: 1.5 }];
        for v in vals {
            let y = vec![1.7, 0.6];
            let back = v.inverse_gradient(&v.gradient(&y)).unwrap();
            assert!(dist(&back, &y) < 1e-9, "{back:?}");
        }
    }

    #[test]
    fn numeric_best_response_finds_bundle() {
        let env = PricingEnv::new(cd(), 0.05, 0.0, 0.0, 1.0, vec![3.0, 3.0], 1.0, 0.7).unwrap();
        let x = env.best_response_numeric(&[0.3, 0.4], &[0.0, 0.0]);
        assert!(dist(&x, &[1.0, 1.0]) < 1e-4, "{x:?}");
    }

    #[test]
    fn theta_recovery_consistent() {
        let y_prev = [2.0, 3.0];
        let x = [0.5, 0.1];
        let y = [0.6 * 2.0 + 0.5, 0.6 * 3.0 + 0.1];
        assert!((recover_theta(&y_prev, &x, &y).unwrap() - 0.4).abs() < 1e-12);
        assert!(recover_theta(&y_prev, &x, &[1.7, 2.0]).is_err());
    }
}
