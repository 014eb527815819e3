//! Inner online-convex-optimization engines and the loss streams they consume.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, invalid, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{axpy, dist, dot, norm, scale, sub};
use crate::rng::{gaussian_vec, round_rng, streams};

/// A sequence of convex losses indexed by round (0-based).
pub trait LossStream: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, t: usize, y: &[f64]) -> f64;
    fn gradient(&self, t: usize, y: &[f64]) -> Vec<f64>;
    fn lipschitz(&self) -> f64;

    /// Hölder constants (λ, β). Lipschitz losses report (L, 1).
    fn holder(&self) -> (f64, f64) {
        (self.lipschitz(), 1.0)
    }

    /// True when every round uses the same loss.
    fn stationary(&self) -> bool {
        false
    }

    /// Σ_{t < horizon} f_t(y). Overridden when a closed form is cheaper.
    fn cumulative(&self, horizon: usize, y: &[f64]) -> f64 {
        if self.stationary() {
            return horizon as f64 * self.value(0, y);
        }
        (0..horizon).map(|t| self.value(t, y)).sum()
    }
}

/// f(y) = scale * ‖y − point‖. The subgradient at the kink is zero.
#[derive(Clone, Debug)]
pub struct DistanceLoss {
    pub point: Vec<f64>,
    pub scale: f64,
}

impl DistanceLoss {
    pub fn new(point: Vec<f64>) -> Self {
        Self { point, scale: 1.0 }
    }
}

impl LossStream for DistanceLoss {
    fn dim(&self) -> usize {
        self.point.len()
    }
    fn value(&self, _t: usize, y: &[f64]) -> f64 {
        self.scale * dist(y, &self.point)
    }
    fn gradient(&self, _t: usize, y: &[f64]) -> Vec<f64> {
        let d = sub(y, &self.point);
        let len = norm(&d);
        if len < 1e-300 {
            vec![0.0; d.len()]
        } else {
            scale(&d, self.scale / len)
        }
    }
    fn lipschitz(&self) -> f64 {
        self.scale.abs()
    }
    fn stationary(&self) -> bool {
        true
    }
}

/// f(y) = ‖y − point‖², Lipschitz over a set of the given diameter bound.
#[derive(Clone, Debug)]
pub struct SquaredDistanceLoss {
    pub point: Vec<f64>,
    pub lipschitz: f64,
}

impl LossStream for SquaredDistanceLoss {
    fn dim(&self) -> usize {
        self.point.len()
    }
    fn value(&self, _t: usize, y: &[f64]) -> f64 {
        let d = dist(y, &self.point);
        d * d
    }
    fn gradient(&self, _t: usize, y: &[f64]) -> Vec<f64> {
        scale(&sub(y, &self.point), 2.0)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn stationary(&self) -> bool {
        true
    }
}

/// f(y) = ⟨c, y⟩ + offset.
#[derive(Clone, Debug)]
pub struct LinearLoss {
    pub c: Vec<f64>,
    pub offset: f64,
}

impl LossStream for LinearLoss {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, _t: usize, y: &[f64]) -> f64 {
        dot(&self.c, y) + self.offset
    }
    fn gradient(&self, _t: usize, _y: &[f64]) -> Vec<f64> {
        self.c.clone()
    }
    fn lipschitz(&self) -> f64 {
        norm(&self.c)
    }
    fn stationary(&self) -> bool {
        true
    }
}

/// f_t(y) = ⟨c_t, y⟩ + offset_t, repeating the last entry past the end.
#[derive(Clone, Debug)]
pub struct LinearSequence {
    pub costs: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl LinearSequence {
    fn at(&self, t: usize) -> (&[f64], f64) {
        let i = t.min(self.costs.len() - 1);
        let off = self.offsets.get(t.min(self.offsets.len().saturating_sub(1))).copied().unwrap_or(0.0);
        (&self.costs[i], off)
    }

    /// Drifting costs c_t = base + amplitude·(cos, sin) rotating with the given period.
    pub fn drifting(base: &[f64], amplitude: f64, period: f64, horizon: usize) -> Self {
        let costs = (0..horizon.max(1))
            .map(|t| {
                let phase = 2.0 * std::f64::consts::PI * t as f64 / period;
                let mut c = base.to_vec();
                c[0] += amplitude * phase.cos();
                if c.len() > 1 {
                    c[1] += amplitude * phase.sin();
                }
                c
            })
            .collect();
        Self { costs, offsets: vec![0.0] }
    }
}

impl LossStream for LinearSequence {
    fn dim(&self) -> usize {
        self.costs[0].len()
    }
    fn value(&self, t: usize, y: &[f64]) -> f64 {
        let (c, off) = self.at(t);
        dot(c, y) + off
    }
    fn gradient(&self, t: usize, _y: &[f64]) -> Vec<f64> {
        self.at(t).0.to_vec()
    }
    fn lipschitz(&self) -> f64 {
        self.costs.iter().map(|c| norm(c)).fold(0.0, f64::max)
    }
    fn cumulative(&self, horizon: usize, y: &[f64]) -> f64 {
        (0..horizon).map(|t| self.value(t, y)).sum()
    }
}

type ValueFn = Arc<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(usize, &[f64]) -> Vec<f64> + Send + Sync>;

/// Loss stream backed by closures; used by the application environments.
#[derive(Clone)]
pub struct FnLoss {
    pub dim: usize,
    pub value: ValueFn,
    pub gradient: GradFn,
    pub lipschitz: f64,
    pub holder: (f64, f64),
    pub stationary: bool,
}

impl fmt::Debug for FnLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnLoss").field("dim", &self.dim).field("lipschitz", &self.lipschitz).finish()
    }
}

impl FnLoss {
    pub fn new(
        dim: usize,
        lipschitz: f64,
        value: impl Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(usize, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            lipschitz,
            holder: (lipschitz, 1.0),
            stationary: false,
        }
    }
}

impl LossStream for FnLoss {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, t: usize, y: &[f64]) -> f64 {
        (self.value)(t, y)
    }
    fn gradient(&self, t: usize, y: &[f64]) -> Vec<f64> {
        (self.gradient)(t, y)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn holder(&self) -> (f64, f64) {
        self.holder
    }
    fn stationary(&self) -> bool {
        self.stationary
    }
}

/// Follow the regularized leader with ψ(y) = (γ/2)‖y − anchor‖², so the
/// argmin is a single projection of `anchor − (η/γ)·Σ∇`.
#[derive(Clone, Debug)]
pub struct FtrlState {
    pub domain: ConvexBody,
    pub eta: f64,
    pub gamma: f64,
    pub range_g: f64,
    pub grad_sum: Vec<f64>,
    pub round: usize,
}

impl FtrlState {
    pub fn new(domain: ConvexBody, eta: f64) -> Result<Self> {
        Self::with_gamma(domain, eta, 1.0)
    }

    pub fn with_gamma(domain: ConvexBody, eta: f64, gamma: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(invalid("eta", "step size must be positive and finite"));
        }
        if !(gamma > 0.0) {
            return Err(invalid("gamma", "strong convexity must be positive"));
        }
        let r = domain.circumradius();
        Ok(Self {
            grad_sum: vec![0.0; domain.dim()],
            domain,
            eta,
            gamma,
            range_g: 0.5 * gamma * r * r,
            round: 0,
        })
    }

    pub fn next(&self) -> Vec<f64> {
        let z = axpy(self.domain.anchor(), -self.eta / self.gamma, &self.grad_sum);
        self.domain.project(&z).expect("grad_sum has the domain dimension")
    }

    pub fn update(&mut self, gradient: &[f64]) -> Result<()> {
        check_dim(self.grad_sum.len(), gradient.len())?;
        for (s, g) in self.grad_sum.iter_mut().zip(gradient) {
            *s += g;
        }
        self.round += 1;
        Ok(())
    }

    /// Prop B.1-style bound ηTL²/γ + G/η.
    pub fn regret_bound(&self, horizon: usize, lipschitz: f64) -> f64 {
        self.eta * horizon as f64 * lipschitz * lipschitz / self.gamma + self.range_g / self.eta
    }
}

/// Flaxman-Kalai-McMahan one-point bandit gradient descent.
///
/// Centers live in the domain contracted by `probe_radius / r`, so every
/// played point `center + probe_radius·u` stays inside the domain.
#[derive(Clone, Debug)]
pub struct FkmState {
    pub domain: ConvexBody,
    pub eta: f64,
    pub probe_radius: f64,
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
    pub seed: u64,
    pub round: usize,
    shrunk: ConvexBody,
}

impl FkmState {
    pub fn new(domain: ConvexBody, eta: f64, probe_radius: f64, seed: u64) -> Result<Self> {
        let r = domain.inradius();
        if !(probe_radius > 0.0) || probe_radius >= r {
            return Err(invalid("probe_radius", format!("need 0 < probe radius < inradius {r}")));
        }
        let shrunk = domain.contract(probe_radius / r)?;
        let center = domain.anchor().to_vec();
        let mut s = Self {
            direction: vec![0.0; domain.dim()],
            domain,
            eta,
            probe_radius,
            center,
            seed,
            round: 0,
            shrunk,
        };
        s.direction = s.draw_direction(0);
        Ok(s)
    }

    fn draw_direction(&self, round: usize) -> Vec<f64> {
        let mut rng = round_rng(self.seed, streams::FKM, round as u64);
        loop {
            let t = self.domain.tangent(&gaussian_vec(&mut rng, self.domain.dim()));
            let len = norm(&t);
            if len > 1e-12 {
                return scale(&t, 1.0 / len);
            }
        }
    }

    pub fn contracted_domain(&self) -> &ConvexBody {
        &self.shrunk
    }

    /// Point to play this round.
    pub fn point(&self) -> Vec<f64> {
        axpy(&self.center, self.probe_radius, &self.direction)
    }

    /// One-point gradient estimate (d/δ̃)·loss·u with d the intrinsic dimension.
    pub fn gradient_estimate(&self, observed_loss: f64) -> Vec<f64> {
        let d = self.domain.intrinsic_dim() as f64;
        scale(&self.direction, d / self.probe_radius * observed_loss)
    }

    /// Consumes the loss observed at [`FkmState::point`] and returns the next point.
    pub fn step(&mut self, observed_loss: f64) -> Vec<f64> {
        let g = self.gradient_estimate(observed_loss);
        self.center = self.shrunk.project(&axpy(&self.center, -self.eta, &g)).expect("dimension fixed");
        self.round += 1;
        self.direction = self.draw_direction(self.round);
        self.point()
    }

    /// Step norm bound 2δ̃ + η·d·L/δ̃ for losses bounded by `loss_bound`.
    pub fn step_bound(&self, loss_bound: f64) -> f64 {
        let d = self.domain.intrinsic_dim() as f64;
        2.0 * self.probe_radius + self.eta * d * loss_bound / self.probe_radius
    }
}

/// Projected online gradient descent with a fixed step.
#[derive(Clone, Debug)]
pub struct OgdState {
    pub domain: ConvexBody,
    pub step: f64,
    pub point: Vec<f64>,
}

impl OgdState {
    pub fn new(domain: ConvexBody, step: f64, start: Vec<f64>) -> Result<Self> {
        let point = domain.project(&start)?;
        Ok(Self { domain, step, point })
    }

    pub fn step(&mut self, gradient: &[f64]) -> Result<&[f64]> {
        check_dim(self.point.len(), gradient.len())?;
        self.point = self.domain.project(&axpy(&self.point, -self.step, gradient))?;
        Ok(&self.point)
    }
}

/// Approximate argmin over `body` of Σ_{t < horizon} f_t by projected
/// subgradient descent on the cumulative loss, keeping the best iterate.
pub fn minimize_cumulative(losses: &dyn LossStream, horizon: usize, body: &ConvexBody, iters: usize) -> (Vec<f64>, f64) {
    minimize_cumulative_from(losses, horizon, body, body.anchor(), 2.0 * body.circumradius(), iters)
}

/// [`minimize_cumulative`] started from `start` with initial step length `reach`.
pub fn minimize_cumulative_from(
    losses: &dyn LossStream,
    horizon: usize,
    body: &ConvexBody,
    start: &[f64],
    reach: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let total = |y: &[f64]| losses.cumulative(horizon, y);
    let grad = |y: &[f64]| -> Vec<f64> {
        if losses.stationary() {
            scale(&losses.gradient(0, y), horizon as f64)
        } else {
            let mut g = vec![0.0; y.len()];
            for t in 0..horizon {
                for (gi, v) in g.iter_mut().zip(losses.gradient(t, y)) {
                    *gi += v;
                }
            }
            g
        }
    };
    let mut y = body.project(start).expect("start has the body dimension");
    let mut best = (total(&y), y.clone());
    for k in 0..iters {
        let g = body.tangent(&grad(&y));
        let gn = norm(&g);
        if gn < 1e-300 {
            break;
        }
        let step = reach / (gn * (1.0 + k as f64).sqrt());
        y = body.project(&axpy(&y, -step, &g)).expect("dimension fixed");
        let v = total(&y);
        if v < best.0 {
            best = (v, y.clone());
        }
    }
    (best.1, best.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderCalibration {
    pub eta: f64,
    pub delta: f64,
    pub step_bound: f64,
    pub k: f64,
}

/// Step size for (λ, β)-Hölder losses under θ-local controllability.
pub fn holder_calibrate(
    lambda: f64,
    beta: f64,
    range_g: f64,
    gamma: f64,
    radius: f64,
    theta: f64,
    horizon: usize,
) -> Result<HolderCalibration> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid("beta", "Hölder exponent must lie in (0, 1]"));
    }
    if lambda < 1.0 {
        return Err(invalid("lambda", "Hölder constant must be at least 1"));
    }
    if horizon == 0 || !(theta > 0.0) {
        return Err(invalid("horizon", "need T >= 1 and theta > 0"));
    }
    let l = lambda;
    let k = l * (3.0 + (radius / theta).powf(beta)) * (l / gamma).powf(beta / (2.0 - beta));
    let eta = (range_g / (k * horizon as f64)).powf((2.0 - beta) / 2.0);
    let step_bound = (eta * lambda / gamma).powf(1.0 / (2.0 - beta));
    Ok(HolderCalibration { eta, delta: step_bound / theta, step_bound, k })
}

/// 2L(G/γ)^{β/2}(T(3 + (R/θ)^β))^{(2−β)/2}.
pub fn holder_regret_bound(
    lipschitz: f64,
    beta: f64,
    range_g: f64,
    gamma: f64,
    radius: f64,
    theta: f64,
    horizon: usize,
) -> f64 {
    2.0 * lipschitz
        * (range_g / gamma).powf(beta / 2.0)
        * (horizon as f64 * (3.0 + (radius / theta).powf(beta))).powf((2.0 - beta) / 2.0)
}
