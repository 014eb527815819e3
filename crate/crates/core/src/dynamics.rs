//! Dynamics models, action solvers, instance families and disturbance adversaries.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::geometry::{ConvexBody, Shape};
use crate::linalg::{self, add, axpy, dist, mat_vec, norm, scale, sigma_min, sub, unit};
use crate::rng::{round_rng, stream_rng, streams};

/// Residual below which a target counts as reached.
pub const REACH_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Controllability {
    Weak,
    Strong,
}

/// Action-linear form at a state: D(x, y) ≈ A x + b with residual bounded by
/// `q_scale·‖A(x − x*)‖^{1 + q_exp}`.
#[derive(Clone, Debug)]
pub struct LocalForm {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub q_scale: f64,
    pub q_exp: f64,
}

pub type Evaluator = Arc<dyn Fn(&[f64], &[f64], usize) -> Vec<f64> + Send + Sync>;
pub type LocalFormFn = Arc<dyn Fn(&[f64], usize) -> LocalForm + Send + Sync>;
/// (y_prev, target, t) -> action.
pub type ActionSolver = Arc<dyn Fn(&[f64], &[f64], usize) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct DynamicsModel {
    pub name: String,
    pub state_space: ConvexBody,
    pub action_space: ConvexBody,
    pub rho: f64,
    pub mode: Controllability,
    pub time_varying: bool,
    pub initial_state: Vec<f64>,
    pub evaluator: Evaluator,
    pub local_form: Option<LocalFormFn>,
    pub solver: Option<ActionSolver>,
    pub oracle_seed: u64,
}

impl fmt::Debug for DynamicsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicsModel")
            .field("name", &self.name)
            .field("rho", &self.rho)
            .field("mode", &self.mode)
            .field("state_dim", &self.state_space.dim())
            .field("action_dim", &self.action_space.dim())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionSolution {
    pub action: Vec<f64>,
    pub reached: Vec<f64>,
    pub residual: f64,
}

impl DynamicsModel {
    pub fn new(
        name: impl Into<String>,
        state_space: ConvexBody,
        action_space: ConvexBody,
        rho: f64,
        mode: Controllability,
        evaluator: Evaluator,
    ) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(invalid("rho", "controllability radius must be positive"));
        }
        Ok(Self {
            name: name.into(),
            initial_state: state_space.anchor().to_vec(),
            state_space,
            action_space,
            rho,
            mode,
            time_varying: false,
            evaluator,
            local_form: None,
            solver: None,
            oracle_seed: 0,
        })
    }

    pub fn with_local_form(mut self, f: LocalFormFn) -> Self {
        self.local_form = Some(f);
        self
    }

    pub fn with_solver(mut self, s: ActionSolver) -> Self {
        self.solver = Some(s);
        self
    }

    pub fn with_initial_state(mut self, y0: Vec<f64>) -> Result<Self> {
        if !self.state_space.contains(&y0, crate::MEMBERSHIP_TOL) {
            return Err(invalid("initial_state", "must lie in the state space"));
        }
        self.initial_state = y0;
        Ok(self)
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64], t: usize) -> Vec<f64> {
        (self.evaluator)(x, y, t)
    }

    /// Radius of the certified reachable ball around `y`.
    pub fn reach_radius(&self, y: &[f64]) -> f64 {
        match self.mode {
            Controllability::Strong => self.rho,
            Controllability::Weak => {
                self.rho * self.state_space.boundary_distance(y).unwrap_or(0.0)
            }
        }
    }

    /// Best action toward `target` from `y_prev` (see [`nonconvex_oracle`]).
    pub fn solve(&self, y_prev: &[f64], target: &[f64], t: usize) -> ActionSolution {
        nonconvex_oracle(self, y_prev, target, t)
    }

    /// Samples (y, target) pairs inside the certified ball and returns the
    /// worst solver residual.
    pub fn certify(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = stream_rng(seed, streams::CERTIFY);
        let mut worst: f64 = 0.0;
        for i in 0..samples {
            let y = self.state_space.sample(&mut rng);
            let radius = self.reach_radius(&y);
            let dir = self.state_space.tangent(&crate::rng::gaussian_vec(&mut rng, y.len()));
            let len = norm(&dir).max(1e-300);
            let u: f64 = rand::Rng::random(&mut rng);
            let target = self.state_space.project(&axpy(&y, radius * u / len, &dir)).unwrap();
            worst = worst.max(self.solve(&y, &target, i).residual);
        }
        worst
    }
}

/// argmin over x ∈ X of ‖A x + b − target‖. Returns (x, residual).
pub fn solve_action_linear(
    a: &DMatrix<f64>,
    b: &[f64],
    target: &[f64],
    action_space: &ConvexBody,
) -> (Vec<f64>, f64) {
    let d = sub(target, b);
    let residual = |x: &[f64]| dist(&mat_vec(a, x), &d);
    let free = linalg::lstsq(a, &d);
    if action_space.contains(&free, 1e-12) {
        let x = action_space.project(&free).unwrap();
        return (x.clone(), residual(&x));
    }
    let x = match action_space.shape() {
        Shape::Ball { center, radius } => {
            let shifted = sub(&d, &mat_vec(a, center));
            add(center, &ball_constrained_lstsq(a, &shifted, *radius))
        }
        Shape::Simplex { .. } => linalg::simplex_least_squares(&a.transpose(), &d),
        _ => {
            let smax = linalg::spectral_norm(a);
            let at = a.transpose();
            linalg::projected_gradient(
                action_space.anchor(),
                smax * smax,
                5000,
                |x| mat_vec(&at, &sub(&mat_vec(a, x), &d)),
                |z| action_space.project(z).unwrap(),
            )
        }
    };
    let r = residual(&x);
    (x, r)
}

// min ‖A u − d‖ subject to ‖u‖ ≤ radius, via the secular equation on the SVD.
fn ball_constrained_lstsq(a: &DMatrix<f64>, d: &[f64], radius: f64) -> Vec<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let proj = u.transpose() * DVector::from_column_slice(d);
    let sig = &svd.singular_values;
    let at = |lam: f64| -> DVector<f64> {
        let mut c = DVector::zeros(sig.len());
        for i in 0..sig.len() {
            c[i] = sig[i] * proj[i] / (sig[i] * sig[i] + lam);
        }
        vt.transpose() * c
    };
    let smax = sig.iter().cloned().fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0f64, smax * norm(d) / radius + 1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = at(hi);
    let n = x.norm();
    let s = if n > radius { radius / n } else { 1.0 };
    (x * s).as_slice().to_vec()
}

/// Action oracle. Dispatches to the model's own solver, then to its local
/// action-linear form, then to seeded multistart projected gradient with a
/// grid fallback for action spaces of dimension at most 3.
pub fn nonconvex_oracle(model: &DynamicsModel, y_prev: &[f64], target: &[f64], t: usize) -> ActionSolution {
    let finish = |action: Vec<f64>| {
        let reached = model.evaluate(&action, y_prev, t);
        ActionSolution { residual: dist(&reached, target), reached, action }
    };
    if let Some(solver) = &model.solver {
        return finish(solver(y_prev, target, t));
    }
    if let Some(lf) = &model.local_form {
        let form = lf(y_prev, t);
        let (x, _) = solve_action_linear(&form.a, &form.b, target, &model.action_space);
        return finish(x);
    }
    let objective = |x: &[f64]| {
        let r = dist(&model.evaluate(x, y_prev, t), target);
        r * r
    };
    let xs = &model.action_space;
    let mut rng = round_rng(model.oracle_seed, streams::ORACLE, t as u64);
    let mut best = (f64::INFINITY, xs.anchor().to_vec());
    for start in 0..16 {
        let x0 = if start == 0 { xs.anchor().to_vec() } else { xs.sample(&mut rng) };
        let x = local_descent(&objective, xs, x0, 200);
        let v = objective(&x);
        if v < best.0 {
            best = (v, x);
        }
    }
    if best.0.sqrt() > REACH_TOL && xs.dim() <= 3 {
        let (lo, hi) = xs.bounding_box();
        let span = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let spacing = span / [200.0, 40.0, 12.0][xs.dim() - 1];
        for x in xs.grid(spacing) {
            let v = objective(&x);
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    finish(best.1)
}

// Projected gradient with central differences and backtracking.
fn local_descent(f: &dyn Fn(&[f64]) -> f64, body: &ConvexBody, x0: Vec<f64>, iters: usize) -> Vec<f64> {
    let h = 1e-7;
    let mut x = body.project(&x0).unwrap();
    let mut fx = f(&x);
    let mut step = 1.0;
    for _ in 0..iters {
        if fx < 1e-24 {
            break;
        }
        let g: Vec<f64> = (0..x.len())
            .map(|i| {
                let mut p = x.clone();
                let mut m = x.clone();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect();
        let g = body.tangent(&g);
        if norm(&g) < 1e-14 {
            break;
        }
        let mut moved = false;
        for _ in 0..40 {
            let cand = body.project(&axpy(&x, -step, &g)).unwrap();
            let fc = f(&cand);
            if fc < fx {
                x = cand;
                fx = fc;
                step *= 2.0;
                moved = true;
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

pub type MatrixField = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

fn sampled_states(body: &ConvexBody, count: usize) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(0xD1, streams::CERTIFY);
    let mut out = vec![body.anchor().to_vec()];
    out.extend((0..count).map(|_| body.sample(&mut rng)));
    out
}

/// y' = Π_Y(y + A_y x) over Y = X = Ball(0, 1), checked on sampled states
/// for σ_min(A_y) ≥ ρ·π(y).
pub fn make_example1(n: usize, rho: f64, a_field: MatrixField) -> Result<DynamicsModel> {
    let y_body = ConvexBody::centered_ball(n, 1.0)?;
    for y in sampled_states(&y_body, 200) {
        let a = a_field(&y);
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
        }
        let need = rho * y_body.boundary_distance(&y)?;
        if sigma_min(&a) < need * (1.0 - 1e-12) {
            return Err(Error::Rejected(format!(
                "smallest singular value {:.4e} below rho*pi(y) = {need:.4e}",
                sigma_min(&a)
            )));
        }
    }
    let body = y_body.clone();
    let field = a_field.clone();
    let eval: Evaluator = Arc::new(move |x, y, _t| body.project(&add(y, &mat_vec(&field(y), x))).unwrap());
    let lf: LocalFormFn = Arc::new(move |y, _t| LocalForm { a: a_field(y), b: y.to_vec(), q_scale: 0.0, q_exp: 0.0 });
    Ok(DynamicsModel::new("example1", y_body.clone(), y_body, rho, Controllability::Weak, eval)?.with_local_form(lf))
}

/// Example-1 dynamics with the isotropic field A_y = ρ·π(y)·I, whose reachable
/// set is exactly the certified ball.
pub fn make_example1_isotropic(n: usize, rho: f64) -> Result<DynamicsModel> {
    let body = ConvexBody::centered_ball(n, 1.0)?;
    let field: MatrixField = Arc::new(move |y| {
        DMatrix::identity(n, n) * (rho * body.boundary_distance(y).unwrap_or(0.0))
    });
    let mut m = make_example1(n, rho, field)?;
    m.name = "example1-isotropic".into();
    Ok(m)
}

/// Example-1 dynamics plus a superlinear residual q(x) = C‖A_y x‖^{1+c}·e_1.
pub fn make_example1_perturbed(n: usize, rho: f64, a_field: MatrixField, q_scale: f64, q_exp: f64) -> Result<DynamicsModel> {
    let mut m = make_example1(n, rho, a_field.clone())?;
    let body = m.state_space.clone();
    let field = a_field.clone();
    m.evaluator = Arc::new(move |x, y, _t| {
        let ax = mat_vec(&field(y), x);
        let q = q_scale * norm(&ax).powf(1.0 + q_exp);
        let mut next = add(y, &ax);
        next[0] += q;
        body.project(&next).unwrap()
    });
    m.local_form = Some(Arc::new(move |y, _t| LocalForm { a: a_field(y), b: y.to_vec(), q_scale, q_exp }));
    m.name = "example1-perturbed".into();
    Ok(m)
}

/// y' = Π_Y(K_y y + A_y x) over Y = Ball(0, R), X = Ball(0, cR), checked for
/// c·R·σ_min(A_y) ≥ R·‖K_y − I‖ + ρ·π(y).
pub fn make_example2(n: usize, rho: f64, radius: f64, k_field: MatrixField, a_field: MatrixField, c: f64) -> Result<DynamicsModel> {
    let y_body = ConvexBody::centered_ball(n, radius)?;
    let x_body = ConvexBody::centered_ball(n, c * radius)?;
    for y in sampled_states(&y_body, 200) {
        let drift = linalg::spectral_norm(&(k_field(&y) - DMatrix::identity(n, n)));
        let need = radius * drift + rho * y_body.boundary_distance(&y)?;
        let have = c * radius * sigma_min(&a_field(&y));
        if have < need * (1.0 - 1e-12) {
            return Err(Error::Rejected(format!("c*R*sigma_min = {have:.4e} below {need:.4e}")));
        }
    }
    let body = y_body.clone();
    let (kf, af) = (k_field.clone(), a_field.clone());
    let eval: Evaluator = Arc::new(move |x, y, _t| {
        body.project(&add(&mat_vec(&kf(y), y), &mat_vec(&af(y), x))).unwrap()
    });
    let lf: LocalFormFn = Arc::new(move |y, _t| LocalForm {
        a: a_field(y),
        b: mat_vec(&k_field(y), y),
        q_scale: 0.0,
        q_exp: 0.0,
    });
    Ok(DynamicsModel::new("example2", y_body, x_body, rho, Controllability::Weak, eval)?.with_local_form(lf))
}

/// y' = Π_Y(y + gain·x): strongly controllable with radius `gain·inradius(X)`.
pub fn make_integrator(state_space: ConvexBody, action_space: ConvexBody, gain: f64) -> Result<DynamicsModel> {
    let rho = gain * action_space.inradius();
    let n = state_space.dim();
    let body = state_space.clone();
    let eval: Evaluator = Arc::new(move |x, y, _t| body.project(&axpy(y, gain, x)).unwrap());
    let lf: LocalFormFn = Arc::new(move |y, _t| LocalForm {
        a: DMatrix::identity(n, n) * gain,
        b: y.to_vec(),
        q_scale: 0.0,
        q_exp: 0.0,
    });
    Ok(DynamicsModel::new("integrator", state_space, action_space, rho, Controllability::Strong, eval)?.with_local_form(lf))
}

/// Y = X = Ball(0, 1), D = Π_Y(y + x), y_0 = 0.
pub fn make_prop2_instance(n: usize) -> Result<DynamicsModel> {
    let b = ConvexBody::centered_ball(n, 1.0)?;
    let mut m = make_integrator(b.clone(), b, 1.0)?;
    m.name = "prop2".into();
    Ok(m)
}

/// Non-controllable instance on Y = X = Ball(0, 1) in the plane: from any
/// state within `alpha` of the origin the next state is pushed `beta` away
/// from it, regardless of the action. Elsewhere D = Π_Y(y + x).
pub fn make_prop1_instance(alpha: f64, beta: f64) -> Result<DynamicsModel> {
    if !(alpha > 0.0) || alpha > beta / 2.0 || alpha + beta > 1.0 {
        return Err(invalid("alpha", "need 0 < alpha <= beta/2 and alpha + beta <= 1"));
    }
    let body = ConvexBody::centered_ball(2, 1.0)?;
    let b2 = body.clone();
    let eval: Evaluator = Arc::new(move |x, y, _t| {
        let len = norm(y);
        if len <= alpha {
            let dir = if len < 1e-15 { unit(2, 0) } else { scale(y, 1.0 / len) };
            b2.project(&axpy(y, beta, &dir)).unwrap()
        } else {
            b2.project(&add(y, x)).unwrap()
        }
    });
    let mut m = DynamicsModel::new("prop1", body.clone(), body, 1.0, Controllability::Weak, eval)?;
    m.initial_state = vec![0.5, 0.0];
    Ok(m)
}

/// What a disturbance source sees in round t.
#[derive(Clone, Copy, Debug)]
pub struct RoundView<'a> {
    pub t: usize,
    pub action: &'a [f64],
    pub prev_state: &'a [f64],
    pub undisturbed: &'a [f64],
    pub body: &'a ConvexBody,
}

/// Source of per-round disturbances w_t added to the undisturbed state.
pub trait DisturbanceSource {
    fn disturb(&mut self, view: RoundView<'_>) -> Vec<f64>;
    /// Σ‖w_t‖ so far.
    fn spent(&self) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub enum DisturbanceAdversary {
    /// Pushes outward from the anchor by ((ρ − αρ)/(1 + ρ))·π(ŷ) until the budget is spent.
    RadialPush { alpha: f64, rho: f64, budget: f64, spent: f64 },
    /// Moves toward the nearest boundary point by up to (ρ/(1 + βρ))·π(ŷ).
    BoundaryPush { beta: f64, rho: f64, spent: f64 },
    /// Drives the state to a fixed target until the budget is spent.
    Pin1D { target: f64, budget: f64, spent: f64 },
    Script { steps: Vec<Vec<f64>>, spent: f64 },
    None,
}

impl DisturbanceAdversary {
    pub fn radial_push(alpha: f64, rho: f64, budget: f64) -> Self {
        Self::RadialPush { alpha, rho, budget, spent: 0.0 }
    }
    pub fn boundary_push(beta: f64, rho: f64) -> Self {
        Self::BoundaryPush { beta, rho, spent: 0.0 }
    }
    pub fn pin_1d(target: f64, budget: f64) -> Self {
        Self::Pin1D { target, budget, spent: 0.0 }
    }
    pub fn script(steps: Vec<Vec<f64>>) -> Self {
        Self::Script { steps, spent: 0.0 }
    }
}

fn clip_norm(w: Vec<f64>, cap: f64) -> Vec<f64> {
    let n = norm(&w);
    if n > cap && n > 0.0 {
        scale(&w, cap.max(0.0) / n)
    } else {
        w
    }
}

// Shrinks w so that base + w stays in the body.
fn keep_inside(base: &[f64], w: Vec<f64>, body: &ConvexBody) -> Vec<f64> {
    let target = add(base, &w);
    if body.contains(&target, 0.0) {
        return w;
    }
    sub(&body.project(&target).unwrap(), base)
}

impl DisturbanceSource for DisturbanceAdversary {
    fn disturb(&mut self, view: RoundView<'_>) -> Vec<f64> {
        let (t, y, body) = (view.t, view.undisturbed, view.body);
        let pi = body.boundary_distance(y).unwrap_or(0.0);
        let w = match self {
            Self::RadialPush { alpha, rho, budget, spent } => {
                let cap = ((*rho - *alpha * *rho) / (1.0 + *rho)) * pi;
                let len = cap.min((*budget - *spent).max(0.0));
                let out = body.tangent(&sub(y, body.anchor()));
                let dir = if norm(&out) < 1e-15 { body.tangent(&unit(y.len(), 0)) } else { out };
                scale(&dir, len / norm(&dir))
            }
            Self::BoundaryPush { beta, rho, .. } => {
                let cap = (*rho / (1.0 + *beta * *rho)) * pi;
                let z = body.nearest_boundary_point(y);
                clip_norm(sub(&z, y), cap)
            }
            Self::Pin1D { target, budget, spent } => {
                let goal = body.project(&vec![*target; y.len()]).unwrap();
                clip_norm(sub(&goal, y), (*budget - *spent).max(0.0))
            }
            Self::Script { steps, .. } => steps.get(t).cloned().unwrap_or_else(|| vec![0.0; y.len()]),
            Self::None => vec![0.0; y.len()],
        };
        let w = keep_inside(y, w, body);
        let n = norm(&w);
        match self {
            Self::RadialPush { spent, .. }
            | Self::BoundaryPush { spent, .. }
            | Self::Pin1D { spent, .. }
            | Self::Script { spent, .. } => *spent += n,
            Self::None => {}
        }
        w
    }

    fn spent(&self) -> f64 {
        match self {
            Self::RadialPush { spent, .. }
            | Self::BoundaryPush { spent, .. }
            | Self::Pin1D { spent, .. }
            | Self::Script { spent, .. } => *spent,
            Self::None => 0.0,
        }
    }
}
