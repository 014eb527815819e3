//! Adaptive recommendations: the platform shows a k-item menu drawn from a
//! distribution over k-subsets, the user picks item i from menu K with
//! probability s_i(v)/Σ_{j∈K} s_j(v), and the memory vector v drifts toward
//! the induced item distribution at speed θ_t.

use std::sync::Arc;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;

use crate::controllers::TrajectoryLog;
use crate::dynamics::{Controllability, DynamicsModel};
use crate::error::{invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{axpy, dot, norm, scale, sub};
use crate::rng::{round_rng, stream_rng, streams};

/// Menu-time slack for the realizability test.
pub const MENU_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ScoreModel {
    /// Scores that ignore the memory vector.
    Constant(Vec<f64>),
    /// s_i(v) = w_i·((1 − λ)v_i + λ), with w_i ∈ (0, 1].
    ScaleBounded { lambda: f64, weights: Vec<f64> },
}

impl ScoreModel {
    pub fn scores(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Self::Constant(s) => s.clone(),
            Self::ScaleBounded { lambda, weights } => {
                v.iter().zip(weights).map(|(vi, w)| w * ((1.0 - lambda) * vi + lambda)).collect()
            }
        }
    }

    /// Smallest score any item can receive.
    pub fn floor(&self) -> f64 {
        match self {
            Self::Constant(s) => s.iter().cloned().fold(f64::INFINITY, f64::min),
            Self::ScaleBounded { lambda, weights } => lambda * weights.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Smallest σ with σ⁻¹ ≤ w_i ≤ σ.
    pub fn sigma(&self) -> f64 {
        match self {
            Self::Constant(_) => f64::INFINITY,
            Self::ScaleBounded { weights, .. } => weights.iter().map(|w| w.max(1.0 / w)).fold(1.0, f64::max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BenchmarkVariant {
    EirdBall { eps: f64 },
    SmoothedSimplex { phi: f64 },
}

#[derive(Clone, Debug)]
pub struct RecommendationEnv {
    pub n: usize,
    pub k: usize,
    pub scores: ScoreModel,
    /// Lower bound on the memory update speed.
    pub theta: f64,
    /// When set, θ_t is drawn uniformly from [θ, 1] per round.
    pub schedule_seed: Option<u64>,
    pub initial_memory: Vec<f64>,
    menus: Vec<Vec<usize>>,
}

impl RecommendationEnv {
    pub fn new(n: usize, k: usize, scores: ScoreModel, theta: f64, schedule_seed: Option<u64>) -> Result<Self> {
        if k == 0 || k > n {
            return Err(invalid("k", "menu size must lie in 1..=n"));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(invalid("theta", "must lie in (0, 1]"));
        }
        let len = match &scores {
            ScoreModel::Constant(s) => s.len(),
            ScoreModel::ScaleBounded { lambda, weights } => {
                if !(*lambda > 0.0 && *lambda <= 1.0) {
                    return Err(invalid("lambda", "must lie in (0, 1]"));
                }
                if weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
                    return Err(invalid("weights", "must lie in (0, 1]"));
                }
                weights.len()
            }
        };
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
        if !(scores.floor() > 0.0) {
            return Err(invalid("scores", "must be positive"));
        }
        Ok(Self { n, k, scores, theta, schedule_seed, initial_memory: vec![1.0 / n as f64; n], menus: subsets(n, k) })
    }

    pub fn menus(&self) -> &[Vec<usize>] {
        &self.menus
    }

    pub fn theta_at(&self, t: usize) -> f64 {
        match self.schedule_seed {
            None => self.theta,
            Some(seed) => {
                let u: f64 = round_rng(seed, streams::SCHEDULE, t as u64).random();
                self.theta + (1.0 - self.theta) * u
            }
        }
    }

    pub fn choice_distribution(&self, menu: &[usize], v: &[f64]) -> Vec<f64> {
        choice_distribution(&self.scores.scores(v), menu)
    }

    /// Menu times μ_i and whether p is realizable at memory v.
    pub fn menu_times(&self, p: &[f64], v: &[f64]) -> Result<(Vec<f64>, bool)> {
        menu_times(p, &self.scores.scores(v), self.k, self.scores.floor())
    }

    pub fn in_ird(&self, p: &[f64], v: &[f64]) -> bool {
        p.iter().all(|&x| x >= -MENU_TOL) && matches!(self.menu_times(p, v), Ok((_, true)))
    }

    /// Sparse menu distribution realizing p at memory v.
    pub fn menu_synthesis(&self, p: &[f64], v: &[f64]) -> Result<Vec<(Vec<usize>, f64)>> {
        menu_synthesis(p, &self.scores.scores(v), self.k, self.scores.floor())
    }

    /// Dense action vector over the lexicographically ordered menus.
    pub fn action_vector(&self, sparse: &[(Vec<usize>, f64)]) -> Vec<f64> {
        let mut x = vec![0.0; self.menus.len()];
        for (menu, w) in sparse {
            x[subset_rank(menu, self.n)] += w;
        }
        x
    }

    /// Item distribution induced by a dense menu distribution.
    pub fn induced(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let s = self.scores.scores(v);
        let mut p = vec![0.0; self.n];
        for (menu, &w) in self.menus.iter().zip(x) {
            if w == 0.0 {
                continue;
            }
            for (pi, ci) in p.iter_mut().zip(choice_distribution(&s, menu)) {
                *pi += w * ci;
            }
        }
        p
    }

    pub fn memory_update(&self, x: &[f64], v: &[f64], t: usize) -> Vec<f64> {
        let th = self.theta_at(t);
        axpy(&scale(v, 1.0 - th), th, &self.induced(x, v))
    }

    /// LP feasibility of p at memory v over all menus.
    pub fn lp_feasible(&self, p: &[f64], v: &[f64]) -> bool {
        lp_realizable(p, &self.scores.scores(v), &self.menus)
    }

    /// Benchmark body and its local-controllability radius.
    pub fn benchmark_body(&self, variant: BenchmarkVariant) -> Result<(ConvexBody, f64)> {
        match variant {
            BenchmarkVariant::EirdBall { eps } => {
                if !(eps > 0.0) || self.n < 2 {
                    return Err(invalid("eps", "need eps > 0 and n >= 2"));
                }
                let need = (self.k as f64 - 1.0) / (self.n as f64 - 1.0) + eps;
                if self.scores.floor() < need - 1e-15 {
                    return Err(invalid("lambda", format!("score floor {} below (k-1)/(n-1)+eps = {need}", self.scores.floor())));
                }
                let r = eird_radius(self.n, self.k, eps);
                Ok((ConvexBody::simplex_ball(vec![1.0 / self.n as f64; self.n], r)?, self.theta))
            }
            BenchmarkVariant::SmoothedSimplex { phi } => {
                let ScoreModel::ScaleBounded { lambda, .. } = &self.scores else {
                    return Err(invalid("scores", "smoothed simplex needs scale-bounded scores"));
                };
                let sigma_cap = (4.0 * (self.n as f64 - 1.0) / self.k as f64).sqrt();
                if self.scores.sigma() > sigma_cap {
                    return Err(invalid("weights", format!("sigma {} exceeds {sigma_cap}", self.scores.sigma())));
                }
                let body = ConvexBody::smoothed_simplex(self.n, phi)?;
                let radius = lambda * phi;
                let worst = self.certify_local_ball(&body, radius, 400, 0);
                if worst > 1.0 + MENU_TOL {
                    return Err(invalid("phi", format!("ball of radius {radius} leaves IRD: worst menu time {worst}")));
                }
                Ok((body, self.theta * radius))
            }
        }
    }

    /// Largest menu time over sampled memories v in `body` and item
    /// distributions p ∈ B_{radius·π(v)}(v) ∩ body.
    pub fn certify_local_ball(&self, body: &ConvexBody, radius: f64, samples: usize, seed: u64) -> f64 {
        let mut rng = stream_rng(seed, streams::CERTIFY);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let v = body.sample(&mut rng);
            let reach = radius * body.boundary_distance(&v).unwrap_or(0.0);
            let dir = body.tangent(&crate::rng::gaussian_vec(&mut rng, self.n));
            let len = norm(&dir).max(1e-300);
            let p = body.project(&axpy(&v, reach / len, &dir)).expect("dimension fixed");
            if let Ok((mu, _)) = self.menu_times(&p, &v) {
                worst = worst.max(mu.iter().cloned().fold(0.0, f64::max));
            }
        }
        worst
    }

    /// Dynamics over `body` with memory as the state and menu distributions
    /// as actions.
    pub fn model(self: &Arc<Self>, body: ConvexBody, rho: f64) -> Result<DynamicsModel> {
        let e = self.clone();
        let eval = Arc::new(move |x: &[f64], v: &[f64], t: usize| e.memory_update(x, v, t));
        let e = self.clone();
        let solver = Arc::new(move |v: &[f64], target: &[f64], t: usize| e.steer(v, target, t));
        let x_space = ConvexBody::simplex(self.menus.len())?;
        let mut model = DynamicsModel::new("recommendations", body, x_space, rho, Controllability::Weak, eval)?
            .with_solver(solver)
            .with_initial_state(self.initial_memory.clone())?;
        model.time_varying = self.schedule_seed.is_some();
        Ok(model)
    }

    /// Menu distribution moving memory v toward `target` in round t. Required
    /// item distributions outside IRD(v) are pulled back toward v by bisection.
    pub fn steer(&self, v: &[f64], target: &[f64], t: usize) -> Vec<f64> {
        let step = scale(&sub(target, v), 1.0 / self.theta_at(t));
        let want = |s: f64| axpy(v, s, &step);
        let mut s = 1.0;
        if !self.in_ird(&want(1.0), v) {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.in_ird(&want(mid), v) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            s = lo;
        }
        let p: Vec<f64> = want(s).iter().map(|x| x.max(0.0)).collect();
        let total: f64 = p.iter().sum();
        let p = scale(&p, 1.0 / total);
        match self.menu_synthesis(&p, v) {
            Ok(sparse) => self.action_vector(&sparse),
            Err(_) => vec![1.0 / self.menus.len() as f64; self.menus.len()],
        }
    }

    /// Item distributions p_t actually served along a run.
    pub fn served(&self, log: &TrajectoryLog) -> Vec<Vec<f64>> {
        let mut prev = log.initial_state.clone();
        log.rounds
            .iter()
            .map(|r| {
                let p = self.induced(&r.action, &prev);
                prev = r.state.clone();
                p
            })
            .collect()
    }
}

/// θ_t recovered from consecutive memories and the served distribution.
pub fn recover_theta(v_prev: &[f64], v_next: &[f64], served: &[f64]) -> Option<f64> {
    let d = sub(served, v_prev);
    let dd = dot(&d, &d);
    if dd < 1e-24 {
        return None;
    }
    Some(dot(&sub(v_next, v_prev), &d) / dd)
}

pub fn choice_distribution(scores: &[f64], menu: &[usize]) -> Vec<f64> {
    let total: f64 = menu.iter().map(|&i| scores[i]).sum();
    let mut p = vec![0.0; scores.len()];
    for &i in menu {
        p[i] = scores[i] / total;
    }
    p
}

/// μ_i = k·(p_i/s_i)/Σ_j p_j/s_j. Realizable iff every μ_i ≤ 1.
pub fn menu_times(p: &[f64], scores: &[f64], k: usize, floor: f64) -> Result<(Vec<f64>, bool)> {
    if p.len() != scores.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), got: p.len() });
    }
    for (i, (&pi, &si)) in p.iter().zip(scores).enumerate() {
        if pi > 0.0 && !(si >= floor - 1e-15 && si > 0.0) {
            return Err(Error::Rejected(format!("item {i} has score {si} below the floor {floor}")));
        }
    }
    let ratios: Vec<f64> = p.iter().zip(scores).map(|(pi, si)| pi.max(0.0) / si).collect();
    let total: f64 = ratios.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Rejected("item distribution has no mass".into()));
    }
    let mu: Vec<f64> = ratios.iter().map(|r| k as f64 * r / total).collect();
    let ok = mu.iter().all(|&m| m <= 1.0 + MENU_TOL);
    Ok((mu, ok))
}

/// Systematic sampling of inclusion rates μ (Σμ = k, μ_i ≤ 1) followed by a
/// reweighting so the induced choice distribution is exactly p.
pub fn menu_synthesis(p: &[f64], scores: &[f64], k: usize, floor: f64) -> Result<Vec<(Vec<usize>, f64)>> {
    let (mu, ok) = menu_times(p, scores, k, floor)?;
    if !ok {
        return Err(Error::Rejected(format!(
            "item distribution is not realizable: max menu time {}",
            mu.iter().cloned().fold(0.0, f64::max)
        )));
    }
    let z = systematic_menus(&mu, k);
    let weighted: Vec<(Vec<usize>, f64)> = z
        .into_iter()
        .map(|(menu, w)| {
            let s: f64 = menu.iter().map(|&i| scores[i]).sum();
            (menu, w * s)
        })
        .collect();
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    Ok(weighted.into_iter().map(|(m, w)| (m, w / total)).collect())
}

/// Distribution over k-subsets whose inclusion marginals are μ. Item i owns
/// [c_i, c_i + μ_i) on [0, k); the menu for offset τ collects the owners of
/// τ, τ + 1, ..., τ + k − 1.
pub fn systematic_menus(mu: &[f64], k: usize) -> Vec<(Vec<usize>, f64)> {
    let total: f64 = mu.iter().sum();
    let mu: Vec<f64> = mu.iter().map(|m| m.max(0.0) * k as f64 / total).collect();
    let mut starts = Vec::with_capacity(mu.len() + 1);
    let mut c = 0.0;
    for m in &mu {
        starts.push(c);
        c += m;
    }
    starts.push(k as f64);
    let mut cuts: Vec<f64> = starts.iter().map(|s| s - s.floor()).filter(|f| *f < 1.0).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let owner = |x: f64| -> usize {
        // last item whose interval starts at or before x, skipping empty ones
        let mut idx = 0;
        for i in 0..mu.len() {
            if starts[i] <= x && mu[i] > 0.0 {
                idx = i;
            }
        }
        idx
    };
    let mut out: Vec<(Vec<usize>, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let tau = 0.5 * (w[0] + w[1]);
        let mut menu: Vec<usize> = (0..k).map(|j| owner(tau + j as f64)).collect();
        menu.sort_unstable();
        match out.iter_mut().find(|(m, _)| *m == menu) {
            Some(entry) => entry.1 += len,
            None => out.push((menu, len)),
        }
    }
    out
}

/// All k-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Position of a sorted subset in [`subsets`] order.
pub fn subset_rank(menu: &[usize], n: usize) -> usize {
    let k = menu.len();
    let mut rank = 0;
    let mut next = 0;
    for (i, &c) in menu.iter().enumerate() {
        for j in next..c {
            rank += binomial(n - 1 - j, k - 1 - i);
        }
        next = c + 1;
    }
    rank
}

/// Feasibility of Σ_K x_K·choice(K) = p over the simplex of menus, by LP.
pub fn lp_realizable(p: &[f64], scores: &[f64], menus: &[Vec<usize>]) -> bool {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = menus.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    lp.add_constraint(vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for i in 0..p.len() {
        let row: Vec<_> = menus
            .iter()
            .zip(&vars)
            .filter(|(m, _)| m.contains(&i))
            .map(|(m, &v)| (v, scores[i] / m.iter().map(|&j| scores[j]).sum::<f64>()))
            .collect();
        lp.add_constraint(row, ComparisonOp::Eq, p[i]);
    }
    lp.solve().is_ok()
}

/// Radius of the ball about the uniform vector certified inside EIRD when
/// scores are at least (k − 1)/(n − 1) + ε.
pub fn eird_radius(n: usize, k: usize, eps: f64) -> f64 {
    let nf = n as f64;
    eps * (2.0 * (nf - 1.0) / (2f64.sqrt() * nf)) / (nf * (k as f64 - 1.0) + eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env3() -> RecommendationEnv {
        RecommendationEnv::new(3, 2, ScoreModel::Constant(vec![0.5, 1.0, 1.0]), 0.5, None).unwrap()
    }

    #[test]
    fn choice_distribution_example() {
        let p = choice_distribution(&[0.5, 1.0, 1.0], &[0, 1]);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn menu_times_examples() {
        let e = env3();
        let (mu, ok) = e.menu_times(&[0.25, 0.5, 0.25], &[1.0 / 3.0; 3]).unwrap();
        assert!(ok);
        for (a, b) in mu.iter().zip([0.8, 0.8, 0.4]) {
            assert!((a - b).abs() < 1e-14);
        }
        let (mu, ok) = e.menu_times(&[1.0, 0.0, 0.0], &[1.0 / 3.0; 3]).unwrap();
        assert!(!ok && (mu[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn synthesis_reproduces_target() {
        let e = env3();
        let v = [1.0 / 3.0; 3];
        let p = [0.25, 0.5, 0.25];
        let x = e.action_vector(&e.menu_synthesis(&p, &v).unwrap());
        let q = e.induced(&x, &v);
        for (a, b) in q.iter().zip(p) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ranks_follow_enumeration() {
        let all = subsets(6, 3);
        assert_eq!(all.len(), binomial(6, 3));
        for (i, s) in all.iter().enumerate() {
            assert_eq!(subset_rank(s, 6), i);
        }
    }

    #[test]
    fn eird_radius_example() {
        let r = eird_radius(10, 2, 0.1);
        let expect = 0.1 * (18.0 / (2f64.sqrt() * 10.0)) / 10.1;
        assert!((r - expect).abs() < 1e-15);
        assert!((r - 0.01260).abs() < 5e-6);
    }

    #[test]
    fn theta_recovery() {
        let v = [0.2, 0.3, 0.5];
        let p = [0.4, 0.4, 0.2];
        let next = axpy(&scale(&v, 0.7), 0.3, &p);
        assert!((recover_theta(&v, &next, &p).unwrap() - 0.3).abs() < 1e-12);
    }
}
