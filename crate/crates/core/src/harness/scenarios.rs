//! Named scenario presets: dynamics, default losses, and how to audit them.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::applications::performative::{scaled_rotation, PerformativeEnv, Score};
use crate::applications::pricing::{PricingEnv, Valuation};
use crate::applications::recommendations::{BenchmarkVariant, RecommendationEnv, ScoreModel};
use crate::applications::steering::SteeringEnv;
use crate::controllers::ControllerConfig;
use crate::dynamics::{
    make_example1, make_example1_isotropic, make_example1_perturbed, make_example2, make_integrator,
    make_prop1_instance, make_prop2_instance, DisturbanceAdversary, DisturbanceSource, DynamicsModel, MatrixField,
};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::harness::config::{AdversarySpec, LossSpec, ScenarioConfig};
use crate::linalg::{dist, norm, scale, sigma_min, sub, unit};
use crate::oco::{DistanceLoss, FnLoss, LinearLoss, LinearSequence, LossStream, SquaredDistanceLoss};
use crate::rng::{gaussian_vec, round_rng, streams};

pub const SCENARIOS: [(&str, &str); 15] = [
    ("example-d1", "y' = Π(y + ρπ(y)·x) on the unit ball; distance loss"),
    ("example-d1-perturbed", "example-d1 with an identity field plus a superlinear residual"),
    ("example-d2", "y' = Π(K y + A x) with K = k_scale·I, A = I, X = Ball(0, cR)"),
    ("integrator", "y' = Π(y + gain·x) on a centered ball; linear loss 1 − y_1"),
    ("prop1", "non-controllable push-away instance"),
    ("prop2", "integrator where every linear policy stays at the origin; squared distance loss"),
    ("probing-linear", "example-d1 with a constant unknown action matrix"),
    ("pp-linear-map", "performative prediction with a scaled-rotation stable map"),
    ("rec-eird", "recommendations over the certified EIRD ball"),
    ("rec-smoothed", "recommendations over the smoothed simplex"),
    ("pricing-cobbdouglas", "pricing with a Cobb-Douglas buyer"),
    ("pricing-ces", "pricing with a CES buyer"),
    ("steering-fixed-game", "steering a gradient learner in a fixed game"),
    ("steering-drifting-game", "steering with slowly rotating learner payoffs"),
    ("linear-drift", "example-d1 with drifting linear losses"),
];

/// Per-scenario information the audit needs.
#[derive(Clone)]
pub enum AuditKind {
    /// Losses evaluated at the realized states.
    Plain,
    Performative { env: Arc<PerformativeEnv>, score: Score },
    Recommendations { env: Arc<RecommendationEnv>, losses: Arc<dyn LossStream> },
    Pricing { env: Arc<PricingEnv> },
    Steering { env: Arc<SteeringEnv> },
}

pub struct Prepared {
    pub model: DynamicsModel,
    pub losses: Arc<dyn LossStream>,
    pub adversary: Box<dyn DisturbanceSource>,
    pub audit: AuditKind,
    pub true_matrix: Option<DMatrix<f64>>,
    pub cfg: ControllerConfig,
}

struct Params<'a> {
    map: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn get(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }
    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.get(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Config { key: format!("params.{key}"), reason: format!("{v} is not a count") });
        }
        Ok(v as usize)
    }
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.into(), reason: reason.into() }
}

fn tag_model_errors(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::Config { key: format!("params.{name}"), reason },
        Error::Rejected(reason) => Error::Config { key: "params".into(), reason },
        other => other,
    }
}

fn build_losses(spec: &LossSpec, dim: usize, horizon: usize, seed: u64) -> Result<Option<Arc<dyn LossStream>>> {
    let check = |v: &[f64]| {
        if v.len() != dim {
            Err(config_err("losses", format!("vector has length {}, state dimension is {dim}", v.len())))
        } else {
            Ok(())
        }
    };
    Ok(match spec {
        LossSpec::Default => None,
        LossSpec::Distance { point, scale } => {
            check(point)?;
            Some(Arc::new(DistanceLoss { point: point.clone(), scale: *scale }))
        }
        LossSpec::SquaredDistance { point, lipschitz } => {
            check(point)?;
            Some(Arc::new(SquaredDistanceLoss { point: point.clone(), lipschitz: *lipschitz }))
        }
        LossSpec::Linear { c } => {
            check(c)?;
            Some(Arc::new(LinearLoss { c: c.clone(), offset: 0.0 }))
        }
        LossSpec::Drifting { base, amplitude, period } => {
            check(base)?;
            Some(Arc::new(LinearSequence::drifting(base, *amplitude, *period, horizon)))
        }
        LossSpec::Adversarial { scale: s } => {
            let costs = (0..horizon)
                .map(|t| {
                    let mut rng = round_rng(seed, streams::LOSSES, t as u64);
                    let g = gaussian_vec(&mut rng, dim);
                    scale(&g, s / norm(&g).max(1e-300))
                })
                .collect::<Vec<_>>();
            let offsets = vec![0.0; costs.len()];
            Some(Arc::new(LinearSequence { costs, offsets }))
        }
    })
}

fn build_adversary(spec: &AdversarySpec) -> DisturbanceAdversary {
    match spec {
        AdversarySpec::None => DisturbanceAdversary::None,
        AdversarySpec::RadialPush { alpha, rho, budget } => DisturbanceAdversary::radial_push(*alpha, *rho, *budget),
        AdversarySpec::BoundaryPush { beta, rho } => DisturbanceAdversary::boundary_push(*beta, *rho),
        AdversarySpec::Pin1d { target, budget } => DisturbanceAdversary::pin_1d(*target, *budget),
    }
}

fn first_coordinate_point(dim: usize, value: f64) -> Vec<f64> {
    scale(&unit(dim, 0), value)
}

/// Builds the scenario named in `config` for one seed.
pub fn prepare(config: &ScenarioConfig, seed: u64) -> Result<Prepared> {
    config.validate()?;
    let p = Params { map: &config.params };
    let horizon = config.horizon;
    let mut cfg = ControllerConfig { horizon, seed, ..config.controller_config.clone() };
    let mut true_matrix = None;
    let mut audit = AuditKind::Plain;
    let mut adversary: Option<Box<dyn DisturbanceSource>> = None;
    let app = |what: &str| -> Result<()> {
        if config.losses != LossSpec::Default {
            return Err(config_err("losses", format!("{what} scenarios use their own losses")));
        }
        Ok(())
    };

    let (model, default_losses): (DynamicsModel, Arc<dyn LossStream>) = match config.scenario.as_str() {
        "example-d1" | "linear-drift" => {
            let n = p.count("n", 2)?;
            let m = make_example1_isotropic(n, p.get("rho", 0.5)).map_err(tag_model_errors)?;
            let loss: Arc<dyn LossStream> = if config.scenario == "linear-drift" {
                Arc::new(LinearSequence::drifting(&first_coordinate_point(n, 1.0), 0.5, p.get("period", 250.0), horizon))
            } else {
                Arc::new(DistanceLoss::new(first_coordinate_point(n, p.get("target", 0.5))))
            };
            (m, loss)
        }
        "example-d1-perturbed" => {
            let n = p.count("n", 2)?;
            let field: MatrixField = Arc::new(move |_| DMatrix::identity(n, n));
            let m = make_example1_perturbed(n, p.get("rho", 0.5), field, p.get("q_scale", 0.2), p.get("q_exp", 0.5))
                .map_err(tag_model_errors)?;
            (m, Arc::new(DistanceLoss::new(first_coordinate_point(n, p.get("target", 0.5)))))
        }
        "example-d2" => {
            let n = p.count("n", 2)?;
            let k = p.get("k_scale", 0.95);
            let kf: MatrixField = Arc::new(move |_| DMatrix::identity(n, n) * k);
            let af: MatrixField = Arc::new(move |_| DMatrix::identity(n, n));
            let radius = p.get("radius", 1.0);
            let m = make_example2(n, p.get("rho", 0.5), radius, kf, af, p.get("c", 0.6)).map_err(tag_model_errors)?;
            (m, Arc::new(DistanceLoss::new(first_coordinate_point(n, p.get("target", 0.5) * radius))))
        }
        "integrator" => {
            let n = p.count("dim", 1)?;
            let r = p.get("radius", 1.0);
            let y = ConvexBody::centered_ball(n, r).map_err(tag_model_errors)?;
            let m = make_integrator(y.clone(), y, p.get("gain", 0.25)).map_err(tag_model_errors)?;
            (m, Arc::new(LinearLoss { c: scale(&unit(n, 0), -1.0), offset: r }))
        }
        "prop1" => {
            let m = make_prop1_instance(p.get("alpha", 0.2), p.get("beta", 0.4)).map_err(tag_model_errors)?;
            (m, Arc::new(DistanceLoss::new(vec![0.0, 0.0])))
        }
        "prop2" => {
            let n = p.count("n", 2)?;
            let m = make_prop2_instance(n).map_err(tag_model_errors)?;
            let point = first_coordinate_point(n, p.get("target", 0.5));
            let lip = 2.0 * (1.0 + norm(&point));
            (m, Arc::new(SquaredDistanceLoss { point, lipschitz: lip }))
        }
        "probing-linear" => {
            let a = DMatrix::from_row_slice(
                2,
                2,
                &[p.get("a11", 0.5), p.get("a12", 0.1), p.get("a21", -0.1), p.get("a22", 0.4)],
            );
            let rho = p.get("rho", sigma_min(&a));
            let a2 = a.clone();
            let field: MatrixField = Arc::new(move |_| a2.clone());
            let mut m = make_example1(2, rho, field).map_err(tag_model_errors)?;
            m.name = "probing-linear".into();
            true_matrix = Some(a);
            if cfg.stabilizer.is_none() {
                cfg.stabilizer = Some(vec![0.0, 0.0]);
            }
            (m, Arc::new(DistanceLoss::new(vec![p.get("target", 0.5), 0.0])))
        }
        "pp-linear-map" => {
            app("performative")?;
            let n = p.count("n", 2)?;
            let env = Arc::new(
                PerformativeEnv::new(
                    scaled_rotation(n, p.get("scale", 0.8), p.get("angle", 0.3)),
                    p.get("kappa", 0.5),
                    p.get("theta", 0.3),
                    p.get("action_radius", 1.0),
                    first_coordinate_point(n, p.get("mu", 0.1)),
                    DMatrix::identity(n, n) * p.get("sigma", 0.01),
                    p.count("samples", 64)?,
                    seed,
                )
                .map_err(tag_model_errors)?,
            );
            let score = Score::tracking(p.get("w", 0.5), vec![0.0; n], p.get("amplitude", 0.3), p.get("period", 200.0));
            let losses = Arc::new(env.surrogate_losses(score.clone()));
            cfg.lipschitz = env.surrogate_lipschitz(&score);
            let m = env.model().map_err(tag_model_errors)?;
            audit = AuditKind::Performative { env, score };
            (m, losses)
        }
        "rec-eird" | "rec-smoothed" => {
            app("recommendation")?;
            let eird = config.scenario == "rec-eird";
            let n = p.count("n", if eird { 10 } else { 5 })?;
            let k = p.count("k", 2)?;
            let theta = p.get("theta", if eird { 0.2 } else { 0.3 });
            let (scores, variant) = if eird {
                let eps = p.get("eps", 0.1);
                let lambda = p.get("lambda", (k as f64 - 1.0) / (n as f64 - 1.0) + eps);
                (ScoreModel::ScaleBounded { lambda, weights: vec![1.0; n] }, BenchmarkVariant::EirdBall { eps })
            } else {
                let lo = p.get("weight_floor", 0.8);
                let weights = (0..n).map(|i| lo + (1.0 - lo) * i as f64 / (n - 1).max(1) as f64).collect();
                (
                    ScoreModel::ScaleBounded { lambda: p.get("lambda", 0.2), weights },
                    BenchmarkVariant::SmoothedSimplex { phi: p.get("phi", 0.5) },
                )
            };
            let env = Arc::new(RecommendationEnv::new(n, k, scores, theta, Some(seed)).map_err(tag_model_errors)?);
            let (body, rho) = env.benchmark_body(variant).map_err(tag_model_errors)?;
            let losses: Arc<dyn LossStream> = Arc::new(choice_tracking_losses(n, p.get("amplitude", 0.05), p.get("period", 500.0)));
            cfg.lipschitz = 1.0;
            if cfg.eta.is_none() {
                let g = cfg.range_g(&body);
                let factor = 2.0 + body.circumradius() / (body.inradius() * rho) + 1.0 / theta;
                cfg.eta = Some((g * cfg.gamma / (factor * horizon.max(1) as f64)).sqrt());
            }
            let m = env.model(body, rho).map_err(tag_model_errors)?;
            audit = AuditKind::Recommendations { env, losses: losses.clone() };
            (m, losses)
        }
        "pricing-cobbdouglas" | "pricing-ces" => {
            app("pricing")?;
            let valuation = if config.scenario == "pricing-ces" {
                Valuation::Ces {
                    alpha: vec![p.get("a1", 1.0), p.get("a2", 1.0)],
                    kappa: p.get("kappa", 0.5),
                    beta: p.get("beta_exp", 1.4),
                }
            } else {
                Valuation::CobbDouglas { alpha: vec![p.get("a1", 0.3), p.get("a2", 0.4)] }
            };
            let c = p.get("center", 3.0);
            let env = PricingEnv::new(
                valuation,
                p.get("phi", 0.05),
                p.get("c0", 0.1),
                p.get("drift", 0.05),
                p.get("theta", 0.5),
                vec![c, c],
                p.get("radius", 1.0),
                p.get("beta", 0.7),
            )
            .map_err(tag_model_errors)?
            .with_seeds(Some(seed), seed)
            .prepare(horizon);
            let env = Arc::new(env);
            let losses = Arc::new(env.surrogate_losses());
            cfg.lipschitz = env.surrogate_holder();
            let m = env.model().map_err(tag_model_errors)?;
            audit = AuditKind::Pricing { env };
            (m, losses)
        }
        "steering-fixed-game" | "steering-drifting-game" => {
            app("steering")?;
            if config.adversary != AdversarySpec::None {
                return Err(config_err("adversary", "steering disturbances come from the game itself"));
            }
            let gap = p.get("gap", 0.7);
            let row = [gap, -gap];
            let env = if config.scenario == "steering-fixed-game" {
                SteeringEnv::fixed_game(&row, horizon)
            } else {
                SteeringEnv::drifting_game(&row, horizon, p.get("total_drift", 3.0))
            }
            .map_err(tag_model_errors)?;
            let env = Arc::new(env);
            let losses = Arc::new(env.surrogate_losses());
            let l = env.surrogate_lipschitz();
            cfg.lipschitz = l;
            if cfg.eta.is_none() {
                let g = cfg.range_g(&ConvexBody::simplex(env.n)?);
                let t = horizon.max(1) as f64;
                cfg.eta = Some((g * cfg.gamma / (t * l * l)).sqrt().min(cfg.alpha * env.theta * cfg.gamma / l));
            }
            let m = env.model().map_err(tag_model_errors)?;
            adversary = Some(Box::new(env.disturbances()));
            audit = AuditKind::Steering { env };
            (m, losses)
        }
        other => {
            let names: Vec<&str> = SCENARIOS.iter().map(|s| s.0).collect();
            return Err(config_err("scenario", format!("unknown scenario '{other}'; expected one of {}", names.join(", "))));
        }
    };
    let losses = build_losses(&config.losses, model.state_space.dim(), horizon, seed)?.unwrap_or(default_losses);
    if matches!(audit, AuditKind::Plain) && config.controller_config.lipschitz == ControllerConfig::default().lipschitz {
        cfg.lipschitz = losses.lipschitz().max(1e-12);
    }
    let adversary = adversary.unwrap_or_else(|| Box::new(build_adversary(&config.adversary)));
    Ok(Prepared { model, losses, adversary, audit, true_matrix, cfg })
}

/// f_t(p) = ‖p − q_t‖ with q_t circling the uniform vector in the plane of
/// e_1 − e_2 and e_3 − e_4.
pub fn choice_tracking_losses(n: usize, amplitude: f64, period: f64) -> FnLoss {
    let target = move |t: usize| -> Vec<f64> {
        let phase = std::f64::consts::TAU * t as f64 / period;
        let mut q = vec![1.0 / n as f64; n];
        let s = amplitude / 2f64.sqrt();
        q[0] += s * phase.cos();
        q[1] -= s * phase.cos();
        if n >= 4 {
            q[2] += s * phase.sin();
            q[3] -= s * phase.sin();
        }
        q
    };
    let t2 = target;
    FnLoss::new(
        n,
        1.0,
        move |t, p| dist(p, &target(t)),
        move |t, p| {
            let d = sub(p, &t2(t));
            let len = norm(&d);
            if len < 1e-300 {
                vec![0.0; n]
            } else {
                scale(&d, 1.0 / len)
            }
        },
    )
}

/// Random gain matrices for the linear-policy comparison.
pub fn random_gains(count: usize, n: usize, seed: u64) -> Vec<DMatrix<f64>> {
    (0..count)
        .map(|i| {
            let mut rng = round_rng(seed, streams::AUDIT, i as u64);
            DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 4.0 - 2.0)
        })
        .collect()
}
