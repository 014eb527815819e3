use std::sync::Arc;

use nalgebra::DMatrix;
use nested_control::controllers::{oen_ftrl_ap_run, oen_ftrl_run_with, oen_ftrl_uap_run, state_targeting_run_with, ControllerConfig};
use nested_control::dynamics::{
    make_example1, make_example1_isotropic, make_example1_perturbed, make_example2, make_integrator, make_prop1_instance,
    make_prop2_instance, nonconvex_oracle, solve_action_linear, DisturbanceAdversary, DisturbanceSource, DynamicsModel,
    MatrixField, RoundView, REACH_TOL,
};
use nested_control::geometry::ConvexBody;
use nested_control::linalg::{add, axpy, dist, mat_vec, norm, scale, sub};
use nested_control::oco::DistanceLoss;
use nested_control::rng::gaussian_vec;
use nested_control::MEMBERSHIP_TOL;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rotation(a: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()])
}

// rotation · diag(ρπ(y), 2ρπ(y))
fn anisotropic_field(rho: f64) -> MatrixField {
    let body = ConvexBody::centered_ball(2, 1.0).unwrap();
    Arc::new(move |y: &[f64]| {
        let pi = body.boundary_distance(y).unwrap();
        rotation(0.7) * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![rho * pi, 2.0 * rho * pi]))
    })
}

fn models() -> Vec<DynamicsModel> {
    let k: MatrixField = Arc::new(|_: &[f64]| DMatrix::identity(2, 2) * 0.9);
    let a: MatrixField = Arc::new(|_: &[f64]| DMatrix::identity(2, 2));
    let cube = ConvexBody::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    vec![
        make_example1_isotropic(2, 0.5).unwrap(),
        make_example1_isotropic(3, 1.0).unwrap(),
        make_example1(2, 0.5, anisotropic_field(0.5)).unwrap(),
        make_example2(2, 0.5, 1.0, k, a, 0.6).unwrap(),
        make_integrator(cube, ConvexBody::centered_ball(2, 0.5).unwrap(), 1.0).unwrap(),
        make_prop2_instance(2).unwrap(),
    ]
}

#[test]
fn every_model_certifies_its_reachable_ball() {
    for (i, m) in models().iter().enumerate() {
        let worst = m.certify(200, i as u64);
        assert!(worst <= REACH_TOL, "{}: {worst:e}", m.name);
    }
}

#[test]
fn anisotropic_example_matches_the_inverse() {
    let field = anisotropic_field(0.5);
    let m = make_example1(2, 0.5, field.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in 0..1000 {
        let y = m.state_space.sample(&mut rng);
        let radius = m.reach_radius(&y);
        let g = gaussian_vec(&mut rng, 2);
        let target = axpy(&y, radius * rng.random::<f64>() / norm(&g), &g);
        let a = field(&y);
        let oracle = a.clone().lu().solve(&nalgebra::DVector::from_vec(sub(&target, &y))).unwrap();
        let sol = m.solve(&y, &target, t);
        assert!(sol.residual <= REACH_TOL);
        assert!(dist(&sol.action, oracle.as_slice()) < 1e-9);
    }
}

#[test]
fn example2_contraction_closed_form() {
    let k: MatrixField = Arc::new(|_: &[f64]| DMatrix::identity(2, 2) * 0.9);
    let a: MatrixField = Arc::new(|_: &[f64]| DMatrix::identity(2, 2));
    let m = make_example2(2, 0.5, 1.0, k, a, 0.6).unwrap();
    let y = vec![0.3, -0.2];
    let target = vec![0.35, -0.1];
    let sol = m.solve(&y, &target, 0);
    assert!(dist(&sol.action, &sub(&target, &scale(&y, 0.9))) < 1e-9);
    assert!(sol.residual < 1e-12);
}

#[test]
fn dense_solve_agrees_with_direct_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x_body = ConvexBody::centered_ball(3, 10.0).unwrap();
    for _ in 0..100 {
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(3, 3) * 2.0;
        let b = gaussian_vec(&mut rng, 3);
        let x0 = scale(&gaussian_vec(&mut rng, 3), 0.5);
        let target = add(&mat_vec(&a, &x0), &b);
        let direct = a.clone().lu().solve(&nalgebra::DVector::from_vec(sub(&target, &b))).unwrap();
        let (x, residual) = solve_action_linear(&a, &b, &target, &x_body);
        assert!(dist(&x, direct.as_slice()) < 1e-9);
        assert!(residual < 1e-9);
    }
}

#[test]
fn oracle_delegates_to_the_local_form() {
    let m = make_example1(2, 0.5, anisotropic_field(0.5)).unwrap();
    let (y, target) = (vec![0.1, 0.2], vec![0.15, 0.1]);
    let form = (m.local_form.as_ref().unwrap())(&y, 0);
    let (x, _) = solve_action_linear(&form.a, &form.b, &target, &m.action_space);
    assert_eq!(nonconvex_oracle(&m, &y, &target, 0).action, x);
}

#[test]
fn prop1_trap_point_is_unreachable_from_nearby() {
    let (alpha, beta) = (0.1, 0.3);
    let m = make_prop1_instance(alpha, beta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 0..50 {
        let g = gaussian_vec(&mut rng, 2);
        let y = scale(&g, alpha * rng.random::<f64>() / norm(&g));
        // the trap point itself, then targets near it
        let sol = nonconvex_oracle(&m, &y, &[0.0, 0.0], t);
        assert!(sol.residual >= beta - alpha - 1e-9, "{}", sol.residual);
        let g = gaussian_vec(&mut rng, 2);
        let near = scale(&g, 0.5 * (beta - alpha) * rng.random::<f64>() / norm(&g));
        let sol = nonconvex_oracle(&m, &y, &near, t);
        assert!(sol.residual >= beta - alpha - norm(&near) - 1e-9);
    }
}

#[test]
fn prop1_forces_loss_every_other_round() {
    let (alpha, beta) = (0.1, 0.3);
    let m = make_prop1_instance(alpha, beta).unwrap();
    let losses = DistanceLoss::new(vec![0.0, 0.0]);
    let horizon = 400;
    let cfg = ControllerConfig { target: Some(vec![0.0, 0.0]), ..ControllerConfig::new(horizon) };
    let log = state_targeting_run_with(&m, &losses, &cfg, &mut DisturbanceAdversary::None).unwrap();
    assert!(log.total_loss() >= alpha * horizon as f64 / 2.0);
    // the fixed comparator at the trap point pays nothing
    assert_eq!(nested_control::oco::LossStream::cumulative(&losses, horizon, &[0.0, 0.0]), 0.0);
}

proptest! {
    #[test]
    fn evaluator_stays_in_the_state_space(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in models() {
            let y = m.state_space.sample(&mut rng);
            let x = scale(&gaussian_vec(&mut rng, m.action_space.dim()), 3.0);
            let x = m.action_space.project(&x).unwrap();
            prop_assert!(m.state_space.contains(&m.evaluate(&x, &y, 0), MEMBERSHIP_TOL));
        }
    }

    #[test]
    fn residual_is_superlinear_near_the_stabilizer(seed in 0u64..500, q_scale in 0.0f64..2.0, q_exp in 0.1f64..1.0) {
        let m = make_example1_perturbed(2, 0.5, anisotropic_field(0.5), q_scale, q_exp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = m.state_space.sample(&mut rng);
        let form = (m.local_form.as_ref().unwrap())(&y, 0);
        // x* = 0 keeps the state in place
        let x = scale(&gaussian_vec(&mut rng, 2), 0.3 * rng.random::<f64>());
        let x = m.action_space.project(&x).unwrap();
        let linear = add(&mat_vec(&form.a, &x), &form.b);
        let gap = dist(&m.evaluate(&x, &y, 0), &linear);
        let cap = form.q_scale * norm(&mat_vec(&form.a, &x)).powf(1.0 + form.q_exp);
        prop_assert!(gap <= cap + 1e-12, "gap {gap:e} cap {cap:e}");
    }

    #[test]
    fn budgets_are_never_overspent(budget in 0.05f64..3.0, horizon in 50usize..300) {
        let m = make_example1_isotropic(2, 0.5).unwrap();
        let losses = DistanceLoss::new(vec![0.3, 0.0]);
        let cfg = ControllerConfig { alpha: 0.5, ..ControllerConfig::new(horizon) };
        let mut radial = DisturbanceAdversary::radial_push(0.5, 0.5, budget);
        let log = oen_ftrl_ap_run(&m, &losses, &mut radial, &cfg).unwrap();
        prop_assert!(log.disturbance_total() <= budget + 1e-12);
        prop_assert!(radial.spent() <= budget + 1e-12);

        let line = make_integrator(
            ConvexBody::cube(vec![-1.0], vec![1.0]).unwrap(),
            ConvexBody::cube(vec![-0.25], vec![0.25]).unwrap(),
            1.0,
        ).unwrap();
        let losses = DistanceLoss::new(vec![1.0]);
        let cfg = ControllerConfig { alpha: 0.1, ..ControllerConfig::new(1000) };
        let mut pin = DisturbanceAdversary::pin_1d(-1.0, budget);
        let log = oen_ftrl_uap_run(&line, &losses, &mut pin, &cfg).unwrap();
        prop_assert!(log.disturbance_total() <= budget + 1e-12);
    }
}

#[test]
fn boundary_push_decays_geometrically() {
    let horizon = 300;
    for rho in [0.25, 0.5, 1.0] {
        for beta in [0.0, 0.5] {
            let factor: f64 = 1.0 - (1.0 - beta) * rho * rho / (1.0 + beta * rho);
            let m = make_example1_isotropic(2, rho).unwrap();
            let body = m.state_space.clone();
            let d0 = body.boundary_distance(&m.initial_state).unwrap();
            let losses = DistanceLoss::new(vec![0.0, 0.0]);
            let cfg = ControllerConfig::new(horizon);
            let mut adv = DisturbanceAdversary::boundary_push(beta, rho);
            let log = oen_ftrl_run_with(&m, &losses, &cfg, &mut adv).unwrap();
            for (t, r) in log.rounds.iter().enumerate() {
                let d = body.boundary_distance(&r.state).unwrap();
                let cap = factor.powi(t as i32 + 1) * d0 + 1e-9;
                assert!(d <= cap, "rho {rho} beta {beta} round {t}: {d:e} > {cap:e}");
            }
        }
    }
}

#[test]
fn radial_push_at_the_center() {
    let body = ConvexBody::centered_ball(2, 1.0).unwrap();
    let mut adv = DisturbanceAdversary::radial_push(0.5, 1.0, 10.0);
    let y = [0.0, 0.0];
    let w = adv.disturb(RoundView { t: 0, action: &[0.0, 0.0], prev_state: &y, undisturbed: &y, body: &body });
    assert!((norm(&w) - 0.25).abs() < 1e-15);
}

#[test]
fn pin_first_push_then_per_round_cap() {
    let rho = 0.25;
    let line = make_integrator(
        ConvexBody::cube(vec![-1.0], vec![1.0]).unwrap(),
        ConvexBody::cube(vec![-rho], vec![rho]).unwrap(),
        1.0,
    )
    .unwrap();
    let losses = DistanceLoss::new(vec![1.0]);
    let cfg = ControllerConfig { alpha: 0.1, ..ControllerConfig::new(1000) };
    let mut pin = DisturbanceAdversary::pin_1d(-1.0, 10.0);
    let log = oen_ftrl_uap_run(&line, &losses, &mut pin, &cfg).unwrap();
    let w: Vec<f64> = log.rounds.iter().map(|r| norm(&r.disturbance)).collect();
    assert!(w[0] <= 1.0 + rho + 1e-12);
    assert!(w[1..].iter().all(|&v| v <= rho + 1e-12));
}
