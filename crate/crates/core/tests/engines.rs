use nested_control::controllers::{oen_ftrl_calibration, ControllerConfig};
use nested_control::geometry::ConvexBody;
use nested_control::linalg::{dist, norm, scale};
use nested_control::oco::{FkmState, FtrlState, OgdState};
use nested_control::MEMBERSHIP_TOL;
use proptest::prelude::*;

// Golden-section minimizer of a unimodal function on [lo, hi].
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (a, b) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn ftrl_interval_matches_numeric_argmin() {
    let mut f = FtrlState::new(ConvexBody::cube(vec![-1.0], vec![1.0]).unwrap(), 0.1).unwrap();
    f.update(&[2.0]).unwrap();
    let oracle = golden_min(|y| 0.1 * 2.0 * y + 0.5 * y * y, -1.0, 1.0);
    assert!((f.next()[0] - oracle).abs() < 1e-8);
    assert!((f.next()[0] + 0.2).abs() < 1e-12);
}

#[test]
fn ftrl_saturates_on_the_ball() {
    let mut f = FtrlState::new(ConvexBody::centered_ball(2, 1.0).unwrap(), 1.0).unwrap();
    f.update(&[3.0, 0.0]).unwrap();
    // minimize 3y₁ + ½‖y‖² over the disk by scanning the angle then the radius
    let obj = |y: [f64; 2]| 3.0 * y[0] + 0.5 * (y[0] * y[0] + y[1] * y[1]);
    let mut best = ([0.0, 0.0], obj([0.0, 0.0]));
    for i in 0..=400 {
        for j in 0..720 {
            let (r, a) = (i as f64 / 400.0, j as f64 * std::f64::consts::PI / 360.0);
            let y = [r * a.cos(), r * a.sin()];
            if obj(y) < best.1 {
                best = (y, obj(y));
            }
        }
    }
    let next = f.next();
    assert!(dist(&next, &best.0) < 1e-6);
    assert!(dist(&next, &[-1.0, 0.0]) < 1e-12);
}

#[test]
fn ftrl_starts_at_regularizer_minimizer() {
    let f = FtrlState::new(ConvexBody::centered_ball(3, 2.0).unwrap(), 0.3).unwrap();
    assert_eq!(f.next(), vec![0.0; 3]);
}

#[test]
fn unit_ball_calibration_example() {
    let body = ConvexBody::centered_ball(2, 1.0).unwrap();
    let cfg = ControllerConfig::new(10_000);
    let cal = oen_ftrl_calibration(&body, &cfg, 0.5).unwrap();
    // G = ½, factor 1 + R/(rρ) = 3
    let eta = (0.5f64 / (3.0 * 1e4)).sqrt();
    assert!((cal.eta - eta).abs() < 1e-15);
    assert!((cal.eta - 0.0040825).abs() < 1e-7);
    assert!((cal.delta - eta / 0.5).abs() < 1e-15);
    assert!((cal.delta - 0.008165).abs() < 1e-6);
    let bound = 2.0 * (3.0f64 * 1e4 * 0.5).sqrt();
    assert!((cal.regret_bound - bound).abs() < 1e-9);
    assert!((cal.regret_bound - 244.95).abs() < 0.01);
    assert!(cal.target_step_bound <= body.inradius() * cal.delta * 0.5 + 1e-15);
    assert!(cal.engine_step_bound <= cal.target_step_bound + 1e-15);
}

fn gradients(max_len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..max_len)
}

// Clip to norm at most 1 so the losses are 1-Lipschitz.
fn clip(g: &[f64]) -> Vec<f64> {
    let n = norm(g);
    if n > 1.0 { scale(g, 1.0 / n) } else { g.to_vec() }
}

proptest! {
    #[test]
    fn ftrl_depends_only_on_the_gradient_sum(gs in gradients(30), seed in 0u64..1000) {
        let body = ConvexBody::centered_ball(2, 1.0).unwrap();
        let mut a = FtrlState::new(body.clone(), 0.2).unwrap();
        let mut b = FtrlState::new(body, 0.2).unwrap();
        let mut order: Vec<usize> = (0..gs.len()).collect();
        // deterministic shuffle
        order.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).wrapping_add(seed) % 97);
        for g in &gs {
            a.update(g).unwrap();
        }
        for &i in &order {
            b.update(&gs[i]).unwrap();
        }
        prop_assert!(dist(&a.next(), &b.next()) < 1e-12);
    }

    #[test]
    fn ftrl_steps_are_bounded(gs in gradients(60), eta in 0.01f64..0.5, gamma in 0.5f64..2.0) {
        let body = ConvexBody::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let mut f = FtrlState::with_gamma(body, eta, gamma).unwrap();
        let mut prev = f.next();
        for g in &gs {
            f.update(&clip(g)).unwrap();
            let next = f.next();
            prop_assert!(dist(&next, &prev) <= eta / gamma + 1e-12);
            prev = next;
        }
    }

    #[test]
    fn fkm_points_stay_inside(losses in prop::collection::vec(-1.0f64..1.0, 1..80), seed in 0u64..1000) {
        for domain in [ConvexBody::centered_ball(3, 1.0).unwrap(), ConvexBody::simplex(4).unwrap()] {
            let probe = 0.2 * domain.inradius();
            let mut f = FkmState::new(domain.clone(), 0.05, probe, seed).unwrap();
            let contracted = f.contracted_domain().clone();
            for &l in &losses {
                prop_assert!(domain.contains(&f.point(), MEMBERSHIP_TOL));
                prop_assert!(contracted.contains(&f.center, MEMBERSHIP_TOL));
                f.step(l);
            }
            prop_assert!(domain.contains(&f.point(), MEMBERSHIP_TOL));
            prop_assert!(contracted.contains(&f.center, MEMBERSHIP_TOL));
        }
    }

    #[test]
    fn fkm_moves_are_bounded(losses in prop::collection::vec(-1.0f64..1.0, 1..80), seed in 0u64..1000) {
        let mut f = FkmState::new(ConvexBody::centered_ball(2, 1.0).unwrap(), 0.01, 0.1, seed).unwrap();
        let cap = f.step_bound(1.0);
        for &l in &losses {
            let before = f.point();
            let after = f.step(l);
            prop_assert!(dist(&before, &after) <= cap + 1e-12);
        }
    }

    #[test]
    fn ogd_stays_in_domain(gs in gradients(50), step in 0.01f64..2.0) {
        let domain = ConvexBody::smoothed_simplex(2, 0.2).unwrap();
        let mut o = OgdState::new(domain.clone(), step, vec![0.5, 0.5]).unwrap();
        for g in &gs {
            let p = o.step(g).unwrap().to_vec();
            prop_assert!(domain.contains(&p, MEMBERSHIP_TOL));
        }
    }
}
