use nested_control::geometry::{project_simplex, ConvexBody, Shape};
use nested_control::linalg::{axpy, dist, norm, scale, sub};
use nested_control::MEMBERSHIP_TOL;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bodies() -> Vec<ConvexBody> {
    let ball = ConvexBody::centered_ball(3, 1.5).unwrap();
    vec![
        ball.clone(),
        ConvexBody::ball(vec![0.2, -0.1], 0.8).unwrap(),
        ConvexBody::cube(vec![-1.0, -0.5, -2.0], vec![1.0, 0.5, 1.0]).unwrap(),
        ConvexBody::simplex(4).unwrap(),
        ConvexBody::smoothed_simplex(5, 0.3).unwrap(),
        ConvexBody::simplex_ball(vec![0.25; 4], 0.1).unwrap(),
        ball.contract(0.2).unwrap(),
        ConvexBody::simplex(3).unwrap().contract(0.4).unwrap(),
    ]
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    nested_control::rng::gaussian_vec(rng, n)
}

// Unit direction in the body's affine hull.
fn direction(body: &ConvexBody, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v = body.tangent(&gaussian(rng, body.dim()));
    scale(&v, 1.0 / norm(&v))
}

// Direction along which the boundary is closest, worked out per shape.
fn exit_direction(body: &ConvexBody, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let v = match body.shape() {
        Shape::Ball { center, .. } | Shape::SimplexBall { center, .. } => {
            let d = body.tangent(&sub(y, center));
            if norm(&d) < 1e-12 { body.tangent(&nested_control::linalg::unit(n, 0)) } else { d }
        }
        Shape::Box { lo, hi } => {
            let (mut best, mut v) = (f64::INFINITY, vec![0.0; n]);
            for i in 0..n {
                for (gap, sign) in [(y[i] - lo[i], -1.0), (hi[i] - y[i], 1.0)] {
                    if gap < best {
                        best = gap;
                        v = vec![0.0; n];
                        v[i] = sign;
                    }
                }
            }
            v
        }
        Shape::Simplex { .. } | Shape::SmoothedSimplex { .. } => {
            let i = (0..n).min_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
            body.tangent(&scale(&nested_control::linalg::unit(n, i), -1.0))
        }
        Shape::Contracted { inner, delta } => {
            let a = body.anchor();
            return exit_direction(inner, &axpy(a, 1.0 / (1.0 - delta), &sub(y, a)));
        }
    };
    scale(&v, 1.0 / norm(&v))
}

#[test]
fn radii_are_ordered_and_state_balls_hold_the_origin() {
    for b in bodies() {
        assert!(b.inradius() > 0.0 && b.circumradius() >= b.inradius(), "{b:?}");
    }
    for b in [ConvexBody::centered_ball(2, 1.0).unwrap(), ConvexBody::cube(vec![-1.0], vec![1.0]).unwrap()] {
        assert!(b.contains(&vec![0.0; b.dim()], 0.0));
    }
}

#[test]
fn projection_is_non_expansive() {
    for (k, b) in bodies().into_iter().enumerate() {
        let mut r = rng(k as u64);
        for _ in 0..1000 {
            let z1 = scale(&gaussian(&mut r, b.dim()), 2.0);
            let z2 = scale(&gaussian(&mut r, b.dim()), 2.0);
            let (p1, p2) = (b.project(&z1).unwrap(), b.project(&z2).unwrap());
            assert!(dist(&p1, &p2) <= dist(&z1, &z2) + 1e-12);
        }
    }
}

#[test]
fn projection_lands_inside_is_idempotent_and_nearest() {
    for (k, b) in bodies().into_iter().enumerate() {
        let mut r = rng(100 + k as u64);
        let members: Vec<Vec<f64>> = (0..300).map(|_| b.sample(&mut r)).collect();
        for _ in 0..50 {
            let z = scale(&gaussian(&mut r, b.dim()), 2.0);
            let p = b.project(&z).unwrap();
            assert!(b.contains(&p, MEMBERSHIP_TOL));
            assert!(dist(&b.project(&p).unwrap(), &p) < 1e-12);
            let d = dist(&p, &z);
            assert!(members.iter().all(|m| dist(m, &z) >= d - 1e-9));
        }
    }
}

// KKT conditions for the simplex projection: x = max(z - τ, 0) with Σx = 1.
fn simplex_kkt_gap(z: &[f64], x: &[f64]) -> f64 {
    let support: Vec<usize> = (0..z.len()).filter(|&i| x[i] > 1e-12).collect();
    let tau = support.iter().map(|&i| z[i] - x[i]).sum::<f64>() / support.len() as f64;
    let mut gap = (x.iter().sum::<f64>() - 1.0).abs();
    for i in 0..z.len() {
        gap = gap.max(x[i].min(0.0).abs());
        if x[i] > 1e-12 {
            gap = gap.max((z[i] - x[i] - tau).abs());
        } else {
            gap = gap.max((z[i] - tau).max(0.0));
        }
    }
    gap
}

proptest! {
    #[test]
    fn simplex_projection_meets_kkt(z in prop::collection::vec(-3.0f64..3.0, 1..=10)) {
        let x = project_simplex(&z, 1.0);
        prop_assert!(simplex_kkt_gap(&z, &x) < 1e-10);
    }

    #[test]
    fn smoothed_simplex_at_zero_matches_simplex(z in prop::collection::vec(-0.2f64..1.0, 2..=6)) {
        let n = z.len();
        let plain = ConvexBody::simplex(n).unwrap();
        let smoothed = ConvexBody::smoothed_simplex(n, 0.0).unwrap();
        // on and off the simplex
        let on = project_simplex(&z, 1.0);
        for p in [z.clone(), on] {
            prop_assert_eq!(plain.contains(&p, MEMBERSHIP_TOL), smoothed.contains(&p, MEMBERSHIP_TOL));
        }
    }

    #[test]
    fn contraction_nests(d1 in 0.0f64..0.9, extra in 0.0f64..0.09, seed in 0u64..1000) {
        let d2 = d1 + extra;
        for b in bodies() {
            let (c1, c2) = (b.contract(d1).unwrap(), b.contract(d2).unwrap());
            let mut r = rng(seed);
            for _ in 0..20 {
                let y = c2.sample(&mut r);
                prop_assert!(c1.contains(&y, MEMBERSHIP_TOL));
            }
        }
    }
}

#[test]
fn contraction_is_the_scaled_body() {
    for (k, b) in bodies().into_iter().enumerate() {
        let delta = 0.3;
        let c = b.contract(delta).unwrap();
        let a = b.anchor().to_vec();
        let mut r = rng(200 + k as u64);
        for _ in 0..200 {
            let inner = b.sample(&mut r);
            assert!(c.contains(&axpy(&a, 1.0 - delta, &sub(&inner, &a)), MEMBERSHIP_TOL));
            // a point clearly outside the body maps outside the contraction
            let u = direction(&b, &mut r);
            let far = b.project(&axpy(&a, 3.0 * b.circumradius(), &u)).unwrap();
            let outside = axpy(&far, 0.05, &u);
            if b.distance(&outside) > 1e-3 {
                assert!(!c.contains(&axpy(&a, 1.0 - delta, &sub(&outside, &a)), MEMBERSHIP_TOL));
            }
        }
    }
}

#[test]
fn boundary_distance_is_the_largest_safe_step() {
    for (k, b) in bodies().into_iter().enumerate() {
        let mut r = rng(300 + k as u64);
        for _ in 0..200 {
            let y = b.sample(&mut r);
            let pi = b.boundary_distance(&y).unwrap();
            for _ in 0..10 {
                let u = direction(&b, &mut r);
                assert!(b.contains(&axpy(&y, (pi - 1e-9).max(0.0), &u), MEMBERSHIP_TOL), "{b:?} {y:?}");
            }
            let u = exit_direction(&b, &y);
            assert!(!b.contains(&axpy(&y, pi + 1e-6, &u), MEMBERSHIP_TOL), "{b:?} {y:?} pi {pi}");
        }
    }
}

#[test]
fn simplex_boundary_distance_scales_the_smallest_coordinate() {
    let s = ConvexBody::simplex(4).unwrap();
    let y = [0.1, 0.2, 0.3, 0.4];
    let expected = 0.1 * (4.0f64 / 3.0).sqrt();
    assert!((s.boundary_distance(&y).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn projection_rejects_wrong_dimension() {
    for b in bodies() {
        assert!(b.project(&vec![0.0; b.dim() + 1]).is_err());
    }
}
