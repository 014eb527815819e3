//! Convex bodies used as state and action spaces.
//!
//! Every body carries an anchor point. Contraction scales about the anchor,
//! and the inradius `r` / circumradius `R` are measured from it. For balls
//! and boxes containing the origin the anchor is the origin (or the ball
//! center); simplex-type bodies anchor at the uniform vector and measure all
//! distances inside the affine hull `{sum y = 1}`.

use rand::Rng;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{add, axpy, dist, norm, scale, sub};

/// Default membership tolerance shared by every feasibility assertion.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Simplex { n: usize },
    SmoothedSimplex { n: usize, phi: f64 },
    /// Ball of the given radius inside the affine hull of the simplex.
    SimplexBall { center: Vec<f64>, radius: f64 },
    Contracted { inner: Box<ConvexBody>, delta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody {
    shape: Shape,
    anchor: Vec<f64>,
    inradius: f64,
    circumradius: f64,
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Euclidean projection onto {x >= 0, sum x = total} by sort-and-threshold.
pub fn project_simplex(z: &[f64], total: f64) -> Vec<f64> {
    let mut u = z.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - total) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            tau = t;
        }
    }
    z.iter().map(|&v| (v - tau).max(0.0)).collect()
}

impl ConvexBody {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.is_empty() {
            return Err(invalid("radius", "ball needs positive radius and nonzero dimension"));
        }
        Ok(Self {
            anchor: center.clone(),
            inradius: radius,
            circumradius: radius,
            shape: Shape::Ball { center, radius },
        })
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(vec![0.0; dim], radius)
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("box", "need lo < hi in every coordinate"));
        }
        let inside = lo.iter().zip(&hi).all(|(a, b)| *a < 0.0 && 0.0 < *b);
        let anchor: Vec<f64> = if inside {
            vec![0.0; lo.len()]
        } else {
            lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
        };
        let inradius = (0..lo.len())
            .map(|i| (anchor[i] - lo[i]).min(hi[i] - anchor[i]))
            .fold(f64::INFINITY, f64::min);
        let far: Vec<f64> = (0..lo.len())
            .map(|i| (anchor[i] - lo[i]).max(hi[i] - anchor[i]))
            .collect();
        Ok(Self { circumradius: norm(&far), inradius, anchor, shape: Shape::Box { lo, hi } })
    }

    pub fn simplex(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", "simplex needs n >= 2"));
        }
        let nf = n as f64;
        Ok(Self {
            shape: Shape::Simplex { n },
            anchor: uniform(n),
            inradius: 1.0 / (nf * (nf - 1.0)).sqrt(),
            circumradius: ((nf - 1.0) / nf).sqrt(),
        })
    }

    pub fn smoothed_simplex(n: usize, phi: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&phi) {
            return Err(invalid("phi", "smoothing must lie in [0, 1)"));
        }
        let base = Self::simplex(n)?;
        Ok(Self {
            shape: Shape::SmoothedSimplex { n, phi },
            anchor: uniform(n),
            inradius: (1.0 - phi) * base.inradius,
            circumradius: (1.0 - phi) * base.circumradius,
        })
    }

    /// Ball inside the simplex's affine hull; it must fit inside the simplex.
    pub fn simplex_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = center.len();
        let simplex = Self::simplex(n)?;
        let room = simplex
            .boundary_distance(&center)
            .map_err(|_| invalid("center", "center must lie in the simplex"))?;
        if !(radius > 0.0) || radius > room + 1e-15 {
            return Err(invalid("radius", format!("radius {radius} exceeds room {room} to the simplex boundary")));
        }
        Ok(Self {
            anchor: center.clone(),
            inradius: radius,
            circumradius: radius,
            shape: Shape::SimplexBall { center, radius },
        })
    }

    /// The body scaled by (1 - delta) about its anchor.
    pub fn contract(&self, delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(invalid("delta", format!("contraction {delta} must lie in [0, 1)")));
        }
        Ok(Self {
            anchor: self.anchor.clone(),
            inradius: (1.0 - delta) * self.inradius,
            circumradius: (1.0 - delta) * self.circumradius,
            shape: Shape::Contracted { inner: Box::new(self.clone()), delta },
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Dimension of the affine hull.
    pub fn intrinsic_dim(&self) -> usize {
        if self.in_simplex_hull() {
            self.dim() - 1
        } else {
            self.dim()
        }
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    pub fn in_simplex_hull(&self) -> bool {
        match &self.shape {
            Shape::Simplex { .. } | Shape::SmoothedSimplex { .. } | Shape::SimplexBall { .. } => true,
            Shape::Contracted { inner, .. } => inner.in_simplex_hull(),
            _ => false,
        }
    }

    /// Removes the component of `v` normal to the affine hull.
    pub fn tangent(&self, v: &[f64]) -> Vec<f64> {
        if self.in_simplex_hull() {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| x - mean).collect()
        } else {
            v.to_vec()
        }
    }

    fn unscale(&self, delta: f64, z: &[f64]) -> Vec<f64> {
        // anchor + (z - anchor) / (1 - delta)
        axpy(&self.anchor, 1.0 / (1.0 - delta), &sub(z, &self.anchor))
    }

    fn rescale(&self, delta: f64, y: &[f64]) -> Vec<f64> {
        axpy(&self.anchor, 1.0 - delta, &sub(y, &self.anchor))
    }

    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), z.len())?;
        Ok(self.project_raw(z))
    }

    fn project_raw(&self, z: &[f64]) -> Vec<f64> {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let d = sub(z, center);
                let len = norm(&d);
                if len <= *radius {
                    z.to_vec()
                } else {
                    axpy(center, radius / len, &d)
                }
            }
            Shape::Box { lo, hi } => {
                z.iter().zip(lo.iter().zip(hi)).map(|(v, (a, b))| v.clamp(*a, *b)).collect()
            }
            Shape::Simplex { .. } => project_simplex(z, 1.0),
            Shape::SmoothedSimplex { n, phi } => {
                let u = uniform(*n);
                let pre = axpy(&u, 1.0 / (1.0 - phi), &sub(z, &u));
                axpy(&u, 1.0 - phi, &sub(&project_simplex(&pre, 1.0), &u))
            }
            Shape::SimplexBall { center, radius } => {
                let d = self.tangent(&sub(z, center));
                let len = norm(&d);
                if len <= *radius {
                    add(center, &d)
                } else {
                    axpy(center, radius / len, &d)
                }
            }
            Shape::Contracted { inner, delta } => {
                self.rescale(*delta, &inner.project_raw(&self.unscale(*delta, z)))
            }
        }
    }

    /// Euclidean distance from `z` to the body.
    pub fn distance(&self, z: &[f64]) -> f64 {
        if z.len() != self.dim() {
            return f64::INFINITY;
        }
        dist(z, &self.project_raw(z))
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.distance(z) <= tol
    }

    /// Distance from a member to the (relative) boundary.
    pub fn boundary_distance(&self, y: &[f64]) -> Result<f64> {
        check_dim(self.dim(), y.len())?;
        let d = self.distance(y);
        if d > MEMBERSHIP_TOL {
            return Err(Error::OutsideBody { distance: d });
        }
        Ok(self.boundary_distance_raw(y).max(0.0))
    }

    fn boundary_distance_raw(&self, y: &[f64]) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => radius - dist(y, center),
            Shape::Box { lo, hi } => (0..y.len())
                .map(|i| (y[i] - lo[i]).min(hi[i] - y[i]))
                .fold(f64::INFINITY, f64::min),
            Shape::Simplex { n } => {
                let nf = *n as f64;
                y.iter().cloned().fold(f64::INFINITY, f64::min) * (nf / (nf - 1.0)).sqrt()
            }
            Shape::SmoothedSimplex { n, phi } => {
                let nf = *n as f64;
                let floor = phi / nf;
                (y.iter().cloned().fold(f64::INFINITY, f64::min) - floor) * (nf / (nf - 1.0)).sqrt()
            }
            Shape::SimplexBall { center, radius } => radius - dist(y, center),
            Shape::Contracted { inner, delta } => {
                (1.0 - delta) * inner.boundary_distance_raw(&self.unscale(*delta, y))
            }
        }
    }

    /// Closest point of the (relative) boundary to a member `y`.
    pub fn nearest_boundary_point(&self, y: &[f64]) -> Vec<f64> {
        match &self.shape {
            Shape::Ball { center, radius } | Shape::SimplexBall { center, radius } => {
                let d = self.tangent(&sub(y, center));
                let len = norm(&d);
                if len < 1e-15 {
                    let dir = self.tangent(&crate::linalg::unit(y.len(), 0));
                    let l = norm(&dir);
                    axpy(center, radius / l, &dir)
                } else {
                    axpy(center, radius / len, &d)
                }
            }
            Shape::Box { lo, hi } => {
                let mut best = (f64::INFINITY, 0, 0.0);
                for i in 0..y.len() {
                    if y[i] - lo[i] < best.0 {
                        best = (y[i] - lo[i], i, lo[i]);
                    }
                    if hi[i] - y[i] < best.0 {
                        best = (hi[i] - y[i], i, hi[i]);
                    }
                }
                let mut z = y.to_vec();
                z[best.1] = best.2;
                z
            }
            Shape::Simplex { n } => simplex_facet_point(y, *n, 0.0),
            Shape::SmoothedSimplex { n, phi } => simplex_facet_point(y, *n, phi / *n as f64),
            Shape::Contracted { inner, delta } => {
                self.rescale(*delta, &inner.nearest_boundary_point(&self.unscale(*delta, y)))
            }
        }
    }

    /// Axis-aligned box enclosing the body.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Shape::Ball { center, radius } | Shape::SimplexBall { center, radius } => (
                center.iter().map(|c| (c - radius).max(if self.in_simplex_hull() { 0.0 } else { f64::MIN })).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Shape::Box { lo, hi } => (lo.clone(), hi.clone()),
            Shape::Simplex { n } => (vec![0.0; *n], vec![1.0; *n]),
            Shape::SmoothedSimplex { n, phi } => {
                let nf = *n as f64;
                (vec![phi / nf; *n], vec![1.0 - phi + phi / nf; *n])
            }
            Shape::Contracted { inner, delta } => {
                let (lo, hi) = inner.bounding_box();
                (self.rescale(*delta, &lo), self.rescale(*delta, &hi))
            }
        }
    }

    /// Uniform-ish interior sample used by multistarts and property tests.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let dir = crate::rng::uniform_sphere(rng, center.len());
                let u: f64 = rng.random();
                axpy(center, radius * u.powf(1.0 / center.len() as f64), &dir)
            }
            Shape::SimplexBall { center, radius } => {
                let g = crate::rng::gaussian_vec(rng, center.len());
                let t = self.tangent(&g);
                let len = norm(&t).max(1e-300);
                let u: f64 = rng.random();
                axpy(center, radius * u.powf(1.0 / (center.len() - 1) as f64) / len, &t)
            }
            Shape::Box { lo, hi } => {
                lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect()
            }
            Shape::Simplex { n } => {
                let e: Vec<f64> = (0..*n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = e.iter().sum();
                scale(&e, 1.0 / s)
            }
            Shape::SmoothedSimplex { n, phi } => {
                let base = ConvexBody::simplex(*n).unwrap().sample(rng);
                axpy(&uniform(*n), 1.0 - phi, &sub(&base, &uniform(*n)))
            }
            Shape::Contracted { inner, delta } => self.rescale(*delta, &inner.sample(rng)),
        }
    }

    /// Deterministic grid of members with the given spacing. Simplex-type
    /// bodies are gridded over their first n-1 coordinates.
    pub fn grid(&self, spacing: f64) -> Vec<Vec<f64>> {
        let (lo, hi) = self.bounding_box();
        let free = if self.in_simplex_hull() { self.dim() - 1 } else { self.dim() };
        let counts: Vec<usize> = (0..free)
            .map(|i| ((hi[i] - lo[i]) / spacing).floor() as usize + 1)
            .collect();
        let total: usize = counts.iter().product();
        let mut out = Vec::new();
        let mut idx = vec![0usize; free];
        for _ in 0..total {
            let mut p: Vec<f64> = (0..free).map(|i| lo[i] + idx[i] as f64 * spacing).collect();
            if free < self.dim() {
                let s: f64 = p.iter().sum();
                p.push(1.0 - s);
            }
            if self.contains(&p, 1e-12) {
                out.push(p);
            }
            for i in 0..free {
                idx[i] += 1;
                if idx[i] < counts[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        out
    }
}

fn simplex_facet_point(y: &[f64], n: usize, floor: f64) -> Vec<f64> {
    let (i, &yi) = y
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let excess = yi - floor;
    let share = excess / (n as f64 - 1.0);
    y.iter()
        .enumerate()
        .map(|(j, &v)| if j == i { floor } else { v + share })
        .collect()
}
