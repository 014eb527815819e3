//! Small dense helpers shared by the solvers. Vectors are plain `Vec<f64>`;
//! matrices go through nalgebra when a factorization is needed.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// a + s * b
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).as_slice().to_vec()
}

pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Minimum-norm least-squares solution of `m x = rhs`.
pub fn lstsq(m: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = smax * 1e-13 * (m.nrows().max(m.ncols()) as f64);
    svd.solve(&DVector::from_column_slice(rhs), eps)
        .map(|v| v.as_slice().to_vec())
        .unwrap_or_else(|_| vec![0.0; m.ncols()])
}

/// Lawson-Hanson non-negative least squares: argmin ||a x - b|| over x >= 0.
pub fn nnls(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = a.ncols();
    let bv = DVector::from_column_slice(b);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = a.norm().max(1.0) * bv.norm().max(1.0);
    let tol = 1e-13 * scale;
    for _outer in 0..(3 * n + 10) {
        let w = a.transpose() * (&bv - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _inner in 0..(3 * n + 10) {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub_a = a.select_columns(idx.iter());
            let s_p = lstsq(&sub_a, b);
            let mut s = DVector::zeros(n);
            for (k, &i) in idx.iter().enumerate() {
                s[i] = s_p[k];
            }
            if idx.iter().all(|&i| s[i] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &i in &idx {
                if s[i] <= 0.0 {
                    let denom = x[i] - s[i];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            x = &x + (&s - &x) * alpha;
            for &i in &idx {
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    x.as_slice().to_vec()
}

/// argmin ||rows^T x - target|| over the probability simplex, where `rows`
/// stacks one candidate point per row. The sum constraint is appended as a
/// heavily weighted equation and solved with [`nnls`].
pub fn simplex_least_squares(rows: &DMatrix<f64>, target: &[f64]) -> Vec<f64> {
    let m = rows.nrows();
    let n = rows.ncols();
    let weight = 1e4 * rows.norm().max(1.0);
    let mut a = DMatrix::zeros(n + 1, m);
    for i in 0..m {
        for j in 0..n {
            a[(j, i)] = rows[(i, j)];
        }
        a[(n, i)] = weight;
    }
    let mut b = target.to_vec();
    b.push(weight);
    let mut x = nnls(&a, &b);
    let total: f64 = x.iter().sum();
    if total > 0.0 {
        for v in x.iter_mut() {
            *v /= total;
        }
    } else {
        x = vec![1.0 / m as f64; m];
    }
    polish_on_support(rows, target, x)
}

// The weighted sum row costs a few digits; re-solve exactly on the support,
// eliminating the last support weight through the sum constraint.
fn polish_on_support(rows: &DMatrix<f64>, target: &[f64], x: Vec<f64>) -> Vec<f64> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 1e-12).collect();
    let Some((&last, rest)) = support.split_last() else { return x };
    let n = rows.ncols();
    let mut diff = DMatrix::zeros(n, rest.len());
    for (c, &i) in rest.iter().enumerate() {
        for j in 0..n {
            diff[(j, c)] = rows[(i, j)] - rows[(last, j)];
        }
    }
    let rhs: Vec<f64> = (0..n).map(|j| target[j] - rows[(last, j)]).collect();
    let w = if rest.is_empty() { vec![] } else { lstsq(&diff, &rhs) };
    let tail = 1.0 - w.iter().sum::<f64>();
    if tail < 0.0 || w.iter().any(|&v| v < 0.0) {
        return x;
    }
    let residual = |z: &[f64]| {
        let mut r = target.to_vec();
        for (i, zi) in z.iter().enumerate() {
            for j in 0..n {
                r[j] -= zi * rows[(i, j)];
            }
        }
        norm(&r)
    };
    let mut out = vec![0.0; x.len()];
    for (c, &i) in rest.iter().enumerate() {
        out[i] = w[c];
    }
    out[last] = tail;
    if residual(&out) <= residual(&x) {
        out
    } else {
        x
    }
}

/// Accelerated projected gradient on a smooth convex objective.
pub fn projected_gradient<G, P>(
    x0: &[f64],
    lipschitz: f64,
    iters: usize,
    grad: G,
    project: P,
) -> Vec<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let step = 1.0 / lipschitz.max(1e-300);
    let mut x = project(x0);
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let g = grad(&z);
        let next = project(&axpy(&z, -step, &g));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        z = next.iter().zip(&x).map(|(n, o)| n + momentum * (n - o)).collect();
        if dist(&next, &x) < 1e-16 {
            x = next;
            break;
        }
        x = next;
        t = t_next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_matches_unconstrained_when_positive() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 1.0, 1.0]);
        let b = [1.0, 2.0, 2.0];
        let x = nnls(&a, &b);
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nnls_clips_negative_coordinate() {
        let a = DMatrix::identity(2, 2);
        let x = nnls(&a, &[-1.0, 3.0]);
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_ls_recovers_convex_weights() {
        let rows = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]);
        let x = simplex_least_squares(&rows, &[0.2, 0.1]);
        let p = [x[0] - x[2], x[1] - x[2]];
        assert!((p[0] - 0.2).abs() < 1e-9 && (p[1] - 0.1).abs() < 1e-9);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
