//! One-sided (Hestenes) Jacobi SVD for 3x3 matrices.

use nalgebra::{Matrix3, Vector3};

const MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Svd3 {
    /// Left singular vectors; always a proper rotation (det = +1).
    pub u: Matrix3<f64>,
    /// Singular values, descending.
    pub sigma: [f64; 3],
    /// Right singular vectors (det may be -1).
    pub v: Matrix3<f64>,
}

/// Computes `a = u * diag(sigma) * v^T`.
///
/// When `a` has a numerically null third column space the third left vector is
/// completed as `u0 x u1`, which is why `u` is always proper.
pub(crate) fn svd3(a: &Matrix3<f64>) -> Svd3 {
    let mut w = *a;
    let mut v = Matrix3::identity();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let alpha = w.column(p).norm_squared();
            let beta = w.column(q).norm_squared();
            let gamma = w.column(p).dot(&w.column(q));
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            rotate_columns(&mut w, p, q, c, s);
            rotate_columns(&mut v, p, q, c, s);
        }
        if !rotated {
            break;
        }
    }

    let mut order = [0usize, 1, 2];
    let norms = [w.column(0).norm(), w.column(1).norm(), w.column(2).norm()];
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma = [norms[order[0]], norms[order[1]], norms[order[2]]];
    let v = Matrix3::from_columns(&[v.column(order[0]), v.column(order[1]), v.column(order[2])]);
    let cols: Vec<Vector3<f64>> = order.iter().map(|&i| w.column(i).into_owned()).collect();

    let negligible = |s: f64| s <= 8.0 * f64::EPSILON * sigma[0] || s == 0.0;

    let u0 = if negligible(sigma[0]) {
        Vector3::x()
    } else {
        cols[0] / sigma[0]
    };
    let u1 = if negligible(sigma[1]) {
        any_orthogonal(&u0)
    } else {
        let raw = cols[1] / sigma[1];
        (raw - u0 * u0.dot(&raw)).normalize()
    };
    let cross = u0.cross(&u1);
    // Sign of the third column follows the data when it is determined; the
    // returned u is forced proper, so flip v's column to keep the product.
    let (u2, v2_sign) = if negligible(sigma[2]) {
        (cross, 1.0)
    } else if cross.dot(&cols[2]) >= 0.0 {
        (cross, 1.0)
    } else {
        (cross, -1.0)
    };
    let mut v = v;
    if v2_sign < 0.0 {
        v.column_mut(2).neg_mut();
    }

    Svd3 {
        u: Matrix3::from_columns(&[u0, u1, u2]),
        sigma,
        v,
    }
}

fn rotate_columns(m: &mut Matrix3<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..3 {
        let mp = m[(r, p)];
        let mq = m[(r, q)];
        m[(r, p)] = c * mp - s * mq;
        m[(r, q)] = s * mp + c * mq;
    }
}

/// Unit vector orthogonal to `a` (assumed unit), built from the least aligned axis.
pub(crate) fn any_orthogonal(a: &Vector3<f64>) -> Vector3<f64> {
    let axis = least_aligned_axis(a);
    (axis - a * a.dot(&axis)).normalize()
}

pub(crate) fn least_aligned_axis(a: &Vector3<f64>) -> Vector3<f64> {
    let (ax, ay, az) = (a.x.abs(), a.y.abs(), a.z.abs());
    if ax <= ay && ax <= az {
        Vector3::x()
    } else if ay <= az {
        Vector3::y()
    } else {
        Vector3::z()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn reconstruct(s: &Svd3) -> Matrix3<f64> {
        s.u * Matrix3::from_diagonal(&Vector3::from(s.sigma)) * s.v.transpose()
    }

    #[test]
    fn random_matrices_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let a = Matrix3::from_fn(|_, _| rng.random_range(-3.0..3.0));
            let s = svd3(&a);
            assert!((reconstruct(&s) - a).norm() <= 1e-13 * a.norm().max(1.0));
            assert!((s.u.transpose() * s.u - Matrix3::identity()).norm() < 1e-13);
            assert!((s.v.transpose() * s.v - Matrix3::identity()).norm() < 1e-13);
            assert!((s.u.determinant() - 1.0).abs() < 1e-13);
            assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2]);
        }
    }

    #[test]
    fn agrees_with_nalgebra_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let ours = svd3(&a).sigma;
            let mut theirs: Vec<f64> = a.singular_values().iter().copied().collect();
            theirs.sort_by(|x, y| y.total_cmp(x));
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_inputs() {
        // rank 2
        let a = Matrix3::new(1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0);
        let s = svd3(&a);
        assert!((reconstruct(&s) - a).norm() < 1e-14);
        assert_eq!(s.sigma[2], 0.0);
        // rank 1
        let a = Vector3::new(1.0, 2.0, 3.0) * Vector3::new(0.5, -1.0, 2.0).transpose();
        let s = svd3(&a);
        assert!((reconstruct(&s) - a).norm() < 1e-13);
        // zero
        let s = svd3(&Matrix3::zeros());
        assert_eq!(s.sigma, [0.0; 3]);
        assert!((s.u.determinant() - 1.0).abs() < 1e-14);
    }
}
