//! SO(3) algebra.
//!
//! [`Rotation`] stores a 3x3 orthonormal matrix and converts losslessly to a
//! unit quaternion, an axis-angle pair, a rotation vector and the 6D
//! continuous representation (the first two matrix columns).
//!
//! The two bone-alignment solvers used by the IK module live here as well:
//! [`rodrigues_align`] for a single bone and [`procrustes`] for a set of bones
//! sharing a parent.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix3xX, Vector3};

use crate::svd3::{least_aligned_axis, svd3};

/// Maximum `‖RᵀR − I‖_F` and `|det R − 1|` accepted by [`Rotation::from_matrix`].
pub const ORTHONORMAL_TOL: f64 = 1e-9;
/// Vectors at or below this norm cannot define a direction.
pub const MIN_VECTOR_NORM: f64 = 1e-8;
/// Procrustes inputs with `σ₂ ≤ RANK_TOL · σ₁` are treated as rank < 2.
pub const RANK_TOL: f64 = 1e-10;

/// Per-call overrides for the module tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub orthonormal: f64,
    pub min_vector_norm: f64,
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            orthonormal: ORTHONORMAL_TOL,
            min_vector_norm: MIN_VECTOR_NORM,
            rank: RANK_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RotationError {
    #[error("degenerate bone vector: norm {norm:e} is not above {min:e}")]
    DegenerateBone { norm: f64, min: f64 },
    #[error("alignment is not unique: cross-covariance has rank < 2 (singular values {singular_values:?})")]
    RankDeficient { singular_values: [f64; 3] },
    #[error("degenerate 6D frame: {0}")]
    DegenerateFrame(&'static str),
    #[error("matrix is not a rotation (‖RᵀR − I‖ = {orthonormality:e}, det = {det})")]
    NotARotation { orthonormality: f64, det: f64 },
    #[error("quaternion has zero norm")]
    ZeroQuaternion,
    #[error("alignment needs two 3×m matrices with the same m ≥ 1, got m = {template} and m = {observed}")]
    ShapeMismatch { template: usize, observed: usize },
}

/// A quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn neg(&self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Quaternion of a rotation vector, without hemisphere canonicalization.
    ///
    /// A vector of length `θ > π` yields `w < 0`; this is what lets sequences of
    /// rotation vectors stay continuous across the double cover.
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Quaternion {
        let theta = v.norm();
        let half = 0.5 * theta;
        // sin(θ/2)/θ with a series near zero
        let k = if theta < 1e-4 {
            0.5 - theta * theta / 48.0
        } else {
            half.sin() / theta
        };
        Quaternion::new(half.cos(), k * v.x, k * v.y, k * v.z)
    }

    /// Rotation vector of a (not necessarily canonical) unit quaternion.
    ///
    /// Unlike [`Rotation::to_rotation_vector`] this keeps the hemisphere of the
    /// input, so `w < 0` produces an angle in `(π, 2π]`.
    pub fn to_rotation_vector(&self) -> Vector3<f64> {
        let v = Vector3::new(self.x, self.y, self.z);
        let s = v.norm();
        if s == 0.0 {
            return Vector3::zeros();
        }
        let theta = 2.0 * s.atan2(self.w);
        v * (theta / s)
    }
}

/// Rotation axis and angle; `angle ∈ [0, π]`, axis unit-norm when `angle > 0`
/// and the zero vector otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: Vector3<f64>,
    pub angle: f64,
}

/// An element of SO(3), stored as an orthonormal matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    matrix: Matrix3<f64>,
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Self { matrix: Matrix3::identity() }
    }

    pub fn from_matrix(matrix: Matrix3<f64>) -> Result<Self, RotationError> {
        Self::from_matrix_with(matrix, &Tolerances::default())
    }

    pub fn from_matrix_with(matrix: Matrix3<f64>, tol: &Tolerances) -> Result<Self, RotationError> {
        let orthonormality = orthonormality_error(&matrix);
        let det = matrix.determinant();
        if !(orthonormality <= tol.orthonormal) || !((det - 1.0).abs() <= tol.orthonormal) {
            return Err(RotationError::NotARotation { orthonormality, det });
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix the caller guarantees to be in SO(3).
    pub(crate) fn from_matrix_unchecked(matrix: Matrix3<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.matrix)
    }

    /// Normalizes `q`; `q` and `-q` give the same rotation.
    pub fn from_quaternion(q: Quaternion) -> Result<Self, RotationError> {
        let n = q.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(RotationError::ZeroQuaternion);
        }
        let (w, x, y, z) = (q.w / n, q.x / n, q.y / n, q.z / n);
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let (xy, xz, yz) = (x * y, x * z, y * z);
        let (wx, wy, wz) = (w * x, w * y, w * z);
        Ok(Self {
            matrix: Matrix3::new(
                1.0 - 2.0 * (yy + zz),
                2.0 * (xy - wz),
                2.0 * (xz + wy),
                2.0 * (xy + wz),
                1.0 - 2.0 * (xx + zz),
                2.0 * (yz - wx),
                2.0 * (xz - wy),
                2.0 * (yz + wx),
                1.0 - 2.0 * (xx + yy),
            ),
        })
    }

    /// Unit quaternion with `w ≥ 0`. For half-turns (`w = 0`) the first
    /// nonzero vector component is made positive.
    pub fn to_quaternion(&self) -> Quaternion {
        let m = &self.matrix;
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Quaternion::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        let n = q.norm();
        canonical_hemisphere(Quaternion::new(q.w / n, q.x / n, q.y / n, q.z / n))
    }

    /// A zero axis yields the identity regardless of `angle`.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        Self::from_rotation_vector(&(axis * (angle / n)))
    }

    pub fn to_axis_angle(&self) -> AxisAngle {
        let q = self.to_quaternion();
        let v = Vector3::new(q.x, q.y, q.z);
        let s = v.norm();
        if s == 0.0 {
            return AxisAngle { axis: Vector3::zeros(), angle: 0.0 };
        }
        AxisAngle { axis: v / s, angle: 2.0 * s.atan2(q.w) }
    }

    /// Exponential map: rotation by `‖v‖` about `v / ‖v‖`.
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        let theta2 = v.norm_squared();
        let theta = theta2.sqrt();
        let (a, b) = if theta < 1e-4 {
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        let k = skew(v);
        Self { matrix: Matrix3::identity() + k * a + k * k * b }
    }

    /// Logarithm map; the returned vector has length in `[0, π]`.
    pub fn to_rotation_vector(&self) -> Vector3<f64> {
        let aa = self.to_axis_angle();
        aa.axis * aa.angle
    }

    /// First two matrix columns, flattened column by column.
    pub fn to_rot6d(&self) -> [f64; 6] {
        let m = &self.matrix;
        [m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(0, 1)], m[(1, 1)], m[(2, 1)]]
    }

    pub fn from_rot6d(v: &[f64; 6]) -> Result<Self, RotationError> {
        Self::from_rot6d_with(v, &Tolerances::default())
    }

    /// Gram–Schmidt on the two 3-vectors, third column by cross product.
    pub fn from_rot6d_with(v: &[f64; 6], tol: &Tolerances) -> Result<Self, RotationError> {
        let a1 = Vector3::new(v[0], v[1], v[2]);
        let a2 = Vector3::new(v[3], v[4], v[5]);
        let n1 = a1.norm();
        if !(n1 > tol.min_vector_norm) {
            return Err(RotationError::DegenerateFrame("first column has (near) zero norm"));
        }
        let b1 = a1 / n1;
        let r = a2 - b1 * b1.dot(&a2);
        let nr = r.norm();
        if !(nr > tol.min_vector_norm * a2.norm().max(1.0)) {
            return Err(RotationError::DegenerateFrame("columns are collinear"));
        }
        let b2 = r / nr;
        let b3 = b1.cross(&b2);
        Ok(Self { matrix: Matrix3::from_columns(&[b1, b2, b3]) })
    }

    /// Intrinsic XYZ Euler angles: `R = Rx(a) · Ry(b) · Rz(c)`, `b ∈ [−π/2, π/2]`.
    pub fn to_euler_xyz(&self) -> [f64; 3] {
        let m = &self.matrix;
        let sb = m[(0, 2)].clamp(-1.0, 1.0);
        let b = sb.asin();
        if sb.abs() < 1.0 - 1e-12 {
            [(-m[(1, 2)]).atan2(m[(2, 2)]), b, (-m[(0, 1)]).atan2(m[(0, 0)])]
        } else {
            // gimbal lock: fold everything into the first angle
            [m[(2, 1)].atan2(m[(1, 1)]), b, 0.0]
        }
    }

    pub fn from_euler_xyz(angles: [f64; 3]) -> Self {
        Self::from_axis_angle(&Vector3::x(), angles[0])
            * Self::from_axis_angle(&Vector3::y(), angles[1])
            * Self::from_axis_angle(&Vector3::z(), angles[2])
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        angle_of(&self.matrix)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.matrix * v
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation { matrix: self.matrix * rhs.matrix }
    }
}

impl Mul<&Rotation> for &Rotation {
    type Output = Rotation;
    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation { matrix: self.matrix * rhs.matrix }
    }
}

impl Mul<Vector3<f64>> for Rotation {
    type Output = Vector3<f64>;
    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.matrix * rhs
    }
}

impl Mul<&Vector3<f64>> for &Rotation {
    type Output = Vector3<f64>;
    fn mul(self, rhs: &Vector3<f64>) -> Vector3<f64> {
        self.matrix * rhs
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn orthonormality_error(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

fn canonical_hemisphere(q: Quaternion) -> Quaternion {
    let flip = if q.w != 0.0 {
        q.w < 0.0
    } else if q.x != 0.0 {
        q.x < 0.0
    } else if q.y != 0.0 {
        q.y < 0.0
    } else {
        q.z < 0.0
    };
    if flip {
        q.neg()
    } else {
        q
    }
}

/// Angle of a rotation matrix from its symmetric and skew parts.
fn angle_of(m: &Matrix3<f64>) -> f64 {
    let c = 0.5 * (m[(0, 0)] + m[(1, 1)] + m[(2, 2)] - 1.0);
    let s = 0.5
        * Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]).norm();
    s.atan2(c)
}

/// Geodesic distance on SO(3): the angle of `aᵀb`, in `[0, π]`.
///
/// Evaluated as `atan2(sin θ, cos θ)` with `sin θ` taken from the skew part of
/// `aᵀb`; this equals `arccos(clamp((tr(aᵀb) − 1)/2))` but keeps full precision
/// near 0 and π.
pub fn geodesic_distance(a: &Rotation, b: &Rotation) -> f64 {
    angle_of(&(a.matrix.transpose() * b.matrix))
}

/// Rotation taking the direction of `template` onto the direction of `observed`.
///
/// For non-antiparallel inputs this is the minimal-angle rotation, about
/// `template × observed`. For antiparallel inputs a half-turn is returned about
/// the coordinate axis least aligned with `template`, orthogonalized against it.
pub fn rodrigues_align(
    template: &Vector3<f64>,
    observed: &Vector3<f64>,
) -> Result<Rotation, RotationError> {
    rodrigues_align_with(template, observed, &Tolerances::default())
}

pub fn rodrigues_align_with(
    template: &Vector3<f64>,
    observed: &Vector3<f64>,
    tol: &Tolerances,
) -> Result<Rotation, RotationError> {
    let t = unit(template, tol)?;
    let p = unit(observed, tol)?;
    let c = t.dot(&p);
    let axis = t.cross(&p);
    let s = axis.norm();

    if c > -0.5 {
        // R = I + K + K²/(1 + c) with K = [t × p]×; exact and free of the 0/0 at θ = 0
        let k = skew(&axis);
        return Ok(Rotation::from_matrix_unchecked(Matrix3::identity() + k + k * k / (1.0 + c)));
    }
    if s > 1e-12 {
        let theta = s.atan2(c);
        return Ok(Rotation::from_rotation_vector(&(axis * (theta / s))));
    }
    let fallback = least_aligned_axis(&t);
    let k = (fallback - t * t.dot(&fallback)).normalize();
    Ok(Rotation::from_matrix_unchecked(2.0 * k * k.transpose() - Matrix3::identity()))
}

fn unit(v: &Vector3<f64>, tol: &Tolerances) -> Result<Vector3<f64>, RotationError> {
    let n = v.norm();
    if !(n > tol.min_vector_norm) || !n.is_finite() {
        return Err(RotationError::DegenerateBone { norm: n, min: tol.min_vector_norm });
    }
    Ok(v / n)
}

/// `R ∈ SO(3)` minimizing `‖R·T − P‖_F²` for 3×m column sets `T`, `P`.
///
/// Uses the SVD `P·Tᵀ = U Σ Vᵀ` and returns `U · diag(1, 1, det(UVᵀ)) · Vᵀ`, so
/// the result is a proper rotation even when `UVᵀ` would be a reflection.
pub fn procrustes(
    template: &Matrix3xX<f64>,
    observed: &Matrix3xX<f64>,
) -> Result<Rotation, RotationError> {
    procrustes_with(template, observed, &Tolerances::default())
}

pub fn procrustes_with(
    template: &Matrix3xX<f64>,
    observed: &Matrix3xX<f64>,
    tol: &Tolerances,
) -> Result<Rotation, RotationError> {
    if template.ncols() != observed.ncols() || template.ncols() == 0 {
        return Err(RotationError::ShapeMismatch {
            template: template.ncols(),
            observed: observed.ncols(),
        });
    }
    let cross_cov: Matrix3<f64> = observed * template.transpose();
    let svd = svd3(&cross_cov);
    let [s0, s1, _] = svd.sigma;
    if !(s0 > 0.0) || !(s1 > tol.rank * s0) || !s0.is_finite() {
        return Err(RotationError::RankDeficient { singular_values: svd.sigma });
    }
    // det(U) = +1 by construction, so det(UVᵀ) = det(V)
    let d = svd.v.determinant().signum();
    let mut v = svd.v;
    v.column_mut(2).scale_mut(d);
    Ok(Rotation::from_matrix_unchecked(svd.u * v.transpose()))
}

/// `‖R·T − P‖_F²`, the quantity [`procrustes`] minimizes.
pub fn procrustes_objective(r: &Rotation, template: &Matrix3xX<f64>, observed: &Matrix3xX<f64>) -> f64 {
    (r.matrix * template - observed).norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_in_so3(r: &Rotation) {
        assert!(r.orthonormality_error() <= 1e-9);
        assert!((r.matrix().determinant() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rodrigues_parallel_is_identity() {
        let r = rodrigues_align(&Vector3::x(), &(Vector3::x() * 3.0)).unwrap();
        assert_eq!(*r.matrix(), Matrix3::identity());
    }

    #[test]
    fn rodrigues_quarter_turn() {
        let r = rodrigues_align(&Vector3::x(), &Vector3::y()).unwrap();
        let expected = Rotation::from_axis_angle(&Vector3::z(), FRAC_PI_2);
        assert!((r.matrix() - expected.matrix()).norm() < 1e-12);
    }

    #[test]
    fn rodrigues_antiparallel_is_a_valid_half_turn() {
        for t in [Vector3::x(), Vector3::new(0.3, -2.0, 0.1), Vector3::new(0.0, 0.0, -1.0)] {
            let r = rodrigues_align(&t, &-t).unwrap();
            assert_in_so3(&r);
            assert!((r * t.normalize() + t.normalize()).norm() < 1e-12);
            assert!((r.angle() - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn rodrigues_rejects_short_vectors() {
        let err = rodrigues_align(&Vector3::new(1e-9, 0.0, 0.0), &Vector3::x()).unwrap_err();
        assert!(matches!(err, RotationError::DegenerateBone { .. }));
        assert!(rodrigues_align(&Vector3::x(), &Vector3::zeros()).is_err());
    }

    #[test]
    fn procrustes_identity_and_known_rotation() {
        let t = Matrix3xX::from_columns(&[Vector3::x(), Vector3::y()]);
        let r = procrustes(&t, &t).unwrap();
        assert!((r.matrix() - Matrix3::identity()).norm() < 1e-12);

        let r0 = Rotation::from_axis_angle(&Vector3::z(), FRAC_PI_2);
        let p = r0.matrix() * &t;
        let r = procrustes(&t, &p).unwrap();
        assert!((r.matrix() - r0.matrix()).norm() < 1e-9);
        assert!(procrustes_objective(&r, &t, &p) <= procrustes_objective(&r0, &t, &p) + 1e-12);
    }

    #[test]
    fn procrustes_fixes_reflections() {
        // P is a mirror image of T; the unconstrained solution has det -1.
        let t = Matrix3xX::from_columns(&[Vector3::x(), Vector3::y(), Vector3::z()]);
        let mut p = t.clone();
        p.row_mut(2).neg_mut();
        let r = procrustes(&t, &p).unwrap();
        assert_in_so3(&r);
    }

    #[test]
    fn procrustes_rank_one_is_rejected() {
        let t = Matrix3xX::from_columns(&[Vector3::x(), Vector3::x() * 2.0]);
        let err = procrustes(&t, &t).unwrap_err();
        assert!(matches!(err, RotationError::RankDeficient { .. }));
        let err = procrustes(&t, &Matrix3xX::zeros(3)).unwrap_err();
        assert!(matches!(err, RotationError::ShapeMismatch { .. }));
    }

    #[test]
    fn geodesic_examples() {
        let r = Rotation::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 0.7);
        assert_eq!(geodesic_distance(&r, &r), 0.0);
        let z90 = Rotation::from_axis_angle(&Vector3::z(), FRAC_PI_2);
        assert!((geodesic_distance(&Rotation::identity(), &z90) - FRAC_PI_2).abs() < 1e-15);
        // tiny angles keep their precision
        let tiny = Rotation::from_axis_angle(&Vector3::y(), 1e-10);
        assert!((geodesic_distance(&Rotation::identity(), &tiny) - 1e-10).abs() < 1e-20);
    }

    #[test]
    fn rot6d_examples() {
        let id = Rotation::identity();
        assert_eq!(id.to_rot6d(), [1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(Rotation::from_rot6d(&id.to_rot6d()).unwrap(), id);

        let r = Rotation::from_rot6d(&[2.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(*r.matrix(), Matrix3::identity());

        assert!(Rotation::from_rot6d(&[0.0; 6]).is_err());
        assert!(Rotation::from_rot6d(&[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn conversion_examples() {
        let r = Rotation::from_axis_angle(&Vector3::z(), FRAC_PI_2);
        let q = r.to_quaternion();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q.w - h).abs() < 1e-15 && q.x.abs() < 1e-15 && q.y.abs() < 1e-15);
        assert!((q.z - h).abs() < 1e-15);
        let back = Rotation::from_quaternion(Quaternion::new(h, 0.0, 0.0, h)).unwrap();
        assert!((back.matrix() - r.matrix()).norm() < 1e-15);

        let id = Rotation::from_rotation_vector(&Vector3::zeros());
        assert_eq!(*id.matrix(), Matrix3::identity());
        assert_eq!(id.to_quaternion(), Quaternion::IDENTITY);
        assert_eq!(id.to_rotation_vector(), Vector3::zeros());
        assert!(Rotation::from_quaternion(Quaternion::new(0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn half_turn_quaternion_is_canonical() {
        // exact half-turn about -y: 2kkᵀ − I
        let k = Vector3::new(0.0, -1.0, 0.0);
        let r = Rotation::from_matrix(2.0 * k * k.transpose() - Matrix3::identity()).unwrap();
        let q = r.to_quaternion();
        assert_eq!(q.w, 0.0);
        assert!(q.y > 0.0);
        assert!((r.to_axis_angle().angle - PI).abs() < 1e-12);
    }

    #[test]
    fn euler_xyz_round_trip() {
        let angles = [0.3, -1.1, 2.0];
        let r = Rotation::from_euler_xyz(angles);
        let back = r.to_euler_xyz();
        for (a, b) in angles.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn from_matrix_validates() {
        assert!(Rotation::from_matrix(Matrix3::identity() * 2.0).is_err());
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Rotation::from_matrix(reflection).is_err());
        assert!(Rotation::from_matrix(Matrix3::identity()).is_ok());
    }

    #[test]
    fn raw_quaternion_keeps_hemisphere() {
        let v = Vector3::new(0.0, 0.0, 1.5 * PI);
        let q = Quaternion::from_rotation_vector(&v);
        assert!(q.w < 0.0);
        assert!((q.to_rotation_vector() - v).norm() < 1e-12);
    }
}
