//! SO(3) and SE(3) primitives.
//!
//! Rotations are stored as 3x3 matrices; quaternions are a boundary
//! representation, ordered `(w, x, y, z)` with the real part first.
//! Twists are ordered translation-first, `(rho, phi)`, and the SE(3)
//! exponential is `exp(rho, phi) = (exp(phi), V(phi) * rho)` with `V` the
//! SO(3) left Jacobian.
//!
//! All trigonometric ratios switch to Taylor series below
//! [`SMALL_ANGLE`] so the maps are smooth through the identity.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// Below this rotation angle the closed-form coefficients are replaced by
/// their 4th-order Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Angle below which the higher-order SE(3) Jacobian coefficients use
/// series. They cancel much more aggressively than the exp/log ratios.
const JACOBIAN_SERIES_ANGLE: f64 = 5e-2;

/// Within this distance of pi, [`so3_log`] recovers the axis from the
/// symmetric part of the matrix.
const NEAR_PI: f64 = 1e-3;

const MIN_QUATERNION_NORM: f64 = 1e-12;

/// Unit quaternion `(w, x, y, z)` with the canonical sign `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: Self = Self {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes `raw` and flips it onto the `w >= 0` hemisphere.
    pub fn normalize(raw: [f64; 4]) -> Result<Self> {
        let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFiniteInput("quaternion"));
        }
        if norm <= MIN_QUATERNION_NORM {
            return Err(Error::ZeroNormQuaternion(norm));
        }
        let sign = if raw[0] < 0.0 { -1.0 } else { 1.0 };
        let s = sign / norm;
        Ok(Self {
            w: raw[0] * s,
            x: raw[1] * s,
            y: raw[2] * s,
            z: raw[3] * s,
        })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn to_rotation(&self) -> RotationMatrix {
        quat_to_rotmat(self)
    }

    /// Shepperd's method: pivot on the largest of `w^2, x^2, y^2, z^2`.
    pub fn from_rotation(r: &RotationMatrix) -> Self {
        let m = &r.0;
        let trace = m.trace();
        let diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
        let raw = if trace >= diag[0] && trace >= diag[1] && trace >= diag[2] {
            let s = 2.0 * (1.0 + trace).sqrt();
            [
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            ]
        } else if diag[0] >= diag[1] && diag[0] >= diag[2] {
            let s = 2.0 * (1.0 + diag[0] - diag[1] - diag[2]).sqrt();
            [
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            ]
        } else if diag[1] >= diag[2] {
            let s = 2.0 * (1.0 - diag[0] + diag[1] - diag[2]).sqrt();
            [
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            ]
        } else {
            let s = 2.0 * (1.0 - diag[0] - diag[1] + diag[2]).sqrt();
            [
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            ]
        };
        // A valid rotation never yields a degenerate pivot.
        Self::normalize(raw).unwrap_or(Self::IDENTITY)
    }
}

/// Element of SO(3) stored as an orthonormal 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Wraps `m` after checking orthonormality and `det = +1` to `tol`.
    pub fn from_matrix(m: Matrix3<f64>, tol: f64) -> Option<Self> {
        let ortho = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        (ortho <= tol && (det - 1.0).abs() <= tol).then_some(Self(m))
    }

    /// Wraps `m` without validation. The caller guarantees `m` is a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn to_quaternion(&self) -> UnitQuaternion {
        UnitQuaternion::from_rotation(self)
    }

    /// Frobenius norm of `R^T R - I`.
    pub fn orthogonality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Mul<Vector3<f64>> for RotationMatrix {
    type Output = Vector3<f64>;

    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// Element of the Lie algebra se(3): translation part `rho` (m) and
/// rotation part `phi` (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub rho: Vector3<f64>,
    pub phi: Vector3<f64>,
}

impl Twist {
    pub fn new(rho: Vector3<f64>, phi: Vector3<f64>) -> Self {
        Self { rho, phi }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    /// Stacked as `(rho, phi)`.
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.rho.x, self.rho.y, self.rho.z, self.phi.x, self.phi.y, self.phi.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.rho.iter().chain(self.phi.iter()).all(|c| c.is_finite())
    }
}

/// Rigid-body transform `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: RotationMatrix,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: RotationMatrix, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(RotationMatrix::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(RotationMatrix::identity(), t)
    }

    pub fn from_quaternion(q: &UnitQuaternion, t: Vector3<f64>) -> Self {
        Self::new(q.to_rotation(), t)
    }

    /// `self * other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    /// Largest absolute entry difference over rotation and translation.
    pub fn max_abs_diff(&self, other: &Pose) -> f64 {
        let r = (self.rotation.matrix() - other.rotation.matrix()).abs().max();
        let t = (self.translation - other.translation).abs().max();
        r.max(t)
    }
}

pub fn quat_normalize(raw: [f64; 4]) -> Result<UnitQuaternion> {
    UnitQuaternion::normalize(raw)
}

pub fn quat_to_rotmat(q: &UnitQuaternion) -> RotationMatrix {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, xz, yz) = (x * y, x * z, y * z);
    let (wx, wy, wz) = (w * x, w * y, w * z);
    RotationMatrix(Matrix3::new(
        1.0 - 2.0 * (yy + zz),
        2.0 * (xy - wz),
        2.0 * (xz + wy),
        2.0 * (xy + wz),
        1.0 - 2.0 * (xx + zz),
        2.0 * (yz - wx),
        2.0 * (xz - wy),
        2.0 * (yz + wx),
        1.0 - 2.0 * (xx + yy),
    ))
}

/// Quaternion logarithm `theta/2 * axis` for a canonical (`w >= 0`) unit
/// quaternion. Computed as `atan2(|v|, w) * v / |v|`, which equals
/// `acos(w) * v / |v|` on the unit sphere but keeps full precision near the
/// identity.
pub fn quat_log(q: &UnitQuaternion) -> Vector3<f64> {
    let v = q.vector();
    let s = v.norm();
    v * half_angle_over_sin(s, q.w)
}

/// `atan2(s, w) / s`, with the series `1/w - s^2/(3 w^3)` for tiny `s`.
fn half_angle_over_sin(s: f64, w: f64) -> f64 {
    if s < SMALL_ANGLE * w.abs() {
        let r = s / w;
        (1.0 - r * r / 3.0 + r.powi(4) / 5.0) / w
    } else {
        s.atan2(w) / s
    }
}

/// Skew-symmetric matrix with `hat(a) * b = a x b`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] applied to the antisymmetric part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// `sin(t)/t`, `(1 - cos t)/t^2` and `(t - sin t)/t^3`.
fn rodrigues_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        (
            1.0 - t2 / 6.0 + t4 / 120.0,
            0.5 - t2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        (s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta))
    }
}

/// `1/t^2 - (1 + cos t) / (2 t sin t)`, the `hat(phi)^2` coefficient of the
/// inverse left Jacobian. Written via `tan(t/2)` so it stays finite at pi.
fn inverse_jacobian_coefficient(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let half = 0.5 * theta;
        (1.0 - half / half.tan()) / (theta * theta)
    }
}

pub fn so3_exp(phi: &Vector3<f64>) -> RotationMatrix {
    let theta = phi.norm();
    let (a, b, _) = rodrigues_coefficients(theta);
    let k = hat(phi);
    RotationMatrix(Matrix3::identity() + k * a + k * k * b)
}

/// Rotation vector with norm in `[0, pi]`.
pub fn so3_log(r: &RotationMatrix) -> Vector3<f64> {
    let m = &r.0;
    let axis_sin = vee(m);
    let sin_theta = axis_sin.norm();
    let cos_theta = (0.5 * (m.trace() - 1.0)).clamp(-1.0, 1.0);
    let theta = sin_theta.atan2(cos_theta);

    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        // theta / sin(theta)
        return axis_sin * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
    }
    if PI - theta > NEAR_PI {
        return axis_sin * (theta / sin_theta);
    }

    // (R + R^T)/2 = cos(t) I + (1 - cos t) u u^T
    let sym = (m + m.transpose()) * 0.5;
    let outer = (sym - Matrix3::identity() * cos_theta) / (1.0 - cos_theta);
    let i = (0..3)
        .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
        .unwrap_or(0);
    let mut axis = outer.column(i).into_owned() / outer[(i, i)].max(f64::MIN_POSITIVE).sqrt();
    axis.normalize_mut();
    if axis.dot(&axis_sin) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

/// SO(3) left Jacobian `V(phi)`.
pub fn so3_left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let (_, b, c) = rodrigues_coefficients(phi.norm());
    let k = hat(phi);
    Matrix3::identity() + k * b + k * k * c
}

pub fn so3_left_jacobian_inverse(phi: &Vector3<f64>) -> Matrix3<f64> {
    let d = inverse_jacobian_coefficient(phi.norm());
    let k = hat(phi);
    Matrix3::identity() - k * 0.5 + k * k * d
}

pub fn se3_exp(xi: &Twist) -> Pose {
    Pose::new(so3_exp(&xi.phi), so3_left_jacobian(&xi.phi) * xi.rho)
}

pub fn se3_log(pose: &Pose) -> Twist {
    let phi = so3_log(&pose.rotation);
    let rho = so3_left_jacobian_inverse(&phi) * pose.translation;
    Twist::new(rho, phi)
}

pub fn se3_compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn se3_inverse(pose: &Pose) -> Pose {
    pose.inverse()
}

/// Coupling block `Q(rho, phi)` of the SE(3) left Jacobian.
fn se3_jacobian_coupling(xi: &Twist) -> Matrix3<f64> {
    let theta = xi.phi.norm();
    let (c1, c2, c3) = if theta < JACOBIAN_SERIES_ANGLE {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        (
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0,
            1.0 / 24.0 - t2 / 720.0 + t4 / 40320.0,
            1.0 / 120.0 - t2 / 2520.0 + t4 / 120960.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        let t3 = t2 * theta;
        (
            (theta - s) / t3,
            (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2),
            (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t3 * t2),
        )
    };
    let p = hat(&xi.phi);
    let r = hat(&xi.rho);
    let pr = p * r;
    let rp = r * p;
    let prp = pr * p;
    r * 0.5 + (pr + rp + prp) * c1 + (p * pr + rp * p - prp * 3.0) * c2 + (prp * p + p * prp) * c3
}

/// SE(3) left Jacobian in `(rho, phi)` ordering:
/// `exp(xi + d) ~ exp(J_l(xi) d) exp(xi)`.
pub fn se3_left_jacobian(xi: &Twist) -> Matrix6<f64> {
    let j = so3_left_jacobian(&xi.phi);
    let q = se3_jacobian_coupling(xi);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&j);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&q);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&j);
    out
}

/// Inverse of [`se3_left_jacobian`]: `log(exp(d) exp(xi)) ~ xi + J_l^-1 d`.
pub fn se3_left_jacobian_inverse(xi: &Twist) -> Matrix6<f64> {
    let j_inv = so3_left_jacobian_inverse(&xi.phi);
    let q = se3_jacobian_coupling(xi);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&j_inv);
    out.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-(j_inv * q * j_inv)));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&j_inv);
    out
}

/// Geodesic angle (rad) between two rotations.
pub fn rotation_angle_between(a: &RotationMatrix, b: &RotationMatrix) -> f64 {
    so3_log(&(a.transpose() * *b)).norm()
}
