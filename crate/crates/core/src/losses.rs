//! Pose-regression losses over a 28-dimensional prediction
//! `(t[3], q_raw[4], cov_raw[21])`, each with an analytic gradient.
//!
//! | id           | form                                                               |
//! |--------------|--------------------------------------------------------------------|
//! | `posenet_l2` | `|t^ - t|^2 + beta |q^ - q/|q||^2`                                  |
//! | `homo_l2`    | `e^-sx |t^ - t|^2 + sx + e^-sq |q^ - q/|q||^2 + sq`                |
//! | `logq_l1`    | `e^-sx |t^ - t|_1 + sx + e^-sq |log q^ - log q|_1 + sq`            |
//! | `lie_nll`    | `1/2 |log(mu^-1 x)|^2_Sigma + 1/2 log det Sigma + 3 ln(2 pi)`       |
//!
//! The quaternion-difference losses resolve the double cover by choosing
//! the target sign closest to the prediction. Gradients are assembled from
//! closed-form Jacobians of each stage; finite differences live in
//! [`crate::gradcheck`] and are only used to verify them.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3, Vector4, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    log_normalizer, CholeskyFactor, ConcentratedGaussian, RawCovParams, DIM, N_RAW,
    OFFDIAG_POSITIONS,
};
use crate::lie::{
    quat_log, quat_normalize, se3_left_jacobian_inverse, se3_log, Pose, UnitQuaternion,
};

pub const PRED_DIM: usize = 3 + 4 + N_RAW;
pub const TRANSLATION: Range<usize> = 0..3;
pub const QUATERNION: Range<usize> = 3..7;
pub const COVARIANCE: Range<usize> = 7..PRED_DIM;
/// Slots of the six log-diagonal covariance parameters.
pub const COV_DIAGONAL: Range<usize> = 7..7 + DIM;

const MIN_QUATERNION_NORM: f64 = 1e-12;

/// Regressor output: translation, raw quaternion `(w, x, y, z)`, raw
/// covariance parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionVector(pub [f64; PRED_DIM]);

impl PredictionVector {
    pub fn from_parts(t: Vector3<f64>, q_raw: [f64; 4], cov: &RawCovParams) -> Self {
        let mut out = [0.0; PRED_DIM];
        out[TRANSLATION].copy_from_slice(t.as_slice());
        out[QUATERNION].copy_from_slice(&q_raw);
        out[COVARIANCE].copy_from_slice(&cov.to_array());
        Self(out)
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; PRED_DIM] = values.try_into().map_err(|_| Error::DimensionMismatch {
            expected: PRED_DIM,
            got: values.len(),
        })?;
        Ok(Self(arr))
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn quaternion_raw(&self) -> [f64; 4] {
        [self.0[3], self.0[4], self.0[5], self.0[6]]
    }

    pub fn cov_raw(&self) -> RawCovParams {
        // Length is fixed by the layout.
        RawCovParams::from_slice(&self.0[COVARIANCE]).expect("21 covariance slots")
    }

    /// Mean pose encoded by the first seven components.
    pub fn mean_pose(&self) -> Result<Pose> {
        let q = quat_normalize(self.quaternion_raw())?;
        Ok(Pose::from_quaternion(&q, self.translation()))
    }

    pub fn distribution(&self) -> Result<ConcentratedGaussian> {
        let factor = CholeskyFactor::from_raw(&self.cov_raw())?;
        Ok(ConcentratedGaussian::new(self.mean_pose()?, factor))
    }
}

/// Ground-truth pose with its canonical quaternion and quaternion log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseTarget {
    pub pose: Pose,
    quaternion: UnitQuaternion,
    log_quaternion: Vector3<f64>,
}

impl PoseTarget {
    pub fn new(pose: Pose) -> Self {
        let quaternion = pose.rotation.to_quaternion();
        Self {
            pose,
            quaternion,
            log_quaternion: quat_log(&quaternion),
        }
    }

    pub fn quaternion(&self) -> &UnitQuaternion {
        &self.quaternion
    }
}

/// Global log-variances of translation and rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoscedasticParams {
    pub s_x: f64,
    pub s_q: f64,
}

impl HomoscedasticParams {
    pub fn new(s_x: f64, s_q: f64) -> Self {
        Self { s_x, s_q }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGradient {
    pub d_pred: [f64; PRED_DIM],
    pub d_sx: f64,
    pub d_sq: f64,
}

impl LossGradient {
    pub fn zero() -> Self {
        Self {
            d_pred: [0.0; PRED_DIM],
            d_sx: 0.0,
            d_sq: 0.0,
        }
    }

    /// `d_pred` followed by `d_sx`, `d_sq`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = self.d_pred.to_vec();
        out.push(self.d_sx);
        out.push(self.d_sq);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.d_pred.iter().all(|v| v.is_finite()) && self.d_sx.is_finite() && self.d_sq.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LossId {
    #[serde(rename = "posenet_l2")]
    PosenetL2,
    #[serde(rename = "homo_l2")]
    HomoL2,
    #[serde(rename = "logq_l1")]
    LogqL1,
    #[serde(rename = "lie_nll")]
    LieNll,
}

impl LossId {
    pub const ALL: [LossId; 4] = [LossId::PosenetL2, LossId::HomoL2, LossId::LogqL1, LossId::LieNll];

    pub fn as_str(&self) -> &'static str {
        match self {
            LossId::PosenetL2 => "posenet_l2",
            LossId::HomoL2 => "homo_l2",
            LossId::LogqL1 => "logq_l1",
            LossId::LieNll => "lie_nll",
        }
    }

    /// Whether the loss carries learnable `s_x`, `s_q`.
    pub fn is_homoscedastic(&self) -> bool {
        matches!(self, LossId::HomoL2 | LossId::LogqL1)
    }
}

impl fmt::Display for LossId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss id '{s}'")))
    }
}

/// Loss-side parameters shared by the dispatching entry points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub beta: f64,
    pub homo: HomoscedasticParams,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            beta: 500.0,
            homo: HomoscedasticParams::new(-3.0, -3.0),
        }
    }
}

pub fn loss(id: LossId, pred: &PredictionVector, target: &PoseTarget, params: &LossParams) -> Result<f64> {
    match id {
        LossId::PosenetL2 => loss_posenet_l2(pred, target, params.beta),
        LossId::HomoL2 => loss_homoscedastic_l2(pred, target, &params.homo),
        LossId::LogqL1 => loss_logq_l1(pred, target, &params.homo),
        LossId::LieNll => loss_lie_nll(pred, target),
    }
}

pub fn loss_and_grad(
    id: LossId,
    pred: &PredictionVector,
    target: &PoseTarget,
    params: &LossParams,
) -> Result<(f64, LossGradient)> {
    match id {
        LossId::PosenetL2 => grad_posenet_l2(pred, target, params.beta),
        LossId::HomoL2 => grad_homoscedastic_l2(pred, target, &params.homo),
        LossId::LogqL1 => grad_logq_l1(pred, target, &params.homo),
        LossId::LieNll => grad_lie_nll(pred, target),
    }
}

/// `q_raw / |q_raw|` without sign canonicalization, and `|q_raw|`.
fn unit_direction(q_raw: [f64; 4]) -> Result<(Vector4<f64>, f64)> {
    let q = Vector4::from(q_raw);
    let n = q.norm();
    if !n.is_finite() {
        return Err(Error::NonFiniteInput("quaternion"));
    }
    if n <= MIN_QUATERNION_NORM {
        return Err(Error::ZeroNormQuaternion(n));
    }
    Ok((q / n, n))
}

/// Jacobian of `q_raw -> q_raw / |q_raw|`.
fn normalization_jacobian(unit: &Vector4<f64>, norm: f64) -> Matrix4<f64> {
    (Matrix4::identity() - unit * unit.transpose()) / norm
}

/// `s q^ - q` with the target sign `s` chosen to minimize the difference.
fn antipodal_residual(target: &UnitQuaternion, unit: &Vector4<f64>) -> Vector4<f64> {
    let t = Vector4::from(target.coords());
    if t.dot(unit) >= 0.0 {
        t - unit
    } else {
        -t - unit
    }
}

fn l1(v: &Vector3<f64>) -> f64 {
    v.iter().map(|c| c.abs()).sum()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")))
    }
}

pub fn loss_posenet_l2(pred: &PredictionVector, target: &PoseTarget, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let (unit, _) = unit_direction(pred.quaternion_raw())?;
    let dt = target.pose.translation - pred.translation();
    Ok(dt.norm_squared() + beta * antipodal_residual(&target.quaternion, &unit).norm_squared())
}

pub fn grad_posenet_l2(
    pred: &PredictionVector,
    target: &PoseTarget,
    beta: f64,
) -> Result<(f64, LossGradient)> {
    check_beta(beta)?;
    let (unit, norm) = unit_direction(pred.quaternion_raw())?;
    let dt = target.pose.translation - pred.translation();
    let r = antipodal_residual(&target.quaternion, &unit);
    let value = dt.norm_squared() + beta * r.norm_squared();

    let mut grad = LossGradient::zero();
    grad.d_pred[TRANSLATION].copy_from_slice((dt * -2.0).as_slice());
    let d_q = normalization_jacobian(&unit, norm) * (r * (-2.0 * beta));
    grad.d_pred[QUATERNION].copy_from_slice(d_q.as_slice());
    Ok((value, grad))
}

pub fn loss_homoscedastic_l2(
    pred: &PredictionVector,
    target: &PoseTarget,
    params: &HomoscedasticParams,
) -> Result<f64> {
    let (unit, _) = unit_direction(pred.quaternion_raw())?;
    let dt = target.pose.translation - pred.translation();
    let r = antipodal_residual(&target.quaternion, &unit);
    Ok((-params.s_x).exp() * dt.norm_squared()
        + params.s_x
        + (-params.s_q).exp() * r.norm_squared()
        + params.s_q)
}

pub fn grad_homoscedastic_l2(
    pred: &PredictionVector,
    target: &PoseTarget,
    params: &HomoscedasticParams,
) -> Result<(f64, LossGradient)> {
    let (unit, norm) = unit_direction(pred.quaternion_raw())?;
    let dt = target.pose.translation - pred.translation();
    let r = antipodal_residual(&target.quaternion, &unit);
    let wx = (-params.s_x).exp();
    let wq = (-params.s_q).exp();
    let (et, eq) = (dt.norm_squared(), r.norm_squared());
    let value = wx * et + params.s_x + wq * eq + params.s_q;

    let mut grad = LossGradient::zero();
    grad.d_pred[TRANSLATION].copy_from_slice((dt * (-2.0 * wx)).as_slice());
    let d_q = normalization_jacobian(&unit, norm) * (r * (-2.0 * wq));
    grad.d_pred[QUATERNION].copy_from_slice(d_q.as_slice());
    grad.d_sx = 1.0 - wx * et;
    grad.d_sq = 1.0 - wq * eq;
    Ok((value, grad))
}

pub fn loss_logq_l1(
    pred: &PredictionVector,
    target: &PoseTarget,
    params: &HomoscedasticParams,
) -> Result<f64> {
    let q = quat_normalize(pred.quaternion_raw())?;
    let dt = target.pose.translation - pred.translation();
    let dlog = target.log_quaternion - quat_log(&q);
    Ok((-params.s_x).exp() * l1(&dt) + params.s_x + (-params.s_q).exp() * l1(&dlog) + params.s_q)
}

/// Jacobian of `q -> atan2(|v|, w) v / |v|` with respect to `(w, v)`.
fn quat_log_jacobian(q: &Vector4<f64>) -> Matrix3x4<f64> {
    let w = q[0];
    let v = Vector3::new(q[1], q[2], q[3]);
    let s = v.norm();
    let r2 = s * s + w * w;
    // g = atan2(s, w) / s and h = (dg/ds) / s
    let (g, h) = if s < 1e-3 * w.abs() {
        let u = s / w;
        let u2 = u * u;
        let g = (1.0 - u2 / 3.0 + u2 * u2 / 5.0) / w;
        let h = (-2.0 / 3.0 + 0.8 * u2) / (w * w * w);
        (g, h)
    } else {
        let a = s.atan2(w);
        (a / s, (w * s / r2 - a) / (s * s * s))
    };
    let mut out = Matrix3x4::zeros();
    out.column_mut(0).copy_from(&(v * (-1.0 / r2)));
    out.fixed_view_mut::<3, 3>(0, 1)
        .copy_from(&(Matrix3::identity() * g + v * v.transpose() * h));
    out
}

pub fn grad_logq_l1(
    pred: &PredictionVector,
    target: &PoseTarget,
    params: &HomoscedasticParams,
) -> Result<(f64, LossGradient)> {
    let (unit, norm) = unit_direction(pred.quaternion_raw())?;
    // Canonical hemisphere, matching `quat_normalize`.
    let canon_sign = if unit[0] < 0.0 { -1.0 } else { 1.0 };
    let q = unit * canon_sign;
    let log_q = quat_log(&quat_normalize(pred.quaternion_raw())?);
    let dt = target.pose.translation - pred.translation();
    let dlog = target.log_quaternion - log_q;
    let wx = (-params.s_x).exp();
    let wq = (-params.s_q).exp();
    let (et, eq) = (l1(&dt), l1(&dlog));
    let value = wx * et + params.s_x + wq * eq + params.s_q;

    let mut grad = LossGradient::zero();
    for k in 0..3 {
        grad.d_pred[k] = -wx * sign(dt[k]);
    }
    let d_log = dlog.map(|c| -wq * sign(c));
    let d_unit = quat_log_jacobian(&q).transpose() * d_log * canon_sign;
    let d_q = normalization_jacobian(&unit, norm) * d_unit;
    grad.d_pred[QUATERNION].copy_from_slice(d_q.as_slice());
    grad.d_sx = 1.0 - wx * et;
    grad.d_sq = 1.0 - wq * eq;
    Ok((value, grad))
}

/// Negative log-likelihood of the ground truth under the predicted
/// concentrated Gaussian. The residual is `log(mu^-1 x)` with `mu` the
/// prediction and `x` the target.
pub fn loss_lie_nll(pred: &PredictionVector, target: &PoseTarget) -> Result<f64> {
    pred.distribution()?.nll(&target.pose)
}

/// `d/d(q_raw)` of the body-frame rotation increment:
/// `R(q + dq) ~ R(q) exp(2/|q| G(q) dq)`, `G = [-v | w I - hat(v)]`.
fn body_rate_jacobian(unit: &Vector4<f64>) -> Matrix3x4<f64> {
    let w = unit[0];
    let v = Vector3::new(unit[1], unit[2], unit[3]);
    let mut g = Matrix3x4::zeros();
    g.column_mut(0).copy_from(&(-v));
    g.fixed_view_mut::<3, 3>(0, 1)
        .copy_from(&(Matrix3::identity() * w - crate::lie::hat(&v)));
    g
}

pub fn grad_lie_nll(pred: &PredictionVector, target: &PoseTarget) -> Result<(f64, LossGradient)> {
    let (unit, norm) = unit_direction(pred.quaternion_raw())?;
    let factor = CholeskyFactor::from_raw(&pred.cov_raw())?;
    let rotation = crate::lie::quat_to_rotmat(&quat_normalize(pred.quaternion_raw())?);
    let mean = Pose::new(rotation, pred.translation());

    let xi = se3_log(&mean.inverse().compose(&target.pose));
    if !xi.is_finite() {
        return Err(Error::NonFiniteResidual);
    }
    let v = xi.to_vector();
    let l = factor.matrix();
    let w = l.tr_mul(&v);
    let log_det = factor.log_det_sigma()?;
    let value = 0.5 * w.norm_squared() + 0.5 * log_det + log_normalizer();
    if !value.is_finite() {
        return Err(Error::NonFiniteResidual);
    }

    let mut grad = LossGradient::zero();

    // Covariance block: d/dL_ij (1/2 |L^T v|^2) = v_i w_j, and
    // d/d(diag_raw_i) also picks up -1 from the log-determinant.
    for i in 0..DIM {
        grad.d_pred[COV_DIAGONAL.start + i] = v[i] * w[i] * l[(i, i)] - 1.0;
    }
    for (k, &(i, j)) in OFFDIAG_POSITIONS.iter().enumerate() {
        grad.d_pred[COV_DIAGONAL.end + k] = v[i] * w[j];
    }

    // Right-perturbing the mean, mu exp(e), moves the residual by
    // -J_l^-1(xi) e. Translation maps to e_rho = R^T dt, the quaternion to
    // e_phi = 2/|q| G(q) dq.
    let d_xi: Vector6<f64> = l * w;
    let d_eps = -(se3_left_jacobian_inverse(&xi).transpose() * d_xi);
    let d_rho = Vector3::new(d_eps[0], d_eps[1], d_eps[2]);
    let d_phi = Vector3::new(d_eps[3], d_eps[4], d_eps[5]);
    let d_t = rotation.matrix() * d_rho;
    grad.d_pred[TRANSLATION].copy_from_slice(d_t.as_slice());
    let d_q = body_rate_jacobian(&unit).transpose() * d_phi * (2.0 / norm);
    grad.d_pred[QUATERNION].copy_from_slice(d_q.as_slice());
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{se3_exp, so3_exp, Twist};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn perfect(pose: &Pose, cov: &RawCovParams) -> PredictionVector {
        PredictionVector::from_parts(pose.translation, pose.rotation.to_quaternion().coords(), cov)
    }

    fn some_pose() -> Pose {
        se3_exp(&Twist::new(Vector3::new(0.3, -1.0, 2.0), Vector3::new(0.4, -0.2, 0.9)))
    }

    #[test]
    fn loss_ids_round_trip() {
        for id in LossId::ALL {
            assert_eq!(id.as_str().parse::<LossId>().unwrap(), id);
        }
        assert!("bogus".parse::<LossId>().is_err());
    }

    #[test]
    fn posenet_examples() {
        let pose = some_pose();
        let target = PoseTarget::new(pose);
        let pred = perfect(&pose, &RawCovParams::zeros());
        assert!(loss_posenet_l2(&pred, &target, 500.0).unwrap() < 1e-24);

        let mut off = pred;
        off.0[0] += 1.0;
        assert_relative_eq!(loss_posenet_l2(&off, &target, 1.0).unwrap(), 1.0, epsilon = 1e-12);

        let id_target = PoseTarget::new(Pose::identity());
        let rz = PredictionVector::from_parts(Vector3::zeros(), [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2], &RawCovParams::zeros());
        assert_relative_eq!(
            loss_posenet_l2(&rz, &id_target, 500.0).unwrap(),
            500.0 * (2.0 - 2f64.sqrt()),
            epsilon = 1e-10
        );
        assert_relative_eq!(500.0 * (2.0 - 2f64.sqrt()), 292.893218813, epsilon = 1e-8);
        assert!(loss_posenet_l2(&rz, &id_target, 0.0).is_err());
    }

    #[test]
    fn homoscedastic_examples() {
        let pose = some_pose();
        let target = PoseTarget::new(pose);
        let pred = perfect(&pose, &RawCovParams::zeros());
        let p3 = HomoscedasticParams::new(-3.0, -3.0);
        assert_relative_eq!(loss_homoscedastic_l2(&pred, &target, &p3).unwrap(), -6.0, epsilon = 1e-12);
        let p0 = HomoscedasticParams::new(0.0, 0.0);
        assert!(loss_homoscedastic_l2(&pred, &target, &p0).unwrap().abs() < 1e-12);
        let mut off = pred;
        off.0[0] += 1.0;
        let expected = 3f64.exp() - 6.0;
        assert_relative_eq!(expected, 14.0855369, epsilon = 1e-6);
        assert_relative_eq!(loss_homoscedastic_l2(&off, &target, &p3).unwrap(), expected, epsilon = 1e-10);

        let (_, g) = grad_homoscedastic_l2(&pred, &target, &p0).unwrap();
        assert_relative_eq!(g.d_sx, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn logq_examples() {
        let pose = some_pose();
        let target = PoseTarget::new(pose);
        let pred = perfect(&pose, &RawCovParams::zeros());
        let p3 = HomoscedasticParams::new(-3.0, -3.0);
        assert_relative_eq!(loss_logq_l1(&pred, &target, &p3).unwrap(), -6.0, epsilon = 1e-12);

        let p0 = HomoscedasticParams::new(0.0, 0.0);
        let mut off = pred;
        off.0[0] += 1.0;
        off.0[1] -= 2.0;
        assert_relative_eq!(loss_logq_l1(&off, &target, &p0).unwrap(), 3.0, epsilon = 1e-12);

        let id_target = PoseTarget::new(Pose::identity());
        let rz = PredictionVector::from_parts(Vector3::zeros(), [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2], &RawCovParams::zeros());
        assert_relative_eq!(loss_logq_l1(&rz, &id_target, &p0).unwrap(), FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn lie_nll_examples() {
        let ln2pi3 = 3.0 * (2.0 * PI).ln();
        let pose = some_pose();
        let target = PoseTarget::new(pose);
        let pred = perfect(&pose, &RawCovParams::zeros());
        assert_relative_eq!(loss_lie_nll(&pred, &target).unwrap(), ln2pi3, epsilon = 1e-12);
        let tight = perfect(&pose, &RawCovParams::isotropic(1.5));
        assert_relative_eq!(loss_lie_nll(&tight, &target).unwrap(), ln2pi3 - 9.0, epsilon = 1e-12);

        let id_target = PoseTarget::new(Pose::identity());
        let shifted = PredictionVector::from_parts(Vector3::new(1.0, 0.0, 0.0), [1.0, 0.0, 0.0, 0.0], &RawCovParams::zeros());
        assert_relative_eq!(loss_lie_nll(&shifted, &id_target).unwrap(), 0.5 + ln2pi3, epsilon = 1e-12);

        let (_, g) = grad_lie_nll(&pred, &target).unwrap();
        for k in TRANSLATION {
            assert!(g.d_pred[k].abs() < 1e-12);
        }
    }

    #[test]
    fn forward_and_gradient_values_agree() {
        let target = PoseTarget::new(some_pose());
        let mut pred = perfect(&se3_exp(&Twist::new(Vector3::new(0.1, 0.2, -0.3), Vector3::new(-0.5, 0.7, 0.1))), &RawCovParams::zeros());
        for (k, v) in pred.0[COVARIANCE].iter_mut().enumerate() {
            *v = 0.05 * (k as f64) - 0.4;
        }
        let params = LossParams {
            beta: 3.0,
            homo: HomoscedasticParams::new(0.3, -0.7),
        };
        for id in LossId::ALL {
            let a = loss(id, &pred, &target, &params).unwrap();
            let (b, g) = loss_and_grad(id, &pred, &target, &params).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
            assert!(g.is_finite());
            if !id.is_homoscedastic() {
                assert_eq!((g.d_sx, g.d_sq), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn sign_flip_invariance() {
        let target = PoseTarget::new(some_pose());
        let mut pred = perfect(&Pose::new(so3_exp(&Vector3::new(0.0, FRAC_PI_2, 0.4)), Vector3::new(1.0, 1.0, 1.0)), &RawCovParams::isotropic(0.2));
        let params = LossParams::default();
        let before: Vec<f64> = LossId::ALL.iter().map(|&id| loss(id, &pred, &target, &params).unwrap()).collect();
        for k in QUATERNION {
            pred.0[k] = -pred.0[k];
        }
        for (id, b) in LossId::ALL.iter().zip(before) {
            let a = loss(*id, &pred, &target, &params).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{id}");
        }
    }

    #[test]
    fn zero_quaternion_is_rejected() {
        let target = PoseTarget::new(Pose::identity());
        let pred = PredictionVector([0.0; PRED_DIM]);
        for id in LossId::ALL {
            assert!(matches!(
                loss(id, &pred, &target, &LossParams::default()),
                Err(Error::ZeroNormQuaternion(_))
            ));
        }
    }
}
