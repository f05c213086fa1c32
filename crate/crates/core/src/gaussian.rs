//! Concentrated Gaussian on SE(3).
//!
//! A sample is `x = mean * exp(delta)` with `delta ~ N(0, Sigma)` in the
//! tangent space at the mean. The information matrix is parametrized by an
//! upper-triangular factor, `Sigma^-1 = L L^T`, so the squared Mahalanobis
//! norm of a residual `v` is `|L^T v|^2` and `log det Sigma = -2 sum ln L_ii`.

use std::f64::consts::PI;

use nalgebra::{Matrix6, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lie::{se3_exp, se3_log, Pose, Twist};

/// Tangent-space dimension of SE(3).
pub const DIM: usize = 6;

/// Number of strictly-upper entries of a 6x6 matrix.
pub const N_OFFDIAG: usize = 15;

/// Number of raw covariance parameters.
pub const N_RAW: usize = DIM + N_OFFDIAG;

/// Diagonal entries below this are treated as singular.
pub const MIN_DIAGONAL: f64 = 1e-150;

/// `(row, col)` of each off-diagonal raw parameter: strict upper triangle,
/// row-major.
pub const OFFDIAG_POSITIONS: [(usize, usize); N_OFFDIAG] = {
    let mut out = [(0, 0); N_OFFDIAG];
    let mut k = 0;
    let mut i = 0;
    while i < DIM {
        let mut j = i + 1;
        while j < DIM {
            out[k] = (i, j);
            k += 1;
            j += 1;
        }
        i += 1;
    }
    out
};

/// `N/2 * ln(2 pi)` for `N = 6`.
pub fn log_normalizer() -> f64 {
    0.5 * DIM as f64 * (2.0 * PI).ln()
}

/// Unconstrained covariance parameters: 6 log-diagonal entries followed by
/// the 15 strict upper entries of `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawCovParams {
    pub diag: [f64; DIM],
    pub offdiag: [f64; N_OFFDIAG],
}

impl RawCovParams {
    pub fn zeros() -> Self {
        Self {
            diag: [0.0; DIM],
            offdiag: [0.0; N_OFFDIAG],
        }
    }

    /// Isotropic information `exp(2 * log_diag) I`.
    pub fn isotropic(log_diag: f64) -> Self {
        Self {
            diag: [log_diag; DIM],
            offdiag: [0.0; N_OFFDIAG],
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != N_RAW {
            return Err(Error::DimensionMismatch {
                expected: N_RAW,
                got: values.len(),
            });
        }
        let mut out = Self::zeros();
        out.diag.copy_from_slice(&values[..DIM]);
        out.offdiag.copy_from_slice(&values[DIM..]);
        Ok(out)
    }

    pub fn to_array(&self) -> [f64; N_RAW] {
        let mut out = [0.0; N_RAW];
        out[..DIM].copy_from_slice(&self.diag);
        out[DIM..].copy_from_slice(&self.offdiag);
        out
    }
}

/// Upper-triangular factor of the information matrix with positive diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeskyFactor(Matrix6<f64>);

impl CholeskyFactor {
    pub fn from_raw(params: &RawCovParams) -> Result<Self> {
        if params.diag.iter().chain(&params.offdiag).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("covariance parameters"));
        }
        let mut l = Matrix6::zeros();
        for (i, &d) in params.diag.iter().enumerate() {
            let v = d.exp();
            if !v.is_finite() {
                return Err(Error::NonFiniteInput("covariance diagonal overflows"));
            }
            l[(i, i)] = v;
        }
        for (&(i, j), &v) in OFFDIAG_POSITIONS.iter().zip(&params.offdiag) {
            l[(i, j)] = v;
        }
        let factor = Self(l);
        factor.check()?;
        Ok(factor)
    }

    /// Uses the upper triangle of `m`; the strict lower part is ignored.
    pub fn from_upper(m: &Matrix6<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("factor"));
        }
        let factor = Self(m.upper_triangle());
        factor.check()?;
        Ok(factor)
    }

    pub fn identity() -> Self {
        Self(Matrix6::identity())
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    fn check(&self) -> Result<()> {
        for i in 0..DIM {
            let v = self.0[(i, i)];
            if !(v >= MIN_DIAGONAL) {
                return Err(Error::SingularFactor { index: i, value: v });
            }
        }
        Ok(())
    }

    /// `Sigma^-1 = L L^T`.
    pub fn information(&self) -> Matrix6<f64> {
        self.0 * self.0.transpose()
    }

    /// `Sigma = L^-T L^-1`.
    pub fn covariance(&self) -> Result<Matrix6<f64>> {
        self.check()?;
        let l_inv = self
            .0
            .solve_upper_triangular(&Matrix6::identity())
            .ok_or(Error::SingularFactor {
                index: 0,
                value: 0.0,
            })?;
        let sigma = l_inv.transpose() * l_inv;
        Ok((sigma + sigma.transpose()) * 0.5)
    }

    /// `ln det Sigma = -2 sum ln L_ii`.
    pub fn log_det_sigma(&self) -> Result<f64> {
        self.check()?;
        Ok(-2.0 * (0..DIM).map(|i| self.0[(i, i)].ln()).sum::<f64>())
    }

    /// `|L^T v|^2 = v^T Sigma^-1 v`.
    pub fn mahalanobis_sq(&self, v: &Vector6<f64>) -> f64 {
        self.0.tr_mul(v).norm_squared()
    }

    /// Maps standard-normal noise `z` to `delta` with `L^T delta = z`, so
    /// `delta ~ N(0, Sigma)`.
    pub fn color_noise(&self, z: &Vector6<f64>) -> Result<Vector6<f64>> {
        self.check()?;
        self.0
            .transpose()
            .solve_lower_triangular(z)
            .ok_or(Error::SingularFactor {
                index: 0,
                value: 0.0,
            })
    }
}

pub fn factor_from_raw(params: &RawCovParams) -> Result<CholeskyFactor> {
    CholeskyFactor::from_raw(params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentratedGaussian {
    pub mean: Pose,
    pub factor: CholeskyFactor,
}

impl ConcentratedGaussian {
    pub fn new(mean: Pose, factor: CholeskyFactor) -> Self {
        Self { mean, factor }
    }

    /// `log(mean^-1 x)`.
    pub fn residual(&self, x: &Pose) -> Twist {
        se3_log(&self.mean.inverse().compose(x))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Pose> {
        let z = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        self.sample_with_noise(&z)
    }

    /// Deterministic part of [`Self::sample`] for a given standard-normal draw.
    pub fn sample_with_noise(&self, z: &Vector6<f64>) -> Result<Pose> {
        let delta = self.factor.color_noise(z)?;
        Ok(self.mean.compose(&se3_exp(&Twist::from_vector(&delta))))
    }

    pub fn log_density(&self, x: &Pose) -> Result<f64> {
        Ok(-self.nll(x)?)
    }

    /// `1/2 |log(mean^-1 x)|^2_Sigma + 1/2 log det Sigma + N ln sqrt(2 pi)`.
    pub fn nll(&self, x: &Pose) -> Result<f64> {
        let log_det = self.factor.log_det_sigma()?;
        let r = self.residual(x);
        if !r.is_finite() {
            return Err(Error::NonFiniteResidual);
        }
        let value = 0.5 * self.factor.mahalanobis_sq(&r.to_vector()) + 0.5 * log_det + log_normalizer();
        if !value.is_finite() {
            return Err(Error::NonFiniteResidual);
        }
        Ok(value)
    }

    /// Differential entropy of the tangent-space Gaussian.
    pub fn entropy(&self) -> Result<f64> {
        Ok(0.5 * self.factor.log_det_sigma()? + log_normalizer() + 0.5 * DIM as f64)
    }
}
