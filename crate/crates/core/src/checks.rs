//! Seeded verification suites with pinned tolerances.
//!
//! Each suite returns a [`CheckReport`] listing the largest observed error
//! of every item next to its tolerance. The CLI and the acceptance tests run
//! the same code.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix6, Vector3, Vector6};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{CholeskyFactor, ConcentratedGaussian, RawCovParams, N_OFFDIAG};
use crate::gradcheck::check_gradient;
use crate::lie::{quat_log, quat_normalize, se3_exp, se3_left_jacobian, se3_log, so3_exp, Pose, Twist};
use crate::losses::{loss_and_grad, HomoscedasticParams, LossId, LossParams, PoseTarget, PredictionVector};
use crate::rng::{standard_normal, stream, uniform_rotation, Stream};

pub const ROUNDTRIP_CASES: usize = 10_000;
pub const ROUNDTRIP_MAX_PHI: f64 = 2.0;
pub const ROUNDTRIP_MAX_RHO: f64 = 10.0;
pub const ROUNDTRIP_TOL: f64 = 1e-9;

pub const GRAD_CASES: usize = 200;
pub const GRAD_STEP: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;

pub const SAMPLE_COUNT: usize = 100_000;
pub const SAMPLE_COV_TOL: f64 = 0.05;
pub const SAMPLE_DENSITY_CASES: usize = 1_000;
pub const SAMPLE_DENSITY_TOL: f64 = 1e-12;
pub const SAMPLE_ENTROPY_TOL: f64 = 0.01;
/// Allowed sample-mean deviation in standard errors.
pub const SAMPLE_MEAN_SIGMAS: f64 = 4.0;

pub const DENSITY_SCALE: f64 = 10.0;
/// Grid points per axis, spaced one standard deviation apart.
pub const DENSITY_POINTS: usize = 11;
pub const DENSITY_TOL: f64 = 0.02;

const SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Roundtrip,
    Grad,
    Sample,
    Density,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Roundtrip, Suite::Grad, Suite::Sample, Suite::Density];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Roundtrip => "roundtrip",
            Suite::Grad => "grad",
            Suite::Sample => "sample",
            Suite::Density => "density",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub label: String,
    pub observed: f64,
    pub tolerance: f64,
}

impl CheckItem {
    fn new(label: impl Into<String>, observed: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            observed,
            tolerance,
        }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.observed <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub suite: Suite,
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(CheckItem::passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            let status = if item.passed() { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "{status} {}/{}: observed {:.3e} (tolerance {:.1e})",
                self.suite, item.label, item.observed, item.tolerance
            )?;
        }
        Ok(())
    }
}

pub fn run(suite: Suite) -> Result<CheckReport> {
    let items = match suite {
        Suite::Roundtrip => roundtrip()?,
        Suite::Grad => grad()?,
        Suite::Sample => sample()?,
        Suite::Density => density()?,
    };
    Ok(CheckReport { suite, items })
}

fn unit_vector<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| standard_normal(rng));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Norm in `[0, max]`; one case in ten is tiny to reach the series branches.
fn radius<R: Rng>(rng: &mut R, max: f64) -> f64 {
    if rng.random_bool(0.1) {
        10f64.powf(rng.random_range(-9.0..-2.0))
    } else {
        rng.random_range(0.0..=max)
    }
}

fn random_pose<R: Rng>(rng: &mut R) -> Pose {
    let t = Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0));
    Pose::new(uniform_rotation(rng), t)
}

fn roundtrip() -> Result<Vec<CheckItem>> {
    let mut rng = stream(SEED, Stream::Check);
    let mut worst = 0.0f64;
    for _ in 0..ROUNDTRIP_CASES {
        let rho = unit_vector(&mut rng) * radius(&mut rng, ROUNDTRIP_MAX_RHO);
        let phi = unit_vector(&mut rng) * radius(&mut rng, ROUNDTRIP_MAX_PHI);
        let xi = Twist::new(rho, phi);
        let back = se3_log(&se3_exp(&xi));
        worst = worst.max((back.to_vector() - xi.to_vector()).amax());
    }
    Ok(vec![CheckItem::new("max |log(exp(xi)) - xi|", worst, ROUNDTRIP_TOL)])
}

fn random_raw_cov<R: Rng>(rng: &mut R) -> RawCovParams {
    let mut raw = RawCovParams::zeros();
    for d in &mut raw.diag {
        *d = rng.random_range(-1.0..1.0);
    }
    for o in &mut raw.offdiag {
        *o = 0.3 * standard_normal(rng);
    }
    raw
}

/// A prediction near `target` away from the non-smooth points of every
/// loss: the rotation residual stays below 1 rad, `|q_raw|` is in
/// `[0.5, 2]`, both quaternions keep `|w| >= 0.05`, and every L1 argument is
/// at least `1e-3` from zero.
fn gradient_case<R: Rng>(rng: &mut R) -> (PredictionVector, PoseTarget, LossParams) {
    loop {
        let target = random_pose(rng);
        let t = target.translation + Vector3::from_fn(|_, _| 0.5 * standard_normal(rng));
        let offset = so3_exp(&(unit_vector(rng) * rng.random_range(0.0..1.0)));
        let q = (target.rotation * offset).to_quaternion();
        let scale = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
        let q_raw = q.coords().map(|c| c * scale);
        let pred = PredictionVector::from_parts(t, q_raw, &random_raw_cov(rng));
        let target = PoseTarget::new(target);

        let q_unit = quat_normalize(q_raw).expect("norm >= 0.5");
        let dt = target.pose.translation - t;
        let dlog = quat_log(target.quaternion()) - quat_log(&q_unit);
        let far_from_kinks = dt.iter().chain(dlog.iter()).all(|c| c.abs() >= 1e-3);
        let far_from_equator = q_unit.w().abs() >= 0.05 && target.quaternion().w().abs() >= 0.05;
        if far_from_kinks && far_from_equator {
            let params = LossParams {
                beta: rng.random_range(1.0..1000.0),
                homo: HomoscedasticParams::new(rng.random_range(-3.0..1.0), rng.random_range(-3.0..1.0)),
            };
            return (pred, target, params);
        }
    }
}

fn grad() -> Result<Vec<CheckItem>> {
    let mut items = Vec::with_capacity(LossId::ALL.len());
    for id in LossId::ALL {
        let mut rng = stream(SEED + 100, Stream::Check);
        let mut worst = 0.0f64;
        for _ in 0..GRAD_CASES {
            let (pred, target, params) = gradient_case(&mut rng);
            let (_, g) = loss_and_grad(id, &pred, &target, &params)?;
            let err = check_gradient(id, &pred, &target, &params, &g, GRAD_STEP)?;
            worst = if err.is_nan() { f64::NAN } else { worst.max(err) };
        }
        items.push(CheckItem::new(format!("{id} max relative error"), worst, GRAD_TOL));
    }
    Ok(items)
}

/// Fixed, correlated factor with rotational standard deviations of a few
/// tenths of a radian.
fn sample_factor() -> Result<CholeskyFactor> {
    let mut raw = RawCovParams {
        diag: [0.4, 0.1, 0.7, 1.6, 1.3, 1.9],
        offdiag: [0.0; N_OFFDIAG],
    };
    for (k, o) in raw.offdiag.iter_mut().enumerate() {
        *o = 0.25 * ((k as f64 * 1.7).sin());
    }
    CholeskyFactor::from_raw(&raw)
}

fn sample() -> Result<Vec<CheckItem>> {
    let mut rng = stream(SEED + 200, Stream::Check);
    let mean = random_pose(&mut rng);
    let dist = ConcentratedGaussian::new(mean, sample_factor()?);
    let sigma = dist.factor.covariance()?;

    let mut sum = Vector6::zeros();
    let mut outer = Matrix6::zeros();
    let mut neg_log_density = 0.0;
    for _ in 0..SAMPLE_COUNT {
        let x = dist.sample(&mut rng)?;
        let r = dist.residual(&x).to_vector();
        sum += r;
        outer += r * r.transpose();
        neg_log_density -= dist.log_density(&x)?;
    }
    let n = SAMPLE_COUNT as f64;
    let emp_mean = sum / n;
    let emp_cov = (outer - emp_mean * emp_mean.transpose() * n) / (n - 1.0);
    let cov_err = (emp_cov - sigma).norm() / sigma.norm();

    let mean_dev = (0..6)
        .map(|k| emp_mean[k].abs() / (sigma[(k, k)] / n).sqrt())
        .fold(0.0, f64::max);

    let entropy = dist.entropy()?;
    let entropy_err = ((neg_log_density / n) - entropy).abs() / entropy.abs();

    let mut density_err = 0.0f64;
    for _ in 0..SAMPLE_DENSITY_CASES {
        let d = ConcentratedGaussian::new(random_pose(&mut rng), CholeskyFactor::from_raw(&random_raw_cov(&mut rng))?);
        let x = random_pose(&mut rng);
        density_err = density_err.max((d.nll(&x)? + d.log_density(&x)?).abs());
    }

    Ok(vec![
        CheckItem::new("relative Frobenius error of sample covariance", cov_err, SAMPLE_COV_TOL),
        CheckItem::new("max |sample mean| in standard errors", mean_dev, SAMPLE_MEAN_SIGMAS),
        CheckItem::new("relative error of mean -log density vs entropy", entropy_err, SAMPLE_ENTROPY_TOL),
        CheckItem::new("max |nll + log_density|", density_err, SAMPLE_DENSITY_TOL),
    ])
}

/// Riemann sum of the density over a grid in exponential coordinates around
/// the mean. The Haar measure in these coordinates is `|det J_l(xi)| dxi`.
fn density() -> Result<Vec<CheckItem>> {
    let factor = CholeskyFactor::from_upper(&(Matrix6::identity() * DENSITY_SCALE))?;
    let dist = ConcentratedGaussian::new(Pose::identity(), factor);
    let h = 1.0 / DENSITY_SCALE;
    let half = (DENSITY_POINTS / 2) as f64;
    let axis: Vec<f64> = (0..DENSITY_POINTS).map(|i| (i as f64 - half) * h).collect();
    let cell = h.powi(6);

    let mut total = 0.0;
    let mut idx = [0usize; 6];
    loop {
        let xi = Twist::from_vector(&Vector6::from_fn(|k, _| axis[idx[k]]));
        let haar = se3_left_jacobian(&xi).determinant().abs();
        total += dist.log_density(&se3_exp(&xi))?.exp() * haar * cell;

        let mut k = 0;
        while k < 6 {
            idx[k] += 1;
            if idx[k] < DENSITY_POINTS {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == 6 {
            break;
        }
    }
    Ok(vec![CheckItem::new("|integral of density - 1|", (total - 1.0).abs(), DENSITY_TOL)])
}
