//! Heteroscedastic pose-regression losses on SE(3).
//!
//! The central piece is the negative log-likelihood of a concentrated
//! Gaussian on SE(3) whose information matrix is predicted per example via a
//! 21-parameter Cholesky factor ([`losses::loss_lie_nll`]). Three baseline
//! losses share the same 28-dimensional prediction layout. A small synthetic
//! harness ([`harness`]) trains a feed-forward regressor with each loss so
//! they can be compared without images.
//!
//! Conventions: quaternions are `(w, x, y, z)`; twists are `(rho, phi)`
//! with translation first; `Sigma^-1 = L L^T` with `L` upper triangular.

pub mod checks;
pub mod error;
pub mod gaussian;
pub mod gradcheck;
pub mod harness;
pub mod lie;
pub mod losses;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};
pub use gaussian::{CholeskyFactor, ConcentratedGaussian, RawCovParams};
pub use lie::{Pose, RotationMatrix, Twist, UnitQuaternion};
pub use losses::{HomoscedasticParams, LossGradient, LossId, LossParams, PoseTarget, PredictionVector};
pub use metrics::{MetricsReport, PoseError, SceneReport};
