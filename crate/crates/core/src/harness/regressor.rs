//! One-hidden-layer tanh regressor producing a [`PredictionVector`].
//!
//! All parameters live in one flat buffer so the optimizer and the gradient
//! accumulators share a layout:
//! `[W1 (hidden x d, column-major) | b1 | W2 (28 x hidden, column-major) | b2]`.

use nalgebra::{DMatrixView, DMatrixViewMut, DVector, DVectorView};
use rand::Rng;

use crate::error::{Error, Result};
use crate::losses::{PredictionVector, COV_DIAGONAL, PRED_DIM, QUATERNION};

/// Initial bias of the six log-diagonal covariance outputs: marginal
/// variances start at `exp(-2 * 1.5) = exp(-3)`.
pub const INITIAL_LOG_DIAGONAL: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorParams {
    feature_dim: usize,
    hidden: usize,
    data: Vec<f64>,
}

impl RegressorParams {
    pub fn zeros(feature_dim: usize, hidden: usize) -> Self {
        let n = hidden * feature_dim + hidden + PRED_DIM * hidden + PRED_DIM;
        Self {
            feature_dim,
            hidden,
            data: vec![0.0; n],
        }
    }

    /// Uniform `+-1/sqrt(fan_in)` weights and biases, then the quaternion
    /// bias is set to the identity and the log-diagonal biases to
    /// [`INITIAL_LOG_DIAGONAL`].
    pub fn init<R: Rng + ?Sized>(feature_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(feature_dim, hidden);
        let (a1, a2) = (1.0 / (feature_dim as f64).sqrt(), 1.0 / (hidden as f64).sqrt());
        let split = hidden * feature_dim + hidden;
        for v in &mut p.data[..split] {
            *v = rng.random_range(-a1..a1);
        }
        for v in &mut p.data[split..] {
            *v = rng.random_range(-a2..a2);
        }
        let b2 = p.b2_offset();
        p.data[b2 + QUATERNION.start..b2 + QUATERNION.end].copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
        for k in COV_DIAGONAL {
            p.data[b2 + k] = INITIAL_LOG_DIAGONAL;
        }
        p
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn b1_offset(&self) -> usize {
        self.hidden * self.feature_dim
    }

    fn w2_offset(&self) -> usize {
        self.b1_offset() + self.hidden
    }

    fn b2_offset(&self) -> usize {
        self.w2_offset() + PRED_DIM * self.hidden
    }

    pub fn w1(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data[..self.b1_offset()], self.hidden, self.feature_dim)
    }

    pub fn b1(&self) -> DVectorView<'_, f64> {
        DVectorView::from_slice(&self.data[self.b1_offset()..self.w2_offset()], self.hidden)
    }

    pub fn w2(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data[self.w2_offset()..self.b2_offset()], PRED_DIM, self.hidden)
    }

    pub fn b2(&self) -> DVectorView<'_, f64> {
        DVectorView::from_slice(&self.data[self.b2_offset()..], PRED_DIM)
    }

    pub fn b2_mut(&mut self) -> &mut [f64] {
        let o = self.b2_offset();
        &mut self.data[o..]
    }

    fn check_input(&self, feature: &[f64]) -> Result<()> {
        if feature.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: feature.len(),
            });
        }
        Ok(())
    }

    fn hidden_activations(&self, feature: &[f64]) -> DVector<f64> {
        let x = DVectorView::from_slice(feature, self.feature_dim);
        (self.w1() * x + self.b1()).map(f64::tanh)
    }

    pub fn forward(&self, feature: &[f64]) -> Result<PredictionVector> {
        self.check_input(feature)?;
        let h = self.hidden_activations(feature);
        let y = self.w2() * h + self.b2();
        PredictionVector::from_slice(y.as_slice())
    }

    /// Forward pass that also returns the hidden activations for
    /// [`Self::accumulate_backward`].
    pub fn forward_cached(&self, feature: &[f64]) -> Result<(PredictionVector, DVector<f64>)> {
        self.check_input(feature)?;
        let h = self.hidden_activations(feature);
        let y = self.w2() * &h + self.b2();
        Ok((PredictionVector::from_slice(y.as_slice())?, h))
    }

    /// Adds `upstream^T d(forward)/d(params)` into `grads`.
    pub fn accumulate_backward(
        &self,
        feature: &[f64],
        hidden: &DVector<f64>,
        upstream: &[f64; PRED_DIM],
        grads: &mut RegressorParams,
    ) -> Result<()> {
        self.check_input(feature)?;
        if grads.feature_dim != self.feature_dim || grads.hidden != self.hidden {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: grads.len(),
            });
        }
        let dy = DVectorView::from_slice(upstream, PRED_DIM);
        let x = DVectorView::from_slice(feature, self.feature_dim);
        let dh = self.w2().tr_mul(&dy);
        let dz = dh.zip_map(hidden, |g, h| g * (1.0 - h * h));

        let (b1o, w2o, b2o) = (self.b1_offset(), self.w2_offset(), self.b2_offset());
        let (w1g, rest) = grads.data.split_at_mut(b1o);
        let (b1g, rest) = rest.split_at_mut(w2o - b1o);
        let (w2g, b2g) = rest.split_at_mut(b2o - w2o);

        let mut w1g = DMatrixViewMut::from_slice(w1g, self.hidden, self.feature_dim);
        w1g.ger(1.0, &dz, &x, 1.0);
        for (g, d) in b1g.iter_mut().zip(dz.iter()) {
            *g += d;
        }
        let mut w2g = DMatrixViewMut::from_slice(w2g, PRED_DIM, self.hidden);
        w2g.ger(1.0, &dy, hidden, 1.0);
        for (g, d) in b2g.iter_mut().zip(upstream) {
            *g += d;
        }
        Ok(())
    }

    /// Gradient of `upstream . forward(feature)` with respect to every
    /// parameter.
    pub fn backward(&self, feature: &[f64], upstream: &[f64; PRED_DIM]) -> Result<RegressorParams> {
        self.check_input(feature)?;
        let h = self.hidden_activations(feature);
        let mut grads = Self::zeros(self.feature_dim, self.hidden);
        self.accumulate_backward(feature, &h, upstream, &mut grads)?;
        Ok(grads)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
