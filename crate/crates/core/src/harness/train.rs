use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::regressor::RegressorParams;
use super::scene::{SceneData, SyntheticDataset};
use crate::error::{Error, Result};
use crate::gaussian::CholeskyFactor;
use crate::losses::{loss_and_grad, HomoscedasticParams, LossId, LossParams, PoseTarget};
use crate::metrics::{aggregate, pose_error, MetricsReport, PoseError, SceneReport};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss_id: LossId,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Initial `s_x` and `s_q` for the homoscedastic losses.
    pub s_init: f64,
    pub seed: u64,
    pub hidden: usize,
    /// Rotation weight of `posenet_l2`.
    pub posenet_beta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss_id: LossId::LieNll,
            epochs: 10,
            batch_size: 64,
            learning_rate: 1e-4,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            s_init: -3.0,
            seed: 0,
            hidden: 64,
            posenet_beta: 500.0,
        }
    }
}

impl TrainConfig {
    /// Fields whose defaults are not taken from the published setup.
    pub const UNPUBLISHED_DEFAULTS: [&'static str; 3] = ["batch_size", "hidden", "posenet_beta"];

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return bad("batch_size and hidden must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be >= 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be > 0");
        }
        if !self.s_init.is_finite() {
            return bad("s_init must be finite");
        }
        if !(self.posenet_beta > 0.0 && self.posenet_beta.is_finite()) {
            return bad("posenet_beta must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub report: MetricsReport,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: RegressorParams,
    pub homoscedastic: HomoscedasticParams,
    pub epochs: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn last(&self) -> &EpochRecord {
        self.epochs.last().expect("at least one epoch")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub errors: Vec<PoseError>,
    /// Rows whose predicted quaternion could not be normalized.
    pub skipped: usize,
}

/// Per-row pose error of the predicted mean against the target.
pub fn evaluate(params: &RegressorParams, dataset: &SyntheticDataset) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let mut errors = Vec::with_capacity(dataset.len());
    let mut skipped = 0;
    for (row, target) in dataset.targets.iter().enumerate() {
        let pred = params.forward(&dataset.feature(row))?;
        match pred.mean_pose() {
            Ok(mean) => errors.push(pose_error(&mean, target)),
            Err(Error::ZeroNormQuaternion(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(Evaluation { errors, skipped })
}

/// Mean of the three rotational marginal variances of the predicted
/// covariance.
pub fn rotation_variance(params: &RegressorParams, feature: &[f64]) -> Result<f64> {
    let pred = params.forward(feature)?;
    let sigma = CholeskyFactor::from_raw(&pred.cov_raw())?.covariance()?;
    Ok((sigma[(3, 3)] + sigma[(4, 4)] + sigma[(5, 5)]) / 3.0)
}

struct Trainer<'a> {
    cfg: &'a TrainConfig,
    params: RegressorParams,
    grads: RegressorParams,
    adam: AdamState,
    homo: HomoscedasticParams,
    homo_adam: AdamState,
    step: u64,
}

impl Trainer<'_> {
    fn loss_params(&self) -> LossParams {
        LossParams {
            beta: self.cfg.posenet_beta,
            homo: self.homo,
        }
    }

    /// One optimizer step on `rows`; returns the summed loss.
    fn batch(&mut self, data: &SyntheticDataset, targets: &[PoseTarget], rows: &[usize]) -> Result<f64> {
        self.grads.as_mut_slice().fill(0.0);
        let loss_params = self.loss_params();
        let mut homo_grad = [0.0; 2];
        let mut total = 0.0;
        for &row in rows {
            let feature = data.feature(row);
            let (pred, hidden) = self.params.forward_cached(&feature)?;
            let (value, g) = loss_and_grad(self.cfg.loss_id, &pred, &targets[row], &loss_params)?;
            total += value;
            self.params
                .accumulate_backward(&feature, &hidden, &g.d_pred, &mut self.grads)?;
            homo_grad[0] += g.d_sx;
            homo_grad[1] += g.d_sq;
        }
        let scale = 1.0 / rows.len() as f64;
        for g in self.grads.as_mut_slice() {
            *g *= scale;
        }
        self.step += 1;
        adam_step(&mut self.adam, self.params.as_mut_slice(), self.grads.as_slice(), self.cfg, self.step, true);
        if self.cfg.loss_id.is_homoscedastic() {
            let mut s = [self.homo.s_x, self.homo.s_q];
            let g = [homo_grad[0] * scale, homo_grad[1] * scale];
            // Loss-side scalars are not weight-decayed.
            adam_step(&mut self.homo_adam, &mut s, &g, self.cfg, self.step, false);
            self.homo = HomoscedasticParams::new(s[0], s[1]);
        }
        Ok(total)
    }
}

/// Mini-batch Adam over shuffled epochs, evaluating median errors on the
/// test split after every epoch. Deterministic in `cfg.seed`.
pub fn train(scene: &SceneData, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_observed(scene, cfg, |_| Ok(()))
}

/// [`train`], calling `on_epoch` with every record as soon as it exists.
/// Records seen before an error are not lost.
pub fn train_observed<F>(scene: &SceneData, cfg: &TrainConfig, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(&EpochRecord) -> Result<()>,
{
    cfg.validate()?;
    let data = &scene.train;
    if data.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let feature_dim = data.features.ncols();
    let params = RegressorParams::init(feature_dim, cfg.hidden, &mut stream(cfg.seed, Stream::Init));
    let n_params = params.len();
    let mut trainer = Trainer {
        cfg,
        grads: RegressorParams::zeros(feature_dim, cfg.hidden),
        params,
        adam: AdamState::new(n_params),
        homo: HomoscedasticParams::new(cfg.s_init, cfg.s_init),
        homo_adam: AdamState::new(2),
        step: 0,
    };
    let targets: Vec<PoseTarget> = data.targets.iter().map(|p| PoseTarget::new(*p)).collect();
    let mut shuffle_rng = stream(cfg.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for rows in order.chunks(cfg.batch_size) {
            total += trainer.batch(data, &targets, rows)?;
        }
        let mean_train_loss = total / data.len() as f64;
        if !mean_train_loss.is_finite() || !trainer.params.is_finite() {
            return Err(Error::DivergedTraining { epoch });
        }
        let eval = evaluate(&trainer.params, &scene.test)?;
        let report = aggregate(vec![SceneReport::from_errors(scene.name.clone(), &eval.errors)?])?;
        let record = EpochRecord {
            epoch,
            mean_train_loss,
            report,
            skipped: eval.skipped,
        };
        on_epoch(&record)?;
        epochs.push(record);
    }
    Ok(TrainOutcome {
        params: trainer.params,
        homoscedastic: trainer.homo,
        epochs,
    })
}
