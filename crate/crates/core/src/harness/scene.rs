use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{so3_log, Pose, RotationMatrix};
use crate::rng::{standard_normal, stream, uniform_rotation, Stream};

/// Half-width of the translation cube, in meters.
pub const TRANSLATION_RANGE: f64 = 2.0;

/// Standard deviation of the embedding preactivations per unit input
/// standard deviation. Small enough that `tanh` stays close to linear.
pub const EMBEDDING_SCALE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub scene_name: String,
    pub n_train: usize,
    pub n_test: usize,
    pub feature_dim: usize,
    pub symmetry_fraction: f64,
    pub feature_noise_sigma: f64,
    pub seed: u64,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("scene '{}': {msg}", self.scene_name)));
        if self.scene_name.is_empty() {
            return Err(Error::InvalidConfig("scene_name must not be empty".into()));
        }
        if self.n_train == 0 || self.n_test == 0 || self.feature_dim == 0 {
            return bad("n_train, n_test and feature_dim must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.symmetry_fraction) {
            return bad(format!("symmetry_fraction {} outside [0, 1]", self.symmetry_fraction));
        }
        if !(self.feature_noise_sigma >= 0.0 && self.feature_noise_sigma.is_finite()) {
            return bad(format!("feature_noise_sigma {} must be >= 0", self.feature_noise_sigma));
        }
        Ok(())
    }
}

/// Rows of features with their target poses.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    /// `n x feature_dim`.
    pub features: DMatrix<f64>,
    pub targets: Vec<Pose>,
    pub is_symmetric: Vec<bool>,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn feature(&self, row: usize) -> Vec<f64> {
        self.features.row(row).iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneData {
    pub name: String,
    pub train: SyntheticDataset,
    pub test: SyntheticDataset,
}

fn half_turn_z() -> RotationMatrix {
    RotationMatrix::from_matrix_unchecked(Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0)))
}

/// Representative of `{R, R Rz(pi)}` with the smaller rotation angle.
pub fn canonicalize_yaw_flip(r: &RotationMatrix) -> RotationMatrix {
    let q = r.to_quaternion();
    // R Rz(pi) has real part -z, so compare |w| with |z|.
    if q.w().abs() >= q.coords()[3].abs() {
        *r
    } else {
        *r * half_turn_z()
    }
}

struct Embedding {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
}

impl Embedding {
    fn new<R: Rng>(rng: &mut R, feature_dim: usize) -> Self {
        let scale = EMBEDDING_SCALE / 6f64.sqrt();
        let weights = DMatrix::from_fn(feature_dim, 6, |_, _| standard_normal(rng) * scale);
        let bias = DVector::from_fn(feature_dim, |_, _| rng.random_range(-0.5..0.5));
        Self { weights, bias }
    }

    fn embed(&self, pose: &Pose) -> DVector<f64> {
        let phi = so3_log(&pose.rotation);
        let t = pose.translation;
        let input = Vector6::new(t.x, t.y, t.z, phi.x, phi.y, phi.z);
        (&self.weights * input + &self.bias).map(f64::tanh)
    }
}

fn draw_rows<R: Rng>(rng: &mut R, embedding: &Embedding, n: usize, cfg: &SceneConfig) -> SyntheticDataset {
    let mut features = DMatrix::zeros(n, cfg.feature_dim);
    let mut targets = Vec::with_capacity(n);
    let mut is_symmetric = Vec::with_capacity(n);
    for row in 0..n {
        let t = Vector3::from_fn(|_, _| rng.random_range(-TRANSLATION_RANGE..TRANSLATION_RANGE));
        let rotation = uniform_rotation(rng);
        let symmetric = rng.random_bool(cfg.symmetry_fraction);
        let flip = rng.random_bool(0.5);

        let (seen, target) = if symmetric {
            let canon = canonicalize_yaw_flip(&rotation);
            let target = if flip { canon * half_turn_z() } else { canon };
            (canon, target)
        } else {
            (rotation, rotation)
        };
        let mut f = embedding.embed(&Pose::new(seen, t));
        for v in f.iter_mut() {
            *v += cfg.feature_noise_sigma * standard_normal(rng);
        }
        features.row_mut(row).copy_from(&f.transpose());
        targets.push(Pose::new(target, t));
        is_symmetric.push(symmetric);
    }
    SyntheticDataset {
        features,
        targets,
        is_symmetric,
    }
}

/// Deterministic in `cfg.seed`: the embedding is drawn first, then the
/// training rows, then the test rows.
pub fn generate_scene(cfg: &SceneConfig) -> Result<SceneData> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, Stream::Scene);
    let embedding = Embedding::new(&mut rng, cfg.feature_dim);
    let train = draw_rows(&mut rng, &embedding, cfg.n_train, cfg);
    let test = draw_rows(&mut rng, &embedding, cfg.n_test, cfg);
    Ok(SceneData {
        name: cfg.scene_name.clone(),
        train,
        test,
    })
}
