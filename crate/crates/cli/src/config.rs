//! Experiment configuration files.
//!
//! TOML with strict schemas: unknown keys anywhere are errors. A file lists
//! the scenes, optional training defaults under `[train]`, and one
//! `[methods.<name>]` table per method that names a `loss_id` and may
//! override any training field.
//!
//! ```toml
//! output_dir = "runs/example"
//!
//! [train]
//! epochs = 10
//!
//! [methods.lie]
//! loss_id = "lie_nll"
//!
//! [[scenes]]
//! scene_name = "atrium"
//! n_train = 2000
//! n_test = 500
//! feature_dim = 32
//! symmetry_fraction = 0.3
//! feature_noise_sigma = 0.01
//! seed = 100
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use lieposenet::harness::{SceneConfig, TrainConfig};
use lieposenet::LossId;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Optional training fields. Used both for `[train]` defaults and for each
/// method table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub loss_id: Option<LossId>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub adam_eps: Option<f64>,
    pub s_init: Option<f64>,
    pub seed: Option<u64>,
    pub hidden: Option<usize>,
    pub posenet_beta: Option<f64>,
}

impl TrainSettings {
    fn apply(&self, cfg: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(
            loss_id,
            epochs,
            batch_size,
            learning_rate,
            weight_decay,
            beta1,
            beta2,
            adam_eps,
            s_init,
            seed,
            hidden,
            posenet_beta
        );
    }

    fn is_set(&self, field: &str) -> bool {
        match field {
            "batch_size" => self.batch_size.is_some(),
            "hidden" => self.hidden.is_some(),
            "posenet_beta" => self.posenet_beta.is_some(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub train: TrainSettings,
    pub methods: BTreeMap<String, TrainSettings>,
    pub scenes: Vec<SceneConfig>,
}

/// A method's fully resolved training configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedMethod {
    pub name: String,
    pub train: TrainConfig,
    /// Fields left at defaults that do not come from the published setup.
    pub unpublished_defaults: Vec<String>,
}

/// A parsed configuration together with its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub text: String,
    pub config: ExperimentConfig,
    pub methods: Vec<ResolvedMethod>,
}

fn check_name(kind: &str, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_'))
        && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{kind} name '{name}' must be non-empty and use only ASCII letters, digits, '-', '_' or '.'"
        )))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks names and value ranges and merges `[train]` defaults into each
    /// method.
    pub fn resolve(&self) -> Result<Vec<ResolvedMethod>> {
        if self.scenes.is_empty() {
            return Err(CliError::Config("at least one [[scenes]] entry is required".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("at least one [methods.<name>] table is required".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, scene) in self.scenes.iter().enumerate() {
            check_name("scene", &scene.scene_name)?;
            if !seen.insert(scene.scene_name.as_str()) {
                return Err(CliError::Config(format!(
                    "scenes[{i}].scene_name: duplicate scene name '{}'",
                    scene.scene_name
                )));
            }
            scene
                .validate()
                .map_err(|e| CliError::Config(format!("scenes[{i}]: {e}")))?;
        }

        let mut out = Vec::with_capacity(self.methods.len());
        for (name, settings) in &self.methods {
            check_name("method", name)?;
            if settings.loss_id.is_none() && self.train.loss_id.is_none() {
                return Err(CliError::Config(format!("methods.{name}: missing field `loss_id`")));
            }
            let mut train = TrainConfig::default();
            self.train.apply(&mut train);
            settings.apply(&mut train);
            train
                .validate()
                .map_err(|e| CliError::Config(format!("methods.{name}: {e}")))?;
            let unpublished_defaults = TrainConfig::UNPUBLISHED_DEFAULTS
                .iter()
                .filter(|f| !settings.is_set(f) && !self.train.is_set(f))
                .map(|f| f.to_string())
                .collect();
            out.push(ResolvedMethod {
                name: name.clone(),
                train,
                unpublished_defaults,
            });
        }
        Ok(out)
    }
}

impl LoadedConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let methods = config.resolve()?;
        Ok(Self {
            path: path.to_path_buf(),
            text,
            config,
            methods,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
output_dir = "out"

[train]
epochs = 3
learning_rate = 1e-3

[methods.lie]
loss_id = "lie_nll"

[methods.logq]
loss_id = "logq_l1"
epochs = 7
hidden = 16

[[scenes]]
scene_name = "a"
n_train = 10
n_test = 5
feature_dim = 4
symmetry_fraction = 0.0
feature_noise_sigma = 0.0
seed = 1
"#;

    #[test]
    fn defaults_and_overrides_merge() {
        let methods = ExperimentConfig::parse(BASE).unwrap().resolve().unwrap();
        let lie = &methods[0];
        assert_eq!(lie.name, "lie");
        assert_eq!(lie.train.loss_id, LossId::LieNll);
        assert_eq!(lie.train.epochs, 3);
        assert_eq!(lie.train.learning_rate, 1e-3);
        assert_eq!(lie.unpublished_defaults, ["batch_size", "hidden", "posenet_beta"]);
        let logq = &methods[1];
        assert_eq!((logq.train.epochs, logq.train.hidden), (7, 16));
        assert_eq!(logq.unpublished_defaults, ["batch_size", "posenet_beta"]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = BASE.replace("epochs = 7", "epoch = 7");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("epoch"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn invalid_loss_id_names_the_field() {
        let text = BASE.replace("\"logq_l1\"", "\"l3\"");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("loss_id"), "{err}");
    }

    #[test]
    fn duplicate_scene_names_are_rejected() {
        let scene = BASE.split("[[scenes]]").nth(1).unwrap();
        let text = format!("{BASE}\n[[scenes]]{scene}");
        let err = ExperimentConfig::parse(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("duplicate scene name"), "{err}");
    }

    #[test]
    fn missing_loss_id_is_rejected() {
        let text = BASE.replace("loss_id = \"lie_nll\"", "epochs = 2");
        let err = ExperimentConfig::parse(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("methods.lie: missing field `loss_id`"), "{err}");
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let text = BASE.replace("epochs = 3", "epochs = 0");
        let err = ExperimentConfig::parse(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let text = BASE.replace("symmetry_fraction = 0.0", "symmetry_fraction = 2.0");
        assert!(ExperimentConfig::parse(&text).unwrap().resolve().is_err());
        let text = BASE.replace("[methods.lie]", "[methods.\"a/b\"]");
        assert!(ExperimentConfig::parse(&text).unwrap().resolve().is_err());
    }
}
