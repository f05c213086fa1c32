//! Executes every (method, scene) pair of an experiment.
//!
//! Each run streams one CSV row per epoch to `<run_id>.csv` and finishes by
//! writing `<run_id>.json`. Rows already written survive a diverged run.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lieposenet::harness::{generate_scene, train_observed, SceneConfig, SceneData, TrainConfig, TrainOutcome};
use lieposenet::LossId;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{LoadedConfig, ResolvedMethod};
use crate::error::{CliError, Result};

/// One row of a per-epoch CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub run_id: String,
    pub epoch: usize,
    pub loss_id: LossId,
    pub mean_train_loss: f64,
    pub median_rot_deg: f64,
    pub median_trans_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub median_rot_deg: f64,
    pub median_trans_m: f64,
    pub n_samples: usize,
    /// Test rows without a usable predicted quaternion.
    pub skipped: usize,
}

/// Written as `<run_id>.json` after a run completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub method: String,
    pub scene: String,
    /// Position of the scene in the experiment config.
    pub scene_index: usize,
    pub epochs_file: String,
    pub final_metrics: FinalMetrics,
    pub wall_time_s: f64,
    pub train_config: TrainConfig,
    pub scene_config: SceneConfig,
    pub unpublished_defaults: Vec<String>,
    pub config_path: String,
    pub config_text: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every available core.
    pub jobs: Option<usize>,
    /// Replaces the training seed of every method.
    pub seed_override: Option<u64>,
    /// Replaces the configured `output_dir`.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub run_id: String,
    pub method: String,
    pub scene_index: usize,
    pub train: TrainConfig,
    pub unpublished_defaults: Vec<String>,
}

pub fn run_id(method: &str, scene: &str, seed: u64) -> String {
    format!("{method}_{scene}_{seed}")
}

/// The cross product of methods and scenes in config order.
pub fn plan(loaded: &LoadedConfig, seed_override: Option<u64>) -> Result<Vec<RunSpec>> {
    let mut specs = Vec::new();
    for ResolvedMethod {
        name,
        train,
        unpublished_defaults,
    } in &loaded.methods
    {
        let mut train = train.clone();
        if let Some(seed) = seed_override {
            train.seed = seed;
        }
        for (scene_index, scene) in loaded.config.scenes.iter().enumerate() {
            specs.push(RunSpec {
                run_id: run_id(name, &scene.scene_name, train.seed),
                method: name.clone(),
                scene_index,
                train: train.clone(),
                unpublished_defaults: unpublished_defaults.clone(),
            });
        }
    }
    let mut ids: Vec<&str> = specs.iter().map(|s| s.run_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Config(format!(
            "run id '{}' is produced by two (method, scene) pairs; rename one of them",
            w[0]
        )));
    }
    Ok(specs)
}

/// A finished run with its trained parameters.
#[derive(Debug, Clone)]
pub struct CompletedRun {
    pub summary: RunSummary,
    pub outcome: TrainOutcome,
}

/// Everything produced by [`run_experiment`], in plan order.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub output_dir: PathBuf,
    pub scenes: Vec<SceneData>,
    pub runs: Vec<std::result::Result<CompletedRun, String>>,
}

impl ExperimentOutput {
    pub fn completed(&self) -> impl Iterator<Item = &CompletedRun> {
        self.runs.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn failures(&self) -> Vec<String> {
        self.runs.iter().filter_map(|r| r.as_ref().err().cloned()).collect()
    }
}

fn write_run(
    dir: &Path,
    loaded: &LoadedConfig,
    spec: &RunSpec,
    scene_cfg: &SceneConfig,
    scene: &SceneData,
) -> Result<CompletedRun> {
    let start = Instant::now();
    let epochs_file = format!("{}.csv", spec.run_id);
    let csv_path = dir.join(&epochs_file);
    let file = File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut sink_error = None;

    let result = train_observed(scene, &spec.train, |record| {
        let row = EpochRow {
            run_id: spec.run_id.clone(),
            epoch: record.epoch,
            loss_id: spec.train.loss_id,
            mean_train_loss: record.mean_train_loss,
            median_rot_deg: record.report.avg_rot_deg,
            median_trans_m: record.report.avg_trans_m,
        };
        if let Err(e) = writer.serialize(&row).and_then(|_| writer.flush().map_err(csv::Error::from)) {
            sink_error = Some(e);
            return Err(lieposenet::Error::InvalidArgument("cannot write epoch row".into()));
        }
        Ok(())
    });
    if let Some(e) = sink_error {
        return Err(e.into());
    }
    writer.flush().map_err(|e| CliError::io(&csv_path, e))?;
    let outcome = result.map_err(|e| CliError::core(format!("run {}", spec.run_id), e))?;

    let last = outcome.last();
    let scene_report = &last.report.per_scene[0];
    let summary = RunSummary {
        run_id: spec.run_id.clone(),
        method: spec.method.clone(),
        scene: scene.name.clone(),
        scene_index: spec.scene_index,
        epochs_file,
        final_metrics: FinalMetrics {
            median_rot_deg: scene_report.median_rot_deg,
            median_trans_m: scene_report.median_trans_m,
            n_samples: scene_report.n_samples,
            skipped: last.skipped,
        },
        wall_time_s: start.elapsed().as_secs_f64(),
        train_config: spec.train.clone(),
        scene_config: scene_cfg.clone(),
        unpublished_defaults: spec.unpublished_defaults.clone(),
        config_path: loaded.path.display().to_string(),
        config_text: loaded.text.clone(),
    };
    let json_path = dir.join(format!("{}.json", spec.run_id));
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    File::create(&json_path)
        .and_then(|mut f| f.write_all(json.as_bytes()))
        .map_err(|e| CliError::io(&json_path, e))?;
    Ok(CompletedRun { summary, outcome })
}

/// Generates the scenes, then trains every planned run on a pool of
/// `opts.jobs` threads. A failing run does not stop the others.
pub fn run_experiment(loaded: &LoadedConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let specs = plan(loaded, opts.seed_override)?;
    let dir = opts
        .output_dir
        .clone()
        .unwrap_or_else(|| loaded.config.output_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = opts.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;

    pool.install(|| {
        let scenes = loaded
            .config
            .scenes
            .par_iter()
            .map(|cfg| generate_scene(cfg).map_err(|e| CliError::core(format!("scene {}", cfg.scene_name), e)))
            .collect::<Result<Vec<_>>>()?;
        let runs = specs
            .par_iter()
            .map(|spec| {
                let i = spec.scene_index;
                write_run(&dir, loaded, spec, &loaded.config.scenes[i], &scenes[i]).map_err(|e| e.to_string())
            })
            .collect();
        Ok(ExperimentOutput {
            output_dir: dir.clone(),
            scenes,
            runs,
        })
    })
}
