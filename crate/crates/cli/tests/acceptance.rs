//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use lieposenet::checks::{self, CheckReport, Suite};
use lieposenet::harness::rotation_variance;
use lieposenet::metrics::{aggregate, SceneReport};
use lieposenet_cli::runner::ExperimentOutput;
use lieposenet_cli::{run_experiment, LoadedConfig, RunOptions};
use serde::Deserialize;

const ROUNDTRIP_LIMIT: Duration = Duration::from_secs(5);
const GRAD_LIMIT: Duration = Duration::from_secs(30);
const SAMPLE_LIMIT: Duration = Duration::from_secs(20);
const BENCHMARK_LIMIT: Duration = Duration::from_secs(120);

const TABLE_TOLERANCE: f64 = 0.01;
/// Allowed ratio of the Lie loss at 10 epochs to the baseline at 100.
const LONG_BUDGET_FACTOR: f64 = 1.15;
/// Relative drift allowed between a fresh baseline run and its frozen
/// reference values.
const REFERENCE_DRIFT: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn suite(suite: Suite, limit: Duration) -> Outcome {
    let start = Instant::now();
    let report: CheckReport = match checks::run(suite) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: format!("suite error: {e}"),
            }
        }
    };
    let elapsed = start.elapsed();
    let items: Vec<String> = report
        .items
        .iter()
        .map(|i| format!("{} = {:.3e} (tol {:.0e})", i.label, i.observed, i.tolerance))
        .collect();
    Outcome {
        pass: report.passed() && elapsed < limit,
        detail: format!(
            "{}; {:.2} s (limit {} s)",
            items.join("; "),
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    }
}

fn table_fixture() -> Outcome {
    let published = [
        ("Chess", 0.18, 5.39),
        ("Fire", 0.36, 10.05),
        ("Heads", 0.20, 14.86),
        ("Office", 0.24, 6.66),
        ("Pumpkin", 0.29, 6.06),
        ("Red Kitchen", 0.30, 6.66),
        ("Stairs", 0.34, 12.49),
    ];
    let scenes = published
        .iter()
        .map(|&(name, t, r)| SceneReport {
            scene_name: name.into(),
            median_rot_deg: r,
            median_trans_m: t,
            n_samples: 1,
        })
        .collect();
    let report = aggregate(scenes).expect("seven scenes");
    let pass =
        (report.avg_trans_m - 0.27).abs() <= TABLE_TOLERANCE && (report.avg_rot_deg - 8.88).abs() <= TABLE_TOLERANCE;
    Outcome {
        pass,
        detail: format!(
            "average {:.4} m / {:.4} deg vs 0.27 / 8.88 (tol {TABLE_TOLERANCE})",
            report.avg_trans_m, report.avg_rot_deg
        ),
    }
}

#[derive(Deserialize)]
struct Reference {
    logq_l1_epoch_10: f64,
    logq_l1_epoch_100: f64,
}

/// Scene-averaged median rotation error of `method` at `epoch`.
fn curve_value(out: &ExperimentOutput, method: &str, epoch: usize) -> Option<f64> {
    let values: Vec<f64> = out
        .completed()
        .filter(|r| r.summary.method == method)
        .map(|r| r.outcome.epochs.get(epoch - 1).map(|e| e.report.avg_rot_deg))
        .collect::<Option<_>>()?;
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn speedup(out: &ExperimentOutput, elapsed: Duration) -> Outcome {
    let text = std::fs::read_to_string(fixture("benchmark_reference.toml")).expect("reference fixture");
    let reference: Reference = toml::from_str(&text).expect("reference fixture schema");
    let (Some(lie_10), Some(logq_10), Some(logq_100)) = (
        curve_value(out, "lie_nll", 10),
        curve_value(out, "logq_l1", 10),
        curve_value(out, "logq_l1", 100),
    ) else {
        return Outcome {
            pass: false,
            detail: format!("benchmark runs incomplete: {:?}", out.failures()),
        };
    };
    let drift = |live: f64, frozen: f64| (live - frozen).abs() / frozen;
    let reproduced = drift(logq_10, reference.logq_l1_epoch_10) <= REFERENCE_DRIFT
        && drift(logq_100, reference.logq_l1_epoch_100) <= REFERENCE_DRIFT;
    let short = lie_10 <= reference.logq_l1_epoch_10;
    let long = lie_10 <= LONG_BUDGET_FACTOR * reference.logq_l1_epoch_100;
    Outcome {
        pass: reproduced && short && long && elapsed < BENCHMARK_LIMIT,
        detail: format!(
            "lie_nll@10 = {lie_10:.2} deg; logq_l1@10 = {:.2} deg [{}]; {LONG_BUDGET_FACTOR} x logq_l1@100 = {:.2} deg [{}]; \
             baseline reproduces reference: {reproduced}; {:.1} s (limit {} s)",
            reference.logq_l1_epoch_10,
            if short { "met" } else { "not met" },
            LONG_BUDGET_FACTOR * reference.logq_l1_epoch_100,
            if long { "met" } else { "not met" },
            elapsed.as_secs_f64(),
            BENCHMARK_LIMIT.as_secs()
        ),
    }
}

fn symmetry_variance(out: &ExperimentOutput) -> Outcome {
    let (mut sym, mut plain) = (Vec::new(), Vec::new());
    for run in out.completed().filter(|r| r.summary.method == "lie_nll") {
        let test = &out.scenes[run.summary.scene_index].test;
        for row in 0..test.len() {
            let v = match rotation_variance(&run.outcome.params, &test.feature(row)) {
                Ok(v) => v,
                Err(e) => {
                    return Outcome {
                        pass: false,
                        detail: format!("variance error: {e}"),
                    }
                }
            };
            if test.is_symmetric[row] {
                sym.push(v);
            } else {
                plain.push(v);
            }
        }
    }
    if sym.is_empty() || plain.is_empty() {
        return Outcome {
            pass: false,
            detail: "no lie_nll runs or no rows of one kind".into(),
        };
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (s, p) = (mean(&sym), mean(&plain));
    Outcome {
        pass: s > p,
        detail: format!(
            "mean rotational variance {s:.5} on {} symmetric rows vs {p:.5} on {} other rows",
            sym.len(),
            plain.len()
        ),
    }
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("run dir")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_lieposenet"))
            .arg("train")
            .arg(fixture("small.toml"))
            .arg("--output-dir")
            .arg(dir.path())
            .output()
            .expect("spawn lieposenet");
        if !status.status.success() {
            return Outcome {
                pass: false,
                detail: format!("train failed: {}", String::from_utf8_lossy(&status.stderr)),
            };
        }
    }
    let (a, b) = (csv_files(dirs[0].path()), csv_files(dirs[1].path()));
    let identical = !a.is_empty() && a == b;
    Outcome {
        pass: identical,
        detail: format!("{} CSV files, byte-identical across two runs: {identical}", a.len()),
    }
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("Lie round-trip suite", suite(Suite::Roundtrip, ROUNDTRIP_LIMIT)),
        ("Gradient suite", suite(Suite::Grad, GRAD_LIMIT)),
        ("Distribution suite", suite(Suite::Sample, SAMPLE_LIMIT)),
        ("Table fixture averages", table_fixture()),
    ];

    let loaded = LoadedConfig::from_file(&workspace_root().join("configs/benchmark.toml")).expect("benchmark config");
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = run_experiment(
        &loaded,
        &RunOptions {
            output_dir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        },
    )
    .expect("benchmark experiment");
    let elapsed = start.elapsed();
    results.push(("Speedup analogue", speedup(&out, elapsed)));
    results.push(("Symmetry-uncertainty property", symmetry_variance(&out)));
    results.push(("Determinism of train", determinism()));

    let total = results.len();
    let mut failed = 0;
    println!();
    for (i, (name, outcome)) in results.iter().enumerate() {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!("{tag} [{}/{total}] {name}: {}", i + 1, outcome.detail);
    }
    println!("\nacceptance: {} of {total} criteria passed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
