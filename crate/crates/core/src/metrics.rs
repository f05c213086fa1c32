//! Pose error metrics, per-scene medians and cross-scene averages.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::Pose;

/// Scene label used for averaged rows in CSV output.
pub const AVERAGE_SCENE: &str = "AVERAGE";

pub const CSV_HEADER: &str = "method,scene,median_trans_m,median_rot_deg,n_samples";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub rot_deg: f64,
    pub trans_m: f64,
}

/// Euclidean translation error and geodesic rotation error
/// `2 acos(|<q_pred, q_truth>|)` in degrees.
pub fn pose_error(pred: &Pose, truth: &Pose) -> PoseError {
    let qp = pred.rotation.to_quaternion();
    let qt = truth.rotation.to_quaternion();
    let c = qp.dot(&qt).abs().clamp(0.0, 1.0);
    PoseError {
        rot_deg: (2.0 * c.acos()).to_degrees(),
        trans_m: (pred.translation - truth.translation).norm(),
    }
}

/// Middle element, or the mean of the two middle elements for even length.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("median of an empty list"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub scene_name: String,
    pub median_rot_deg: f64,
    pub median_trans_m: f64,
    pub n_samples: usize,
}

impl SceneReport {
    pub fn from_errors(scene_name: impl Into<String>, errors: &[PoseError]) -> Result<Self> {
        let rot: Vec<f64> = errors.iter().map(|e| e.rot_deg).collect();
        let trans: Vec<f64> = errors.iter().map(|e| e.trans_m).collect();
        Ok(Self {
            scene_name: scene_name.into(),
            median_rot_deg: median(&rot)?,
            median_trans_m: median(&trans)?,
            n_samples: errors.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_scene: Vec<SceneReport>,
    pub avg_rot_deg: f64,
    pub avg_trans_m: f64,
}

/// Unweighted mean of the per-scene medians.
pub fn aggregate(per_scene: Vec<SceneReport>) -> Result<MetricsReport> {
    if per_scene.is_empty() {
        return Err(Error::EmptyInput("no scenes to aggregate"));
    }
    let n = per_scene.len() as f64;
    let avg_rot_deg = per_scene.iter().map(|s| s.median_rot_deg).sum::<f64>() / n;
    let avg_trans_m = per_scene.iter().map(|s| s.median_trans_m).sum::<f64>() / n;
    Ok(MetricsReport {
        per_scene,
        avg_rot_deg,
        avg_trans_m,
    })
}

/// Two decimals. `{:.2}` rounds the exact binary value, ties to even.
pub fn format_2dp(value: f64) -> String {
    format!("{value:.2}")
}

pub fn format_cell(trans_m: f64, rot_deg: f64) -> String {
    format!("{} / {}", format_2dp(trans_m), format_2dp(rot_deg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormattedTable {
    pub text: String,
    pub csv: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders `trans / rot` cells per scene (rows) and method (columns) plus an
/// `Average` row, alongside the long-format CSV.
pub fn format_table(reports: &[(String, MetricsReport)]) -> Result<FormattedTable> {
    let (_, first) = reports
        .first()
        .ok_or(Error::EmptyInput("no methods to format"))?;
    let scenes: Vec<&str> = first.per_scene.iter().map(|s| s.scene_name.as_str()).collect();
    let reference: BTreeSet<&str> = scenes.iter().copied().collect();

    let mut problems = Vec::new();
    for (method, report) in reports {
        let have: BTreeSet<&str> = report.per_scene.iter().map(|s| s.scene_name.as_str()).collect();
        for missing in reference.difference(&have) {
            problems.push(format!("{method}/{missing} missing"));
        }
        for extra in have.difference(&reference) {
            problems.push(format!("{method}/{extra} unexpected"));
        }
    }
    if !problems.is_empty() {
        return Err(Error::SceneMismatch(problems.join(", ")));
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["Scene".to_string()];
    header.extend(reports.iter().map(|(m, _)| m.clone()));
    rows.push(header);
    for scene in &scenes {
        let mut row = vec![scene.to_string()];
        for (_, report) in reports {
            let s = report
                .per_scene
                .iter()
                .find(|s| s.scene_name == *scene)
                .expect("scene sets checked above");
            row.push(format_cell(s.median_trans_m, s.median_rot_deg));
        }
        rows.push(row);
    }
    let mut avg = vec!["Average".to_string()];
    avg.extend(reports.iter().map(|(_, r)| format_cell(r.avg_trans_m, r.avg_rot_deg)));
    rows.push(avg);

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        let _ = writeln!(text, "| {} |", cells.join(" | "));
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(text, "|-{}-|", rule.join("-|-"));
        }
    }

    let mut csv = String::new();
    let _ = writeln!(csv, "{CSV_HEADER}");
    for (method, report) in reports {
        for s in &report.per_scene {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                csv_field(method),
                csv_field(&s.scene_name),
                s.median_trans_m,
                s.median_rot_deg,
                s.n_samples
            );
        }
        let total: usize = report.per_scene.iter().map(|s| s.n_samples).sum();
        let _ = writeln!(
            csv,
            "{},{AVERAGE_SCENE},{},{},{total}",
            csv_field(method),
            report.avg_trans_m,
            report.avg_rot_deg
        );
    }
    Ok(FormattedTable { text, csv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{so3_exp, RotationMatrix};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn scene(name: &str, trans: f64, rot: f64) -> SceneReport {
        SceneReport {
            scene_name: name.into(),
            median_rot_deg: rot,
            median_trans_m: trans,
            n_samples: 10,
        }
    }

    #[test]
    fn pose_error_examples() {
        let a = Pose::new(so3_exp(&Vector3::new(0.1, 0.2, 0.3)), Vector3::new(1.0, 2.0, 3.0));
        let e = pose_error(&a, &a);
        assert!(e.rot_deg < 1e-5 && e.trans_m == 0.0);

        let rz = Pose::new(so3_exp(&Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2)), Vector3::zeros());
        assert_relative_eq!(pose_error(&rz, &Pose::identity()).rot_deg, 90.0, epsilon = 1e-10);

        let t = Pose::from_translation(Vector3::new(3.0, 4.0, 0.0));
        assert_eq!(pose_error(&Pose::identity(), &t).trans_m, 5.0);
    }

    #[test]
    fn pose_error_is_symmetric() {
        let a = Pose::new(so3_exp(&Vector3::new(0.4, -1.2, 0.3)), Vector3::new(1.0, 0.0, 0.0));
        let b = Pose::new(so3_exp(&Vector3::new(-2.0, 0.1, 0.9)), Vector3::new(0.0, 1.0, 2.0));
        let (ab, ba) = (pose_error(&a, &b), pose_error(&b, &a));
        assert!((ab.rot_deg - ba.rot_deg).abs() < 1e-10);
        assert!((ab.trans_m - ba.trans_m).abs() < 1e-10);
        assert!(ab.rot_deg <= 180.0);
    }

    #[test]
    fn half_turn_error_is_180() {
        let flip = RotationMatrix::from_matrix(nalgebra::Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0)), 1e-12).unwrap();
        let e = pose_error(&Pose::new(flip, Vector3::zeros()), &Pose::identity());
        assert_relative_eq!(e.rot_deg, 180.0, epsilon = 1e-10);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 10.0]).unwrap(), 2.5);
        assert_eq!(median(&[5.0]).unwrap(), 5.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert!(matches!(median(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(vec![scene("a", 0.5, 7.0)]).unwrap();
        assert_eq!((one.avg_trans_m, one.avg_rot_deg), (0.5, 7.0));
        let zero = aggregate(vec![scene("a", 0.0, 0.0), scene("b", 0.0, 0.0)]).unwrap();
        assert_eq!((zero.avg_trans_m, zero.avg_rot_deg), (0.0, 0.0));
        assert!(aggregate(vec![]).is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(format_2dp(8.881), "8.88");
        assert_eq!(format_2dp(0.125), "0.12");
        assert_eq!(format_2dp(0.375), "0.38");
        assert_eq!(format_2dp(5.39), "5.39");
        assert_eq!(format_cell(0.18, 5.39), "0.18 / 5.39");
    }

    #[test]
    fn table_layout() {
        let r = aggregate(vec![scene("Chess", 0.18, 5.39)]).unwrap();
        let t = format_table(&[("LiePoseNet L1".into(), r)]).unwrap();
        assert!(t.text.contains("0.18 / 5.39"));
        assert_eq!(t.text.matches("0.18 / 5.39").count(), 2);
        assert!(t.text.contains("Average"));
        let lines: Vec<&str> = t.csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "LiePoseNet L1,Chess,0.18,5.39,10");
        assert_eq!(lines[2], "LiePoseNet L1,AVERAGE,0.18,5.39,10");
        assert!(matches!(format_table(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn table_rejects_mismatched_scenes() {
        let a = aggregate(vec![scene("x", 0.1, 1.0), scene("y", 0.1, 1.0)]).unwrap();
        let b = aggregate(vec![scene("x", 0.1, 1.0)]).unwrap();
        let err = format_table(&[("a".into(), a), ("b".into(), b)]).unwrap_err();
        assert_eq!(err, Error::SceneMismatch("b/y missing".into()));
    }
}
