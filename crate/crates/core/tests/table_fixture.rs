use lieposenet::metrics::{aggregate, format_2dp, format_table, SceneReport};
use lieposenet::MetricsReport;

/// Published per-scene medians of the Lie loss with L1 mean head after ten
/// epochs on 7-Scenes, as `(scene, trans_m, rot_deg)`.
const LIE_L1_TEN_EPOCHS: [(&str, f64, f64); 7] = [
    ("Chess", 0.18, 5.39),
    ("Fire", 0.36, 10.05),
    ("Heads", 0.20, 14.86),
    ("Office", 0.24, 6.66),
    ("Pumpkin", 0.29, 6.06),
    ("Red Kitchen", 0.30, 6.66),
    ("Stairs", 0.34, 12.49),
];

fn published_report() -> MetricsReport {
    let scenes = LIE_L1_TEN_EPOCHS
        .iter()
        .map(|&(name, t, r)| SceneReport {
            scene_name: name.to_string(),
            median_rot_deg: r,
            median_trans_m: t,
            n_samples: 1,
        })
        .collect();
    aggregate(scenes).unwrap()
}

#[test]
fn published_averages_are_reproduced() {
    let report = published_report();
    assert!((report.avg_trans_m - 0.27).abs() <= 0.01, "{}", report.avg_trans_m);
    assert!((report.avg_rot_deg - 8.88).abs() <= 0.01, "{}", report.avg_rot_deg);
    assert_eq!(format_2dp(report.avg_trans_m), "0.27");
    assert_eq!(format_2dp(report.avg_rot_deg), "8.88");
}

#[test]
fn published_table_average_row() {
    let table = format_table(&[("lie_nll".to_string(), published_report())]).unwrap();
    let average = table.text.lines().find(|l| l.starts_with("| Average")).unwrap();
    assert!(average.contains("0.27 / 8.88"), "{average}");
    let row: Vec<&str> = table.csv.lines().find(|l| l.starts_with("lie_nll,AVERAGE,")).unwrap().split(',').collect();
    assert!((row[2].parse::<f64>().unwrap() - 0.27).abs() <= 0.01);
    assert!((row[3].parse::<f64>().unwrap() - 8.88).abs() <= 0.01);
    assert_eq!(row[4], "7");
}
