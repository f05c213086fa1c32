use std::time::Instant;

use lieposenet::checks::{run, Suite};

fn run_and_assert(suite: Suite) {
    let start = Instant::now();
    let report = run(suite).unwrap();
    print!("{report}");
    println!("{suite}: {:.2} s", start.elapsed().as_secs_f64());
    assert!(report.passed(), "{report}");
}

#[test]
fn roundtrip_suite_passes() {
    run_and_assert(Suite::Roundtrip);
}

#[test]
fn grad_suite_passes() {
    run_and_assert(Suite::Grad);
}

#[test]
fn sample_suite_passes() {
    run_and_assert(Suite::Sample);
}

#[test]
fn density_suite_passes() {
    run_and_assert(Suite::Density);
}
