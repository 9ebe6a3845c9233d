use std::path::Path;

use wavedens::harness::{read_points, run_fit, FitOptions};
use wavedens::pipeline::Scaling;
use wavedens::selection::Criterion;
use wavedens::threshold::RuleKind;
use wavedens::WaveletFamily;

fn faithful_fit(basis: WaveletFamily) -> wavedens::harness::FitReport {
    let s = read_points(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/old_faithful.csv")).unwrap();
    let opts = FitOptions {
        basis,
        delta_j: 2,
        criterion: Criterion::Normalized,
        rule: Some(RuleKind::Jackknife),
        scaling: Scaling::UnitCube,
    };
    run_fit(&s, &opts).unwrap().2
}

// Reference maxima of the thresholding criterion: 0.91383 (db3) and 0.91719 (sym4).
#[test]
fn geyser_criterion_near_reference_maxima() {
    let db3 = faithful_fit(WaveletFamily::Daubechies(3));
    let sym4 = faithful_fit(WaveletFamily::Symlet(4));
    let (a, b) = (db3.max_tau_criterion.unwrap(), sym4.max_tau_criterion.unwrap());
    assert!((a - 0.91383).abs() < 0.005, "db3 {a}");
    assert!((b - 0.91719).abs() < 0.005, "sym4 {b}");
    assert!(b > a);
    assert!(sym4.kept > db3.kept);
    assert_eq!(db3.n, 272);
}
