use std::collections::BTreeMap;
use std::sync::OnceLock;

use wavedens::densities::density_by_name;
use wavedens::harness::{cmd_simulate, kde_baseline, run_fit, FitOptions, RunConfig, SimulationFiles};
use wavedens::pipeline::Scaling;
use wavedens::selection::Criterion;
use wavedens::threshold::RuleKind;
use wavedens::WaveletFamily;

/// Linear interpolation between order statistics at `(n - 1) p`.
fn type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn read(path: &std::path::Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            headers
                .iter()
                .zip(rec.unwrap().iter())
                .map(|(h, v)| (h.to_owned(), v.to_owned()))
                .collect()
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::desk("mixture-2");
    cfg.ns = vec![150, 300];
    cfg.reps = 4;
    cfg.delta_js = vec![1, 2];
    cfg.criteria = vec![Criterion::Normalized, Criterion::Unnormalized];
    cfg.seed = 31;
    cfg
}

/// One battery shared by the tests below.
fn shared_run() -> &'static SimulationFiles {
    static RUN: OnceLock<(tempfile::TempDir, SimulationFiles)> = OnceLock::new();
    &RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let files = cmd_simulate(&small_config(), dir.path()).unwrap();
        (dir, files)
    })
    .1
}

#[test]
fn summary_quantiles_follow_from_long_rows() {
    let files = shared_run();
    let long = read(&files.long);
    let summary = read(&files.summary);
    assert_eq!(long.len(), 2 * 4 * 2 * 2 * 3);
    assert_eq!(summary.len(), 2 * 2 * 2 * 3);
    for s in &summary {
        let cell: Vec<_> = long
            .iter()
            .filter(|r| ["n", "criterion", "delta_j", "rule"].iter().all(|k| r[*k] == s[*k]))
            .collect();
        assert_eq!(cell.len(), 4);
        assert_eq!(num(s, "reps"), 4.0);
        let h2: Vec<f64> = cell.iter().map(|r| num(r, "hellinger_sq")).collect();
        let kde: Vec<f64> = cell.iter().map(|r| num(r, "kde_hellinger_sq")).collect();
        let kept: Vec<f64> = cell.iter().map(|r| num(r, "kept")).collect();
        for (col, v) in [
            ("h2_q1", type7(&h2, 0.25)),
            ("h2_median", type7(&h2, 0.5)),
            ("h2_q3", type7(&h2, 0.75)),
            ("kde_q1", type7(&kde, 0.25)),
            ("kde_median", type7(&kde, 0.5)),
            ("kde_q3", type7(&kde, 0.75)),
            ("kept_median", type7(&kept, 0.5)),
        ] {
            assert!((num(s, col) - v).abs() <= 1e-15 * v.abs().max(1.0), "{col}");
        }
    }
    for r in &long {
        let h2 = num(r, "hellinger_sq");
        assert!((0.0..=1.0).contains(&h2));
        assert_eq!(num(r, "j0"), num(r, "j_hat") - num(r, "delta_j"));
        assert_eq!(num(r, "seed"), 31.0 + num(r, "replicate"));
    }
}

#[test]
fn kde_column_matches_standalone_baseline() {
    let cfg = small_config();
    let long = read(&shared_run().long);
    let base = kde_baseline(&cfg.density, &cfg.ns, cfg.reps, cfg.seed, 1).unwrap();
    for (n, rep, seed, k) in base {
        for r in long
            .iter()
            .filter(|r| num(r, "n") as usize == n && num(r, "replicate") as usize == rep)
        {
            assert_eq!(num(r, "seed") as u64, seed);
            assert_eq!(num(r, "kde_hellinger_sq"), k.hellinger_sq);
        }
    }
}

#[test]
fn kept_count_matches_saved_coefficients() {
    let f = density_by_name("2d-comb").unwrap();
    let s = f.sample(600, 4).unwrap();
    for rule in [
        None,
        Some(RuleKind::Universal),
        Some(RuleKind::LevelDependent),
        Some(RuleKind::Jackknife),
    ] {
        let opts = FitOptions {
            basis: WaveletFamily::Symlet(4),
            delta_j: 2,
            criterion: Criterion::Normalized,
            rule,
            scaling: Scaling::UnitCube,
        };
        let (outcome, curve, report) = run_fit(&s, &opts).unwrap();
        let json: serde_json::Value = serde_json::from_str(&outcome.model_file().to_json().unwrap()).unwrap();
        assert_eq!(json["coefficients"].as_array().unwrap().len(), report.kept);
        assert!(report.kept <= report.total);
        assert_eq!(curve.argmax() as i32, report.j_hat);
        if rule.is_none() {
            assert!(report.tau.is_none());
        } else {
            let tau = report.tau.unwrap();
            let alphas = outcome
                .model
                .alpha_ids()
                .filter(|&id| outcome.model.value(id) != 0.0)
                .count();
            assert_eq!(report.kept, alphas + tau);
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.reps = 0;
    assert!(cmd_simulate(&cfg, dir.path()).is_err());
    let mut cfg = small_config();
    cfg.density = "nope".into();
    assert!(cmd_simulate(&cfg, dir.path()).unwrap_err().is_usage());
    let mut cfg = small_config();
    cfg.ns = vec![2];
    assert!(cmd_simulate(&cfg, dir.path()).is_err());
}
