use wavedens::densities::{catalog, density_by_name, CATALOG_NAMES};
use wavedens::metrics::{integrate, Density, QuadratureGrid};

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn every_name_resolves() {
    assert_eq!(catalog().len(), CATALOG_NAMES.len());
    for name in CATALOG_NAMES {
        let f = density_by_name(name).unwrap();
        assert_eq!(f.name, *name);
    }
    assert!(density_by_name("nope").is_err());
}

#[test]
fn marginals_pass_kolmogorov_smirnov() {
    let n = 10_000;
    let critical = 1.628 / (n as f64).sqrt();
    for f in catalog() {
        let mut rejections = vec![0; f.d];
        for seed in 0..5 {
            let s = f.sample(n, 1000 + seed).unwrap();
            for (axis, r) in rejections.iter_mut().enumerate() {
                let xs: Vec<f64> = s.rows().map(|x| x[axis]).collect();
                if ks_statistic(xs, |x| f.marginal_cdf(axis, x)) > critical {
                    *r += 1;
                }
            }
        }
        for (axis, r) in rejections.iter().enumerate() {
            assert!(*r <= 1, "{} axis {axis}: {r}/5 rejections", f.name);
        }
    }
}

#[test]
fn sample_means_match_the_cdf() {
    // E X = hi - int_lo^hi F(x) dx on a box holding the mass.
    let n = 100_000;
    for f in catalog() {
        let s = f.sample(n, 7).unwrap();
        let bx = f.support_box();
        let mean = s.mean();
        let sd = s.std_dev();
        for axis in 0..f.d {
            let m = 20_000;
            let h = (bx.hi[axis] - bx.lo[axis]) / m as f64;
            let area: f64 = (0..m)
                .map(|k| f.marginal_cdf(axis, bx.lo[axis] + (k as f64 + 0.5) * h) * h)
                .sum();
            let truth = bx.hi[axis] - area;
            let band = (5.0 * sd[axis] / (n as f64).sqrt()).max(0.02 * sd[axis].min(1.0));
            assert!(
                (mean[axis] - truth).abs() < band,
                "{} axis {axis}: {} vs {truth}",
                f.name,
                mean[axis]
            );
        }
    }
    let z = density_by_name("std-normal").unwrap().sample(n, 3).unwrap();
    assert!(z.mean()[0].abs() < 0.02);
}

#[test]
fn densities_integrate_to_one() {
    for f in catalog() {
        let nodes = if f.d == 1 { 1 << 14 } else { 1024 };
        let grid = QuadratureGrid::new(f.support_box(), nodes).unwrap();
        let (total, err) = integrate(&f, &grid);
        assert!((total - 1.0).abs() < 1e-3, "{}: {total} (err {err})", f.name);
        assert!((f.normalization() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn sampling_is_reproducible() {
    let f = density_by_name("claw-2d").unwrap();
    let a = f.sample(500, 42).unwrap();
    let b = f.sample(500, 42).unwrap();
    let c = f.sample(500, 43).unwrap();
    assert_eq!(a.as_flat(), b.as_flat());
    assert_ne!(a.as_flat(), c.as_flat());
}

#[test]
fn pdf_rejects_wrong_dimension() {
    let f = density_by_name("2d-comb").unwrap();
    assert!(f.density_eval(&[0.0]).is_err());
    assert!(f.density_eval(&[0.0, 0.0]).unwrap() >= 0.0);
}

#[test]
fn json_lists_parameters() {
    let f = density_by_name("kurtotic-mix-1").unwrap();
    let v: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
    assert_eq!(v["name"], "kurtotic-mix-1");
    assert_eq!(v["d"].as_u64().unwrap() as usize, f.d);
}
