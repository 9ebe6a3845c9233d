mod common;

use proptest::prelude::*;
use wavedens::harness::{fmt_f64, make_basis, quantile7};
use wavedens::metrics::{integrate, QuadratureGrid};
use wavedens::pipeline::{fit_auto, PipelineConfig};
use wavedens::threshold::RuleKind;
use wavedens::{build_neighbors, fit, SampleSet, WaveletFamily};

fn points(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, (20 * d)..(80 * d)).prop_filter("multiple of d", move |v| v.len() % d == 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalized_fit_is_a_density(flat in points(1)) {
        let s = SampleSet::new(flat, 1).unwrap();
        prop_assume!(s.bbox().hi[0] - s.bbox().lo[0] > 1e-3);
        let cfg = PipelineConfig::new(make_basis(WaveletFamily::Daubechies(3)).unwrap());
        let out = fit_auto(&s, &cfg, Some(RuleKind::Universal)).unwrap();
        prop_assert!((out.model.coeff_norm() - 1.0).abs() < 1e-12);
        let grid = QuadratureGrid::new(out.model.support_box(), 4096).unwrap();
        let (total, _) = integrate(&out.model, &grid);
        prop_assert!((total - 1.0).abs() < 0.02, "integral {}", total);
        let file = out.model_file();
        for x in s.rows() {
            prop_assert!(file.density(x).unwrap() >= 0.0);
        }
    }

    #[test]
    fn row_order_does_not_change_coefficients(flat in points(2), rot in 0usize..50) {
        let s = SampleSet::new(flat.clone(), 2).unwrap();
        let n = s.len();
        let k = rot % n;
        let mut shifted = flat[2 * k..].to_vec();
        shifted.extend_from_slice(&flat[..2 * k]);
        let s2 = SampleSet::new(shifted, 2).unwrap();
        let basis = make_basis(WaveletFamily::Haar).unwrap();
        let a = fit(&s, &build_neighbors(&s).unwrap(), &basis, -1, 0).unwrap();
        let b = fit(&s2, &build_neighbors(&s2).unwrap(), &basis, -1, 0).unwrap();
        for (idx, v) in a.coefficients() {
            let w = b.id_of(&idx).map_or(0.0, |id| b.value(id));
            prop_assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn quantiles_are_ordered_and_bounded(mut v in prop::collection::vec(-1e6f64..1e6, 1..60), p in 0.0f64..1.0) {
        v.sort_by(f64::total_cmp);
        let q = quantile7(&v, p);
        prop_assert!(q >= v[0] && q <= v[v.len() - 1]);
        prop_assert!(quantile7(&v, 0.25) <= quantile7(&v, 0.75));
    }

    #[test]
    fn printed_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
