mod common;

use std::sync::Arc;

use common::*;
use wavedens::estimator::{loo_coefficients, ModelFile};
use wavedens::{build_neighbors, fit, fit_single_level, WaveletBasis, WaveletFamily};

fn max_gap(a: &wavedens::SqrtDensityModel, b: &wavedens::SqrtDensityModel, per_axis: usize) -> f64 {
    let bx = a.support_box();
    let pad: Vec<f64> = bx.lo.iter().map(|v| v - 0.3).collect();
    let hi: Vec<f64> = bx.hi.iter().map(|v| v + 0.3).collect();
    grid_points(&pad, &hi, per_axis)
        .iter()
        .map(|x| (a.evaluate(x).unwrap() - b.evaluate(x).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn multilevel_equals_single_level_at_finer_resolution() {
    for (family, tol) in [
        (WaveletFamily::Haar, 1e-10),
        (WaveletFamily::Daubechies(4), 1e-6),
        (WaveletFamily::Symlet(6), 1e-6),
    ] {
        let basis = Arc::new(WaveletBasis::new(family, 10).unwrap());
        for d in [1, 2] {
            let s = gaussian_sample(200, d, 11 + d as u64);
            let t = build_neighbors(&s).unwrap();
            let multi = fit(&s, &t, &basis, 0, 2).unwrap();
            let single = fit_single_level(&s, &t, &basis, 3).unwrap();
            let per_axis = if d == 1 { 2001 } else { 61 };
            let gap = max_gap(&multi, &single, per_axis);
            assert!(gap < tol, "{family} d={d}: {gap}");
            let na = multi.coeff_norm();
            let nb = single.coeff_norm();
            assert!((na - nb).abs() < 1e-10 * nb, "{family} d={d}: norms {na} {nb}");
        }
    }
}

#[test]
fn filter_bank_coefficients_match_direct_sums() {
    let basis = Arc::new(WaveletBasis::new(WaveletFamily::Daubechies(3), 8).unwrap());
    let s = gaussian_sample(120, 2, 5);
    let t = build_neighbors(&s).unwrap();
    let m = fit(&s, &t, &basis, -1, 1).unwrap();
    let mut checked = 0;
    for (idx, v) in m.coefficients() {
        let direct = direct_coefficient(&s, &t, &basis, &idx, m.top_level());
        assert!((v - direct).abs() < 1e-12, "{idx:?}: {v} vs {direct}");
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn loo_update_matches_naive_refit() {
    let basis = Arc::new(WaveletBasis::new(WaveletFamily::Daubechies(4), 10).unwrap());
    let s = gaussian_sample(100, 2, 99);
    let t = build_neighbors(&s).unwrap();
    let m = fit(&s, &t, &basis, 0, 1).unwrap();
    for i in (0..100).step_by(9) {
        let loo = loo_coefficients(&s, &t, &m, i).unwrap().loo_values(&m);
        let s2 = s.without(i).unwrap();
        let t2 = build_neighbors(&s2).unwrap();
        let refit = fit(&s2, &t2, &basis, 0, 1).unwrap();
        for (idx, v) in refit.coefficients() {
            let mine = m.id_of(&idx).map_or(0.0, |id| loo[id]);
            assert!((mine - v).abs() < 1e-10, "i={i} {idx:?}");
        }
    }
}

#[test]
fn normalized_model_has_unit_norm_and_integral() {
    let basis = Arc::new(WaveletBasis::new(WaveletFamily::Symlet(4), 10).unwrap());
    let s = gaussian_sample(400, 1, 3);
    let t = build_neighbors(&s).unwrap();
    let m = fit(&s, &t, &basis, 0, 2).unwrap().normalize().unwrap();
    assert!((m.coeff_norm() - 1.0).abs() < 1e-12);
    let bx = m.support_box();
    let n = 200_000;
    let h = (bx.hi[0] - bx.lo[0]) / n as f64;
    let integral: f64 = (0..n)
        .map(|k| m.density(&[bx.lo[0] + (k as f64 + 0.5) * h]).unwrap() * h)
        .sum();
    assert!((integral - 1.0).abs() < 0.01, "{integral}");
}

#[test]
fn json_round_trip_is_bit_faithful() {
    let basis = Arc::new(WaveletBasis::new(WaveletFamily::Daubechies(2), 8).unwrap());
    let s = gaussian_sample(80, 2, 8);
    let t = build_neighbors(&s).unwrap();
    for m in [
        fit(&s, &t, &basis, 0, 1).unwrap().normalize().unwrap(),
        fit_single_level(&s, &t, &basis, 1).unwrap(),
    ] {
        let text = ModelFile::new(m.clone(), None).to_json().unwrap();
        let back = ModelFile::from_json(&text).unwrap().model;
        assert_eq!(back.is_normalized(), m.is_normalized());
        assert_eq!(back.coarse_level(), m.coarse_level());
        assert_eq!(back.top_level(), m.top_level());
        assert_eq!(back.kept_count(), m.kept_count());
        for (idx, v) in m.coefficients() {
            let w = back.id_of(&idx).map_or(0.0, |id| back.value(id));
            assert_eq!(v.to_bits(), w.to_bits());
        }
        for x in grid_points(&[-2.0, -2.0], &[2.0, 2.0], 9) {
            assert_eq!(m.evaluate(&x).unwrap(), back.evaluate(&x).unwrap());
        }
    }
}

#[test]
fn synthesis_inverts_the_filter_bank() {
    let basis = Arc::new(WaveletBasis::new(WaveletFamily::Symlet(5), 10).unwrap());
    let s = gaussian_sample(150, 2, 70);
    let t = build_neighbors(&s).unwrap();
    let multi = fit(&s, &t, &basis, -1, 2).unwrap();
    let single = fit_single_level(&s, &t, &basis, 3).unwrap();
    let back = multi.to_single_level().unwrap();
    assert_eq!(back.top_level(), 3);
    for (idx, v) in back.coefficients() {
        let w = single.id_of(&idx).map_or(0.0, |id| single.value(id));
        assert!((v - w).abs() < 1e-12, "{idx:?}");
    }
    assert!(max_gap(&multi, &back, 41) < 1e-10);
}

#[test]
fn single_level_form_is_a_weighted_kernel_sum() {
    // g(x) = sum_i W_i K(x, X_i) with K(x, y) = sum_z phi_z(x) phi_z(y).
    let basis = Arc::new(WaveletBasis::new(WaveletFamily::Daubechies(3), 8).unwrap());
    let s = gaussian_sample(50, 1, 13);
    let t = build_neighbors(&s).unwrap();
    let multi = fit(&s, &t, &basis, 0, 1).unwrap();
    let top = multi.top_level();
    for k in 0..40 {
        let x = -3.0 + 0.15 * k as f64;
        let kernel_sum: f64 = s
            .rows()
            .zip(t.weight())
            .map(|(xi, &w)| {
                let kern: f64 = (-200..200)
                    .map(|z| {
                        let idx = wavedens::BasisIndex::new(top, vec![z], 0).unwrap();
                        basis.eval_aligned(&idx, top, &[x]).unwrap() * basis.eval_aligned(&idx, top, xi).unwrap()
                    })
                    .sum();
                w * kern
            })
            .sum();
        let direct = multi.evaluate(&[x]).unwrap();
        assert!((kernel_sum - direct).abs() < 1e-10, "x={x}");
    }
}
