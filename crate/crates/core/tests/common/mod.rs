#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wavedens::{BasisIndex, NeighborTable, SampleSet, WaveletBasis};

pub fn gaussian_sample(n: usize, d: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let flat: Vec<f64> = (0..n * d).map(|_| normal.sample(&mut rng)).collect();
    SampleSet::new(flat, d).unwrap()
}

pub fn uniform_sample(n: usize, d: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    SampleSet::new(flat, d).unwrap()
}

/// Direct coefficient sum `sum_i W_i b(X_i)` evaluated on the grid of synthesis level `top`.
pub fn direct_coefficient(s: &SampleSet, t: &NeighborTable, basis: &WaveletBasis, idx: &BasisIndex, top: i32) -> f64 {
    s.rows()
        .zip(t.weight())
        .map(|(x, &w)| w * basis.eval_aligned(idx, top, x).unwrap())
        .sum()
}

pub fn grid_points(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut x = vec![0.0; d];
            for a in (0..d).rev() {
                let t = (k % per_axis) as f64 / (per_axis - 1) as f64;
                x[a] = lo[a] + t * (hi[a] - lo[a]);
                k /= per_axis;
            }
            x
        })
        .collect()
}

/// Brute-force nearest-neighbour ball volumes of the rows `keep` of `s`.
pub fn brute_volumes(s: &SampleSet, keep: &[usize]) -> Vec<f64> {
    let d = s.dim();
    let unit = match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => panic!("oracle supports d <= 3"),
    };
    keep.iter()
        .map(|&i| {
            let r = keep
                .iter()
                .filter(|&&k| k != i)
                .map(|&k| {
                    s.row(i)
                        .iter()
                        .zip(s.row(k))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            unit * r.powi(d as i32)
        })
        .collect()
}

/// Coefficients over `layout` computed from scratch on the rows `keep`.
pub fn naive_coefficients(
    s: &SampleSet,
    keep: &[usize],
    basis: &WaveletBasis,
    layout: &[BasisIndex],
    top: i32,
) -> Vec<f64> {
    let vols = brute_volumes(s, keep);
    let m = keep.len() as f64;
    layout
        .iter()
        .map(|idx| {
            keep.iter()
                .zip(&vols)
                .map(|(&k, &v)| {
                    2.0 * (v / (std::f64::consts::PI * m)).sqrt() * basis.eval_aligned(idx, top, s.row(k)).unwrap()
                })
                .sum()
        })
        .collect()
}

#[allow(clippy::needless_range_loop)]
/// Leave-one-out criterion by `n` refits. `mask[b]` selects the coefficients
/// retained in every refit.
pub fn naive_criterion(
    s: &SampleSet,
    basis: &WaveletBasis,
    layout: &[BasisIndex],
    mask: &[bool],
    top: i32,
    normalized: bool,
) -> f64 {
    let n = s.len();
    let all: Vec<usize> = (0..n).collect();
    let vols = brute_volumes(s, &all);
    let full = naive_coefficients(s, &all, basis, layout, top);
    let full_sq: f64 = full.iter().zip(mask).filter(|p| *p.1).map(|(c, _)| c * c).sum();
    let mut total = 0.0;
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
        let c = naive_coefficients(s, &keep, basis, layout, top);
        let norm = c
            .iter()
            .zip(mask)
            .filter(|p| *p.1)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt();
        let value: f64 = layout
            .iter()
            .zip(&c)
            .zip(mask)
            .filter(|p| *p.1)
            .map(|((idx, v), _)| v * basis.eval_aligned(idx, top, s.row(i)).unwrap())
            .sum();
        let g = if normalized {
            if norm > 0.0 {
                value / norm
            } else {
                0.0
            }
        } else {
            value
        };
        total += 2.0 * (vols[i] / (std::f64::consts::PI * n as f64)).sqrt() * g.abs();
    }
    if normalized {
        total
    } else {
        total - 0.5 * full_sq
    }
}
