//! Samples, exact nearest-neighbour distances and ball volumes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::wavelet::BoundingBox;

/// An immutable `n x d` sample stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    n: usize,
    d: usize,
    bbox: BoundingBox,
}

impl SampleSet {
    pub fn new(points: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || !points.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: points.len(),
            });
        }
        let n = points.len() / d;
        if n < 2 {
            return Err(Error::TooFewPoints { n, min: 2 });
        }
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for (k, &v) in points.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: k / d, col: k % d });
            }
            let a = k % d;
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
        Ok(SampleSet {
            points,
            n,
            d,
            bbox: BoundingBox { lo, hi },
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: r.len(),
                });
            }
            points.extend_from_slice(r);
        }
        Self::new(points, d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    /// The sample with observation `i` removed.
    pub fn without(&self, i: usize) -> Result<Self> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        let mut points = self.points.clone();
        points.drain(i * self.d..(i + 1) * self.d);
        Self::new(points, self.d)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (acc, v) in m.iter_mut().zip(r) {
                *acc += v;
            }
        }
        m.iter().map(|v| v / self.n as f64).collect()
    }

    /// Per-coordinate sample standard deviation (denominator `n - 1`).
    pub fn std_dev(&self) -> Vec<f64> {
        let m = self.mean();
        let mut s = vec![0.0; self.d];
        for r in self.rows() {
            for a in 0..self.d {
                s[a] += (r[a] - m[a]).powi(2);
            }
        }
        s.iter().map(|v| (v / (self.n - 1) as f64).sqrt()).collect()
    }
}

/// Volume of the `d`-ball of radius `r`: `pi^(d/2) r^d / Gamma(d/2 + 1)`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    unit_ball_volume(d) * r.powi(d as i32)
}

fn unit_ball_volume(d: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = V_{d-2} 2 pi / d.
    let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Per-point nearest-neighbour statistics.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    d: usize,
    nn1_index: Vec<usize>,
    nn1_dist: Vec<f64>,
    nn2_index: Vec<usize>,
    nn2_dist: Vec<f64>,
    volume: Vec<f64>,
    weight: Vec<f64>,
    reverse_nn: Vec<Vec<usize>>,
    zero_volume: usize,
}

#[derive(Clone, Copy)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Candidate {
    const NONE: Candidate = Candidate {
        dist2: f64::INFINITY,
        index: usize::MAX,
    };

    fn better_than(&self, other: &Candidate) -> bool {
        self.dist2 < other.dist2 || (self.dist2 == other.dist2 && self.index < other.index)
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact first and second nearest neighbours by a sweep over the points sorted
/// on the first coordinate. Ties go to the lowest index.
pub fn build_neighbors(s: &SampleSet) -> Result<NeighborTable> {
    let n = s.len();
    if n < 3 {
        return Err(Error::TooFewPoints { n, min: 3 });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.row(a)[0].total_cmp(&s.row(b)[0]).then(a.cmp(&b)));

    let pairs: Vec<(Candidate, Candidate)> = (0..n)
        .into_par_iter()
        .map(|p| {
            let i = order[p];
            let xi = s.row(i);
            let mut best = [Candidate::NONE; 2];
            let offer = |best: &mut [Candidate; 2], j: usize| {
                let c = Candidate {
                    dist2: dist2(xi, s.row(j)),
                    index: j,
                };
                if c.better_than(&best[0]) {
                    best[1] = best[0];
                    best[0] = c;
                } else if c.better_than(&best[1]) {
                    best[1] = c;
                }
            };
            let mut left = p;
            let mut right = p + 1;
            loop {
                let bound = best[1].dist2;
                let left_gap = (left > 0).then(|| {
                    let g = xi[0] - s.row(order[left - 1])[0];
                    g * g
                });
                let right_gap = (right < n).then(|| {
                    let g = s.row(order[right])[0] - xi[0];
                    g * g
                });
                let go_left = left_gap.is_some_and(|g| g <= bound);
                let go_right = right_gap.is_some_and(|g| g <= bound);
                if !go_left && !go_right {
                    break;
                }
                if go_left {
                    left -= 1;
                    offer(&mut best, order[left]);
                }
                if go_right {
                    offer(&mut best, order[right]);
                    right += 1;
                }
            }
            (best[0], best[1])
        })
        .collect();

    let mut nn1_index = vec![0; n];
    let mut nn1_dist = vec![0.0; n];
    let mut nn2_index = vec![0; n];
    let mut nn2_dist = vec![0.0; n];
    for (p, (b1, b2)) in pairs.into_iter().enumerate() {
        let i = order[p];
        nn1_index[i] = b1.index;
        nn1_dist[i] = b1.dist2.sqrt();
        nn2_index[i] = b2.index;
        nn2_dist[i] = b2.dist2.sqrt();
    }
    Ok(NeighborTable::assemble(
        s.dim(),
        nn1_index,
        nn1_dist,
        nn2_index,
        nn2_dist,
    ))
}

impl NeighborTable {
    fn assemble(
        d: usize,
        nn1_index: Vec<usize>,
        nn1_dist: Vec<f64>,
        nn2_index: Vec<usize>,
        nn2_dist: Vec<f64>,
    ) -> Self {
        let n = nn1_index.len();
        let volume: Vec<f64> = nn1_dist.iter().map(|&r| ball_volume(d, r)).collect();
        let weight = volume.iter().map(|&v| nn_weight(v, n)).collect();
        let mut reverse_nn = vec![Vec::new(); n];
        for (i, &j) in nn1_index.iter().enumerate() {
            reverse_nn[j].push(i);
        }
        let zero_volume = volume.iter().filter(|&&v| v == 0.0).count();
        if zero_volume > 0 {
            log::warn!("{zero_volume} duplicated observation(s) have zero nearest-neighbour volume");
        }
        NeighborTable {
            d,
            nn1_index,
            nn1_dist,
            nn2_index,
            nn2_dist,
            volume,
            weight,
            reverse_nn,
            zero_volume,
        }
    }

    pub fn len(&self) -> usize {
        self.nn1_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nn1_index.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn nn1_index(&self) -> &[usize] {
        &self.nn1_index
    }

    pub fn nn1_dist(&self) -> &[f64] {
        &self.nn1_dist
    }

    pub fn nn2_index(&self) -> &[usize] {
        &self.nn2_index
    }

    pub fn nn2_dist(&self) -> &[f64] {
        &self.nn2_dist
    }

    pub fn volume(&self) -> &[f64] {
        &self.volume
    }

    /// `W_i = 2 sqrt(V_i / (pi n))`.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn reverse_nn(&self, i: usize) -> &[usize] {
        &self.reverse_nn[i]
    }

    /// Number of observations whose nearest neighbour is a duplicate.
    pub fn zero_volume_count(&self) -> usize {
        self.zero_volume
    }

    /// Neighbour statistics of the sample with observation `i` removed, indexed
    /// like the full sample. Points whose nearest neighbour was `i` fall back to
    /// their second nearest neighbour.
    pub fn loo_view(&self, i: usize) -> Result<LooView> {
        let n = self.len();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        let mut nn1_index = self.nn1_index.clone();
        let mut radius = self.nn1_dist.clone();
        let mut volume = self.volume.clone();
        for &k in &self.reverse_nn[i] {
            nn1_index[k] = self.nn2_index[k];
            radius[k] = self.nn2_dist[k];
            volume[k] = ball_volume(self.d, radius[k]);
        }
        nn1_index[i] = usize::MAX;
        radius[i] = f64::NAN;
        volume[i] = f64::NAN;
        let weight = volume.iter().map(|&v| nn_weight(v, n - 1)).collect();
        Ok(LooView {
            removed: i,
            nn1_index,
            radius,
            volume,
            weight,
            changed: self.reverse_nn[i].clone(),
        })
    }
}

fn nn_weight(volume: f64, n: usize) -> f64 {
    2.0 * (volume / (std::f64::consts::PI * n as f64)).sqrt()
}

/// Leave-one-out neighbour statistics. The removed entry holds `usize::MAX` / NaN.
#[derive(Debug, Clone)]
pub struct LooView {
    pub removed: usize,
    pub nn1_index: Vec<usize>,
    pub radius: Vec<f64>,
    pub volume: Vec<f64>,
    pub weight: Vec<f64>,
    /// Points whose nearest neighbour changed.
    pub changed: Vec<usize>,
}
