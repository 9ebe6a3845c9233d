//! Leave-one-out coefficients by sparse update.
//!
//! Removing observation `i` changes the weight of `i` itself and of the points
//! whose nearest neighbour was `i`; every other weight only picks up the
//! factor `s = sqrt(n / (n - 1))`. Writing `c_n = 2 / sqrt(pi n)`,
//!
//! `coef^(-i)_b = s (coef_b + Delta_b)`,
//! `Delta_b = -c_n b(X_i) sqrt(V_i) + c_n sum_r b(X_r) (sqrt(V'_r) - sqrt(V_r))`.

use rayon::prelude::*;

use super::{Scratch, SqrtDensityModel};
use crate::error::{Error, Result};
use crate::geometry::{ball_volume, NeighborTable, SampleSet};

/// Raw sparse change `Delta` of the coefficients when one point is removed.
#[derive(Debug, Clone)]
pub struct CoeffLooDelta {
    pub removed: usize,
    /// `sqrt(n / (n - 1))`.
    pub scale: f64,
    /// `(id, Delta_id)` sorted by id.
    pub entries: Vec<(usize, f64)>,
}

impl CoeffLooDelta {
    /// Dense leave-one-out coefficients in id order.
    pub fn loo_values(&self, model: &SqrtDensityModel) -> Vec<f64> {
        let mut v = model.values_flat();
        for &(id, d) in &self.entries {
            v[id] += d;
        }
        v.iter_mut().for_each(|x| *x *= self.scale);
        v
    }

    /// Leave-one-out value of coefficient `id`.
    pub fn value(&self, model: &SqrtDensityModel, id: usize) -> f64 {
        let d = self
            .entries
            .binary_search_by_key(&id, |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0);
        self.scale * (model.value(id) + d)
    }
}

fn loo_scale(n: usize) -> f64 {
    (n as f64 / (n as f64 - 1.0)).sqrt()
}

fn weight_shift(t: &NeighborTable, r: usize) -> f64 {
    let n = t.len() as f64;
    let cn = 2.0 / (std::f64::consts::PI * n).sqrt();
    cn * ball_volume(t.dim(), t.nn2_dist()[r]).sqrt() - t.weight()[r]
}

fn merge_delta(parts: impl Iterator<Item = (f64, Vec<(u32, f64)>)>) -> Vec<(u32, f64)> {
    let mut all: Vec<(u32, f64)> = Vec::new();
    for (w, inc) in parts {
        if w == 0.0 {
            continue;
        }
        all.extend(inc.into_iter().map(|(id, v)| (id, w * v)));
    }
    all.sort_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(all.len());
    for (id, v) in all {
        match out.last_mut() {
            Some(last) if last.0 == id => last.1 += v,
            _ => out.push((id, v)),
        }
    }
    out
}

/// Leave-one-out coefficients of `model` without observation `i`.
pub fn loo_coefficients(s: &SampleSet, t: &NeighborTable, model: &SqrtDensityModel, i: usize) -> Result<CoeffLooDelta> {
    let n = s.len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    let mut scratch = Scratch::default();
    let own = (-t.weight()[i], model.incidence(s.row(i), &mut scratch));
    let mut parts = vec![own];
    for &r in t.reverse_nn(i) {
        parts.push((weight_shift(t, r), model.incidence(s.row(r), &mut scratch)));
    }
    let entries = merge_delta(parts.into_iter())
        .into_iter()
        .map(|(id, d)| (id as usize, d))
        .collect();
    Ok(CoeffLooDelta {
        removed: i,
        scale: loo_scale(n),
        entries,
    })
}

/// Precomputed basis incidence of every observation for one model layout,
/// used to evaluate all leave-one-out fits at their held-out points.
pub struct LooEngine<'a> {
    model: &'a SqrtDensityModel,
    weights: &'a [f64],
    shift: Vec<f64>,
    reverse: Vec<&'a [usize]>,
    incidence: Vec<Vec<(u32, f64)>>,
    scale: f64,
}

impl<'a> LooEngine<'a> {
    pub fn new(s: &SampleSet, t: &'a NeighborTable, model: &'a SqrtDensityModel) -> Result<Self> {
        if s.len() != t.len() || s.dim() != model.dim() {
            return Err(Error::InvalidParameter(
                "sample, neighbour table and model disagree".into(),
            ));
        }
        let incidence = s
            .as_flat()
            .par_chunks_exact(s.dim())
            .map_init(Scratch::default, |scratch, x| model.incidence(x, scratch))
            .collect();
        Ok(LooEngine {
            model,
            weights: t.weight(),
            shift: (0..t.len()).map(|r| weight_shift(t, r)).collect(),
            reverse: (0..t.len()).map(|i| t.reverse_nn(i)).collect(),
            incidence,
            scale: loo_scale(t.len()),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn model(&self) -> &SqrtDensityModel {
        self.model
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `W_i = c_n sqrt(V_i)` of the full sample.
    pub fn weights(&self) -> &[f64] {
        self.weights
    }

    /// Basis values at `X_i`, sorted by id.
    pub fn incidence(&self, i: usize) -> &[(u32, f64)] {
        &self.incidence[i]
    }

    /// Raw `Delta` for removing `i`, sorted by id.
    pub fn delta(&self, i: usize) -> Vec<(u32, f64)> {
        let own = std::iter::once((-self.weights[i], self.incidence[i].clone()));
        let others = self.reverse[i]
            .iter()
            .map(|&r| (self.shift[r], self.incidence[r].clone()));
        merge_delta(own.chain(others))
    }

    /// For coefficient values `c` with squared norm `sumsq`, returns
    /// `(v, m)` such that the leave-one-out fit without `i` evaluated at `X_i`
    /// is `s v` and its squared coefficient norm is `s^2 m`.
    pub fn held_out(&self, i: usize, c: &[f64], sumsq: f64) -> (f64, f64) {
        let delta = self.delta(i);
        let inc = &self.incidence[i];
        let mut v = 0.0;
        let mut k = 0;
        for &(id, psi) in inc {
            while k < delta.len() && delta[k].0 < id {
                k += 1;
            }
            let d = if k < delta.len() && delta[k].0 == id {
                delta[k].1
            } else {
                0.0
            };
            v += (c[id as usize] + d) * psi;
        }
        let m = sumsq
            + delta
                .iter()
                .map(|&(id, d)| 2.0 * c[id as usize] * d + d * d)
                .sum::<f64>();
        (v, m)
    }

    /// Per-coefficient view of all leave-one-out changes.
    pub fn table(&self) -> LooTable {
        let per_point: Vec<Vec<(u32, f64, f64)>> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let delta = self.delta(i);
                let inc = &self.incidence[i];
                let mut out = Vec::with_capacity(delta.len() + inc.len());
                let (mut a, mut b) = (0, 0);
                while a < delta.len() || b < inc.len() {
                    let da = delta.get(a).map_or(u32::MAX, |e| e.0);
                    let ib = inc.get(b).map_or(u32::MAX, |e| e.0);
                    if da == ib {
                        out.push((da, delta[a].1, inc[b].1));
                        a += 1;
                        b += 1;
                    } else if da < ib {
                        out.push((da, delta[a].1, 0.0));
                        a += 1;
                    } else {
                        out.push((ib, 0.0, inc[b].1));
                        b += 1;
                    }
                }
                out
            })
            .collect();
        let ncoef = self.model.num_coefficients();
        let mut start = vec![0usize; ncoef + 1];
        for list in &per_point {
            for e in list {
                start[e.0 as usize + 1] += 1;
            }
        }
        for k in 0..ncoef {
            start[k + 1] += start[k];
        }
        let total = start[ncoef];
        let mut fill = start.clone();
        let mut point = vec![0u32; total];
        let mut delta = vec![0.0; total];
        let mut psi = vec![0.0; total];
        for (i, list) in per_point.iter().enumerate() {
            for &(id, d, p) in list {
                let slot = fill[id as usize];
                fill[id as usize] += 1;
                point[slot] = i as u32;
                delta[slot] = d;
                psi[slot] = p;
            }
        }
        LooTable {
            start,
            point,
            delta,
            psi,
        }
    }
}

/// For every coefficient `b`, the observations `i` at which either
/// `Delta_b^(-i)` or `b(X_i)` is nonzero, in increasing `i`.
#[derive(Debug, Clone)]
pub struct LooTable {
    start: Vec<usize>,
    point: Vec<u32>,
    delta: Vec<f64>,
    psi: Vec<f64>,
}

/// One entry of a [`LooTable`] row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LooEntry {
    pub point: usize,
    pub delta: f64,
    pub basis_value: f64,
}

impl LooTable {
    pub fn num_coefficients(&self) -> usize {
        self.start.len() - 1
    }

    pub fn row(&self, id: usize) -> impl Iterator<Item = LooEntry> + '_ {
        (self.start[id]..self.start[id + 1]).map(move |k| LooEntry {
            point: self.point[k] as usize,
            delta: self.delta[k],
            basis_value: self.psi[k],
        })
    }

    pub fn row_len(&self, id: usize) -> usize {
        self.start[id + 1] - self.start[id]
    }
}
