//! Estimation of the square root of a density from nearest-neighbour volumes.
//!
//! Every coefficient is a weighted sum `sum_i W_i b(X_i)` with
//! `W_i = 2 sqrt(V_i / (pi n))`. The fit computes father coefficients at the
//! synthesis level `J + 1` and moves down to `j0` with the family's filter
//! bank; on the aligned evaluation grid this is identical to summing each
//! level directly.

mod block;
mod json;
mod loo;

pub use block::CoefficientBlock;
pub use json::{ModelFile, Standardization};
pub use loo::{loo_coefficients, CoeffLooDelta, LooEngine, LooTable};

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{NeighborTable, SampleSet};
use crate::wavelet::{active_translations, BasisIndex, BoundingBox, Kind, WaveletBasis};

/// `(2 / sqrt(pi)) n^(-1/2) sum_i phi(X_i) sqrt(V_i)`, a consistent estimator of
/// the integral of `phi sqrt(f)`.
pub fn sqrt_functional<F>(s: &SampleSet, t: &NeighborTable, phi: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    s.rows()
        .zip(t.weight())
        .map(|(x, &w)| if w == 0.0 { 0.0 } else { w * phi(x) })
        .sum()
}

/// Coefficients of an estimate of `sqrt f`: father coefficients at `j0` and
/// mother coefficients at levels `j0..=J`. A model without mother levels is
/// the single-level form, with `j0 = J + 1`.
#[derive(Debug, Clone)]
pub struct SqrtDensityModel {
    basis: Arc<WaveletBasis>,
    dim: usize,
    coarse_level: i32,
    top_level: i32,
    blocks: Vec<CoefficientBlock>,
    offsets: Vec<usize>,
    coeff_norm: f64,
    normalized: bool,
}

fn fit_box(s: &SampleSet) -> BoundingBox {
    let bbox = s.bbox();
    let scale = bbox.lo.iter().chain(&bbox.hi).fold(1.0f64, |m, v| m.max(v.abs()));
    bbox.padded(1e-9 * scale)
}

fn check_inputs(s: &SampleSet, t: &NeighborTable) -> Result<()> {
    if s.len() < 3 {
        return Err(Error::TooFewPoints { n: s.len(), min: 3 });
    }
    if t.len() != s.len() || t.dim() != s.dim() {
        return Err(Error::InvalidParameter(
            "neighbour table was built for a different sample".into(),
        ));
    }
    Ok(())
}

/// Father-only fit at `level`: `alpha_z = sum_i W_i phi_{level,z}(X_i)`.
pub fn fit_single_level(
    s: &SampleSet,
    t: &NeighborTable,
    basis: &Arc<WaveletBasis>,
    level: i32,
) -> Result<SqrtDensityModel> {
    check_inputs(s, t)?;
    let block = father_block(s, t, basis, level)?;
    SqrtDensityModel::from_blocks(basis.clone(), s.dim(), level, level, vec![block], false)
}

fn father_block(s: &SampleSet, t: &NeighborTable, basis: &WaveletBasis, level: i32) -> Result<CoefficientBlock> {
    let ranges = active_translations(basis.table(), level, &fit_box(s));
    if ranges.iter().any(|r| r.is_empty()) {
        return Err(Error::EmptyTranslations);
    }
    let mut block = CoefficientBlock::zeros(level, 0, &ranges);
    let d = s.dim();
    let mut windows = vec![Vec::new(); d];
    for (x, &w) in s.rows().zip(t.weight()) {
        if w == 0.0 {
            continue;
        }
        for (a, win) in windows.iter_mut().enumerate() {
            basis.window(Kind::Father, level, level, x[a], win);
        }
        block.accumulate_tensor(&windows, w);
    }
    Ok(block)
}

/// Multi-level fit with father coefficients at `j0` and mothers at `j0..=j`.
pub fn fit(s: &SampleSet, t: &NeighborTable, basis: &Arc<WaveletBasis>, j0: i32, j: i32) -> Result<SqrtDensityModel> {
    check_inputs(s, t)?;
    if j < j0 {
        return Err(Error::InvalidLevels(format!("J = {j} is below j0 = {j0}")));
    }
    let top = j + 1;
    basis.check_level(top, j0)?;
    let bbox = fit_box(s);
    let mut father = father_block(s, t, basis, top)?;
    let h = basis.family().lowpass_filter().to_vec();
    let g = basis.family().highpass_filter();
    let d = s.dim();
    let mut mothers = Vec::new();
    for level in (j0..top).rev() {
        let ranges = active_translations(basis.table(), level, &bbox);
        let mut coarse = None;
        for q in 0..(1u32 << d) {
            let mut cur = father.clone();
            for (axis, range) in ranges.iter().enumerate() {
                let taps = if (q >> axis) & 1 == 1 { &g } else { &h };
                cur = cur.filter_axis(axis, taps, range.clone());
            }
            cur.set_label(level, q);
            if q == 0 {
                coarse = Some(cur);
            } else {
                mothers.push(cur);
            }
        }
        father = coarse.expect("q = 0 always produced");
    }
    mothers.sort_by_key(|b| (b.level(), b.kind()));
    let mut blocks = vec![father];
    blocks.extend(mothers);
    let model = SqrtDensityModel::from_blocks(basis.clone(), d, j0, top, blocks, false)?;
    clear_unsupported(model, s, t)
}

/// Sets to exactly zero every coefficient whose basis function vanishes at all
/// weighted observations; the filter bank leaves rounding residue there.
fn clear_unsupported(model: SqrtDensityModel, s: &SampleSet, t: &NeighborTable) -> Result<SqrtDensityModel> {
    let hits: Vec<Vec<u32>> = s
        .as_flat()
        .par_chunks_exact(s.dim())
        .zip(t.weight().par_iter())
        .map_init(Scratch::default, |scratch, (x, &w)| {
            if w == 0.0 {
                return Vec::new();
            }
            model.incidence(x, scratch).into_iter().map(|(id, _)| id).collect()
        })
        .collect();
    let mut used = vec![false; model.num_coefficients()];
    for id in hits.into_iter().flatten() {
        used[id as usize] = true;
    }
    let values: Vec<f64> = model
        .values_flat()
        .into_iter()
        .zip(used)
        .map(|(v, u)| if u { v } else { 0.0 })
        .collect();
    model.with_values(&values)
}

impl SqrtDensityModel {
    fn from_blocks(
        basis: Arc<WaveletBasis>,
        dim: usize,
        coarse_level: i32,
        top_level: i32,
        blocks: Vec<CoefficientBlock>,
        normalized: bool,
    ) -> Result<Self> {
        for b in &blocks {
            basis.check_level(top_level, b.level())?;
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.dim(),
                });
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in &blocks {
            acc += b.len();
            offsets.push(acc);
        }
        let mut m = SqrtDensityModel {
            basis,
            dim,
            coarse_level,
            top_level,
            blocks,
            offsets,
            coeff_norm: 0.0,
            normalized,
        };
        m.coeff_norm = m.sum_squares().sqrt();
        Ok(m)
    }

    /// Builds a model from explicit coefficients. `j < j0` denotes the
    /// single-level form with father coefficients at `j0` only.
    pub fn from_coefficients(
        basis: Arc<WaveletBasis>,
        dim: usize,
        j0: i32,
        j: i32,
        normalized: bool,
        entries: &[(BasisIndex, f64)],
    ) -> Result<Self> {
        let top = if j < j0 { j0 } else { j + 1 };
        if j < j0 - 1 {
            return Err(Error::InvalidLevels(format!("J = {j} below j0 - 1 = {}", j0 - 1)));
        }
        let mut labels = vec![(j0, 0u32)];
        for level in j0..top {
            for q in 1..(1u32 << dim) {
                labels.push((level, q));
            }
        }
        let mut blocks = Vec::with_capacity(labels.len());
        for &(level, q) in &labels {
            let members: Vec<&(BasisIndex, f64)> = entries
                .iter()
                .filter(|(idx, _)| idx.level == level && idx.kind == q)
                .collect();
            let ranges: Vec<_> = (0..dim)
                .map(|a| {
                    let lo = members.iter().map(|(i, _)| i.translation[a]).min().unwrap_or(0);
                    let hi = members.iter().map(|(i, _)| i.translation[a]).max().unwrap_or(-1);
                    lo..=hi
                })
                .collect();
            let mut block = CoefficientBlock::zeros(level, q, &ranges);
            for (idx, v) in members {
                if idx.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: idx.dim(),
                    });
                }
                let k = block.flat_index(&idx.translation).expect("range covers members");
                block.values_mut()[k] = *v;
            }
            blocks.push(block);
        }
        let accounted: usize = blocks
            .iter()
            .map(|b| b.values().iter().filter(|v| **v != 0.0).count())
            .sum();
        let provided = entries.iter().filter(|(_, v)| *v != 0.0).count();
        if accounted != provided {
            return Err(Error::InvalidParameter(format!(
                "{} coefficient(s) fall outside levels j0..=J or use invalid types",
                provided - accounted
            )));
        }
        Self::from_blocks(basis, dim, j0, top, blocks, normalized)
    }

    pub fn basis(&self) -> &Arc<WaveletBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `j0`.
    pub fn coarse_level(&self) -> i32 {
        self.coarse_level
    }

    /// `J`, the finest mother level (`top_level - 1`).
    pub fn finest_level(&self) -> i32 {
        self.top_level - 1
    }

    /// Level of the equivalent father-only expansion, `J + 1`.
    pub fn top_level(&self) -> i32 {
        self.top_level
    }

    pub fn is_single_level(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn coeff_norm(&self) -> f64 {
        self.coeff_norm
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn blocks(&self) -> &[CoefficientBlock] {
        &self.blocks
    }

    /// Total number of stored coefficients, zeros included.
    pub fn num_coefficients(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Number of nonzero coefficients.
    pub fn kept_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.values().iter().filter(|v| **v != 0.0).count())
            .sum()
    }

    /// Range of global coefficient ids held by the father block.
    pub fn alpha_ids(&self) -> std::ops::Range<usize> {
        0..self.offsets[1]
    }

    /// Range of global ids of the mother coefficients.
    pub fn beta_ids(&self) -> std::ops::Range<usize> {
        self.offsets[1]..self.num_coefficients()
    }

    fn locate(&self, id: usize) -> (usize, usize) {
        let b = self.offsets.partition_point(|&o| o <= id) - 1;
        (b, id - self.offsets[b])
    }

    pub fn value(&self, id: usize) -> f64 {
        let (b, k) = self.locate(id);
        self.blocks[b].values()[k]
    }

    pub fn index_of(&self, id: usize) -> BasisIndex {
        let (b, k) = self.locate(id);
        let blk = &self.blocks[b];
        BasisIndex {
            level: blk.level(),
            translation: blk.translation(k),
            kind: blk.kind(),
        }
    }

    /// Global id of a basis index, if the model stores it.
    pub fn id_of(&self, idx: &BasisIndex) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.level() == idx.level && b.kind() == idx.kind)
            .and_then(|b| self.blocks[b].flat_index(&idx.translation).map(|k| self.offsets[b] + k))
    }

    /// All stored coefficients in id order, zeros included.
    pub fn coefficients(&self) -> impl Iterator<Item = (BasisIndex, f64)> + '_ {
        (0..self.num_coefficients()).map(move |id| (self.index_of(id), self.value(id)))
    }

    pub fn values_flat(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.values().iter().copied()).collect()
    }

    fn sum_squares(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.values().iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// Same layout with new coefficient values (id order).
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.num_coefficients() {
            return Err(Error::DimensionMismatch {
                expected: self.num_coefficients(),
                found: values.len(),
            });
        }
        let mut blocks = self.blocks.clone();
        for (b, blk) in blocks.iter_mut().enumerate() {
            blk.values_mut()
                .copy_from_slice(&values[self.offsets[b]..self.offsets[b + 1]]);
        }
        Self::from_blocks(
            self.basis.clone(),
            self.dim,
            self.coarse_level,
            self.top_level,
            blocks,
            false,
        )
    }

    /// Divides every coefficient by the coefficient norm so that the squared
    /// model integrates to one.
    pub fn normalize(&self) -> Result<Self> {
        if self.normalized {
            return Ok(self.clone());
        }
        if !(self.coeff_norm > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let inv = self.coeff_norm;
        let values: Vec<f64> = self.values_flat().iter().map(|v| v / inv).collect();
        let mut m = self.with_values(&values)?;
        m.normalized = true;
        Ok(m)
    }

    /// Calls `f(id, b_id(x))` for every stored basis function whose support
    /// may contain `x`.
    pub fn for_each_term<F: FnMut(usize, f64)>(&self, x: &[f64], scratch: &mut Scratch, mut f: F) {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        scratch.prepare(d);
        let mut current_level = None;
        for (b, blk) in self.blocks.iter().enumerate() {
            if current_level != Some(blk.level()) {
                current_level = Some(blk.level());
                for a in 0..d {
                    self.basis
                        .window(Kind::Father, blk.level(), self.top_level, x[a], &mut scratch.father[a]);
                    self.basis
                        .window(Kind::Mother, blk.level(), self.top_level, x[a], &mut scratch.mother[a]);
                }
            }
            let offset = self.offsets[b];
            blk.for_each_tensor(
                |a| {
                    if (blk.kind() >> a) & 1 == 1 {
                        &scratch.mother[a]
                    } else {
                        &scratch.father[a]
                    }
                },
                &mut scratch.local,
                |k, v| f(offset + k, v),
            );
        }
    }

    /// Nonzero-candidate basis values at `x` as `(id, value)` pairs, sorted by id.
    pub fn incidence(&self, x: &[f64], scratch: &mut Scratch) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        self.for_each_term(x, scratch, |id, v| {
            if v != 0.0 {
                out.push((id as u32, v));
            }
        });
        out
    }

    /// Value of the estimate of `sqrt f` at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut scratch = Scratch::default();
        Ok(self.evaluate_with(x, &mut scratch))
    }

    pub fn evaluate_with(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        let mut acc = 0.0;
        self.for_each_term(x, scratch, |id, v| {
            let (b, k) = self.locate_fast(id);
            acc += self.blocks[b].values()[k] * v;
        });
        acc
    }

    #[inline]
    fn locate_fast(&self, id: usize) -> (usize, usize) {
        let mut b = 0;
        while self.offsets[b + 1] <= id {
            b += 1;
        }
        (b, id - self.offsets[b])
    }

    /// Density value `evaluate(x)^2`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x).map(|v| v * v)
    }

    /// Evaluates many row-major points in parallel.
    pub fn evaluate_batch(&self, points: &[f64]) -> Result<Vec<f64>> {
        if !points.len().is_multiple_of(self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: points.len() % self.dim,
            });
        }
        Ok(points
            .par_chunks_exact(self.dim)
            .map_init(Scratch::default, |scratch, x| self.evaluate_with(x, scratch))
            .collect())
    }

    /// The same function as a father-only expansion at `top_level`.
    pub fn to_single_level(&self) -> Result<Self> {
        if self.is_single_level() {
            return Ok(self.clone());
        }
        let h = self.basis.family().lowpass_filter().to_vec();
        let g = self.basis.family().highpass_filter();
        let s = self.basis.support_len();
        let d = self.dim;
        let mut father = self.blocks[0].clone();
        for level in self.coarse_level..self.top_level {
            let members: Vec<&CoefficientBlock> = std::iter::once(&father)
                .chain(self.blocks[1..].iter().filter(|b| b.level() == level))
                .filter(|b| !b.is_empty())
                .collect();
            let ranges: Vec<_> = (0..d)
                .map(|a| {
                    let lo = members.iter().map(|b| 2 * b.axis_range(a).0).min().unwrap_or(0);
                    let hi = members.iter().map(|b| 2 * b.axis_range(a).1 + s).max().unwrap_or(-1);
                    lo..=hi
                })
                .collect();
            let mut fine = CoefficientBlock::zeros(level + 1, 0, &ranges);
            for blk in members {
                let mut cur = blk.clone();
                for (axis, range) in ranges.iter().enumerate() {
                    let taps = if (blk.kind() >> axis) & 1 == 1 { &g } else { &h };
                    cur = cur.synthesize_axis(axis, taps, range.clone());
                }
                fine.add_block(&cur);
            }
            father = fine;
        }
        let mut m = Self::from_blocks(
            self.basis.clone(),
            d,
            self.top_level,
            self.top_level,
            vec![father],
            self.normalized,
        )?;
        m.coeff_norm = self.coeff_norm;
        Ok(m)
    }

    /// Smallest box outside of which the model vanishes.
    pub fn support_box(&self) -> BoundingBox {
        let s = self.basis.support_len() as f64;
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for blk in &self.blocks {
            if blk.is_empty() {
                continue;
            }
            let scale = 2f64.powi(-blk.level());
            for a in 0..self.dim {
                let (zlo, zhi) = blk.axis_range(a);
                lo[a] = lo[a].min(zlo as f64 * scale);
                hi[a] = hi[a].max((zhi as f64 + s) * scale);
            }
        }
        if lo.iter().any(|v| !v.is_finite()) {
            return BoundingBox {
                lo: vec![0.0; self.dim],
                hi: vec![0.0; self.dim],
            };
        }
        BoundingBox { lo, hi }
    }
}

/// Reusable per-thread buffers for model evaluation.
#[derive(Debug, Default)]
pub struct Scratch {
    father: Vec<Vec<(i64, f64)>>,
    mother: Vec<Vec<(i64, f64)>>,
    local: Vec<Vec<(usize, f64)>>,
}

impl Scratch {
    fn prepare(&mut self, d: usize) {
        if self.father.len() != d {
            self.father = vec![Vec::new(); d];
            self.mother = vec![Vec::new(); d];
            self.local = vec![Vec::new(); d];
        }
    }
}
