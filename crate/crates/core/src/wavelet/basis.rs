use std::ops::RangeInclusive;

use super::table::{build_table, pow2, DyadicTable, Kind};
use super::{BasisIndex, WaveletFamily};
use crate::error::{Error, Result};

/// How many levels below the synthesis level a model may reach.
pub const LEVEL_HEADROOM: u32 = 6;

/// Default interpolation depth at the finest level of a model.
pub const DEFAULT_DEPTH: u32 = 10;

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h))
        {
            return Err(Error::InvalidParameter("bounding box must satisfy lo <= hi".into()));
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.width(a)).product()
    }

    pub fn padded(&self, pad: f64) -> Self {
        BoundingBox {
            lo: self.lo.iter().map(|v| v - pad).collect(),
            hi: self.hi.iter().map(|v| v + pad).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        BoundingBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    /// `None` when the boxes do not overlap with positive volume.
    pub fn intersection(&self, other: &Self) -> Option<Self> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        lo.iter().zip(&hi).all(|(l, h)| l < h).then_some(BoundingBox { lo, hi })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(a, &v)| v >= self.lo[a] && v <= self.hi[a])
    }
}

/// Translations `z` whose open dilated support `(z, z + S) / 2^j` meets `bbox`,
/// one inclusive range per coordinate.
pub fn active_translations(table: &DyadicTable, level: i32, bbox: &BoundingBox) -> Vec<RangeInclusive<i64>> {
    let s = table.support_len() as f64;
    let scale = pow2(level);
    (0..bbox.dim())
        .map(|a| {
            let lo = (scale * bbox.lo[a] - s).floor() as i64 + 1;
            let hi = (scale * bbox.hi[a]).ceil() as i64 - 1;
            lo..=hi
        })
        .collect()
}

/// A wavelet family with its dyadic table.
///
/// Models evaluate every level on one interpolation grid in `x`: a model whose
/// finest father level is `top` interpolates level `j` at depth
/// `depth + top - j`. All levels then share the breakpoints
/// `m 2^-(top + depth)`, and because the tabulated values satisfy the two-scale
/// relation exactly, so do the interpolants. The multi-level and single-level
/// forms of a model are the same function up to rounding.
#[derive(Debug, Clone)]
pub struct WaveletBasis {
    table: DyadicTable,
    depth: u32,
}

impl WaveletBasis {
    pub fn new(family: WaveletFamily, depth: u32) -> Result<Self> {
        let table = build_table(family, depth + LEVEL_HEADROOM)?;
        Ok(WaveletBasis { table, depth })
    }

    pub fn with_default_depth(family: WaveletFamily) -> Result<Self> {
        Self::new(family, DEFAULT_DEPTH)
    }

    pub fn family(&self) -> WaveletFamily {
        self.table.family()
    }

    /// Interpolation depth at the finest level of a model.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn table(&self) -> &DyadicTable {
        &self.table
    }

    pub fn support_len(&self) -> i64 {
        self.table.support_len()
    }

    /// Checks that `level` can be evaluated on the grid of synthesis level `top`.
    pub fn check_level(&self, top: i32, level: i32) -> Result<()> {
        let span = top as i64 - level as i64;
        if span < 0 || span > LEVEL_HEADROOM as i64 {
            return Err(Error::InvalidLevels(format!(
                "level {level} is outside the {LEVEL_HEADROOM}-level window below synthesis level {top}"
            )));
        }
        Ok(())
    }

    /// Nonzero-candidate values of `kind_{level, z}(x)` for all `z`, aligned to
    /// the grid of synthesis level `top`. Writes `(z, value)` pairs into `out`.
    pub fn window(&self, kind: Kind, level: i32, top: i32, x: f64, out: &mut Vec<(i64, f64)>) {
        out.clear();
        let depth = self.depth + (top - level) as u32;
        let s = self.support_len();
        let grid = pow2(top + self.depth as i32);
        let cell = pow2(depth as i32);
        let amp = pow2(level).sqrt();
        let base = (x * pow2(level)).floor() as i64;
        let scaled = x * grid;
        for z in base - s + 1..=base {
            let pos = scaled - z as f64 * cell;
            out.push((z, amp * self.table.sample(kind, depth, pos)));
        }
    }

    /// Tensor basis function evaluated on the grid of synthesis level `top`.
    pub fn eval_aligned(&self, idx: &BasisIndex, top: i32, x: &[f64]) -> Result<f64> {
        if x.len() != idx.dim() {
            return Err(Error::DimensionMismatch {
                expected: idx.dim(),
                found: x.len(),
            });
        }
        self.check_level(top, idx.level)?;
        let depth = self.depth + (top - idx.level) as u32;
        let grid = pow2(top + self.depth as i32);
        let cell = pow2(depth as i32);
        let amp = pow2(idx.level).sqrt();
        let mut prod = 1.0;
        for (axis, (&xa, &za)) in x.iter().zip(&idx.translation).enumerate() {
            let kind = if idx.is_mother(axis) {
                Kind::Mother
            } else {
                Kind::Father
            };
            prod *= amp * self.table.sample(kind, depth, xa * grid - za as f64 * cell);
            if prod == 0.0 {
                break;
            }
        }
        Ok(prod)
    }
}
