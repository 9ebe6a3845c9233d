use super::{BasisIndex, WaveletFamily};
use crate::error::{Error, Result};

/// Upper bound on the number of grid points per tabulated function.
pub const MAX_TABLE_ENTRIES: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Father,
    Mother,
}

/// Father and mother values on the grid `{m 2^-depth : 0 <= m <= S 2^depth}`.
///
/// Values at grid points are exact up to rounding: integer values come from
/// the eigenvector of the two-scale operator, every finer point from one
/// application of the refinement equation. A table of depth `k` therefore
/// contains the table of every depth `k' < k` at stride `2^(k - k')`.
#[derive(Debug, Clone)]
pub struct DyadicTable {
    family: WaveletFamily,
    depth: u32,
    father: Vec<f64>,
    mother: Vec<f64>,
}

pub fn build_table(family: WaveletFamily, depth: u32) -> Result<DyadicTable> {
    if depth == 0 || depth > 40 {
        return Err(Error::InvalidParameter(format!(
            "table depth must be in 1..=40, got {depth}"
        )));
    }
    let support = family.support_len() as usize;
    let scale = 1usize << depth;
    let entries = support * scale + 1;
    if entries > MAX_TABLE_ENTRIES {
        return Err(Error::TableTooLarge {
            entries,
            cap: MAX_TABLE_ENTRIES,
        });
    }

    if family == WaveletFamily::Haar {
        let half = scale / 2;
        let father = (0..entries).map(|i| if i < scale { 1.0 } else { 0.0 }).collect();
        let mother = (0..entries)
            .map(|i| match i {
                i if i < half => 1.0,
                i if i < scale => -1.0,
                _ => 0.0,
            })
            .collect();
        return Ok(DyadicTable {
            family,
            depth,
            father,
            mother,
        });
    }

    let h = family.lowpass_filter();
    let g = family.highpass_filter();
    let sqrt2 = std::f64::consts::SQRT_2;

    let mut father = vec![0.0; entries];
    for (m, v) in integer_values(h)?.into_iter().enumerate() {
        father[m * scale] = v;
    }

    let last = (entries - 1) as i64;
    let refine = |table: &[f64], i: usize, taps: &[f64]| -> f64 {
        let twice = 2 * i as i64;
        let acc: f64 = taps
            .iter()
            .enumerate()
            .filter_map(|(k, &t)| {
                let idx = twice - (k * scale) as i64;
                (0..=last).contains(&idx).then(|| t * table[idx as usize])
            })
            .sum();
        sqrt2 * acc
    };

    for r in 1..=depth {
        let stride = 1usize << (depth - r);
        let mut i = stride;
        while i < entries {
            father[i] = refine(&father, i, h);
            i += 2 * stride;
        }
    }

    let mother = (0..entries).map(|i| refine(&father, i, &g)).collect();

    Ok(DyadicTable {
        family,
        depth,
        father,
        mother,
    })
}

/// Values of the father wavelet at the integers `0..=S`, normalized to sum to one.
fn integer_values(h: &[f64]) -> Result<Vec<f64>> {
    let support = h.len() - 1;
    // Interior unknowns phi(1..S-1); phi(0) = phi(S) = 0 for every supported
    // family beyond Haar.
    let m = support - 1;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut a = vec![vec![0.0; m + 1]; m];
    for row in 0..m {
        let x = row + 1;
        for col in 0..m {
            let p = col + 1;
            let k = 2 * x as i64 - p as i64;
            if (0..=support as i64).contains(&k) {
                a[row][col] = sqrt2 * h[k as usize];
            }
        }
        a[row][row] -= 1.0;
    }
    // The system is rank deficient by one; replace the last row with sum = 1.
    for col in 0..m {
        a[m - 1][col] = 1.0;
    }
    a[m - 1][m] = 1.0;

    let v = solve_augmented(a).ok_or_else(|| Error::Numeric("singular two-scale eigen-system".into()))?;
    let mut out = Vec::with_capacity(support + 1);
    out.push(0.0);
    out.extend(v);
    out.push(0.0);
    Ok(out)
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` matrix.
fn solve_augmented(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..=m {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - tail) / a[row][row];
    }
    Some(x)
}

impl DyadicTable {
    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn support_len(&self) -> i64 {
        self.family.support_len()
    }

    pub fn values(&self, kind: Kind) -> &[f64] {
        match kind {
            Kind::Father => &self.father,
            Kind::Mother => &self.mother,
        }
    }

    /// Tabulated value at grid index `m` of depth `depth` (`m` in units of `2^-depth`).
    pub fn grid_value(&self, kind: Kind, depth: u32, m: i64) -> f64 {
        debug_assert!(depth <= self.depth);
        let stride = 1i64 << (self.depth - depth);
        let idx = m * stride;
        let values = self.values(kind);
        if idx < 0 || idx as usize >= values.len() {
            0.0
        } else {
            values[idx as usize]
        }
    }

    /// Interpolated value at `pos`, measured in grid units of depth `depth`.
    ///
    /// Haar is evaluated as a right-continuous step function (its closed form);
    /// every other family is linearly interpolated.
    pub(crate) fn sample(&self, kind: Kind, depth: u32, pos: f64) -> f64 {
        let m = pos.floor();
        let cells = (self.support_len() as f64) * (1u64 << depth) as f64;
        if !(0.0..cells).contains(&m) {
            return 0.0;
        }
        let stride = 1usize << (self.depth - depth);
        let idx = m as usize * stride;
        let values = self.values(kind);
        if self.family == WaveletFamily::Haar {
            return values[idx];
        }
        let frac = pos - m;
        let lo = values[idx];
        let hi = values[idx + stride];
        lo + frac * (hi - lo)
    }

    /// Value of the undilated function at `u`, interpolated at full depth.
    pub fn value(&self, kind: Kind, u: f64) -> f64 {
        self.sample(kind, self.depth, u * pow2(self.depth as i32))
    }

    /// `2^(j/2) f(2^j x - z)` for `f` the father or mother, at full table depth.
    pub fn eval_1d(&self, kind: Kind, level: i32, translation: i64, x: f64) -> f64 {
        let depth = self.depth as i32;
        let pos = x * pow2(level + depth) - translation as f64 * pow2(depth);
        pow2(level).sqrt() * self.sample(kind, self.depth, pos)
    }

    /// Tensor-product basis function; coordinate `a` uses the mother iff bit `a` of `q` is set.
    pub fn eval_tensor(&self, idx: &BasisIndex, x: &[f64]) -> Result<f64> {
        if x.len() != idx.dim() {
            return Err(Error::DimensionMismatch {
                expected: idx.dim(),
                found: x.len(),
            });
        }
        let mut prod = 1.0;
        for (axis, (&xa, &za)) in x.iter().zip(&idx.translation).enumerate() {
            let kind = if idx.is_mother(axis) {
                Kind::Mother
            } else {
                Kind::Father
            };
            prod *= self.eval_1d(kind, idx.level, za, xa);
            if prod == 0.0 {
                return Ok(0.0);
            }
        }
        Ok(prod)
    }
}

#[inline]
pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_table_is_exact() {
        let t = build_table(WaveletFamily::Haar, 4).unwrap();
        assert_eq!(t.values(Kind::Father).len(), 17);
        for (i, &v) in t.values(Kind::Father).iter().enumerate() {
            assert_eq!(v, if i < 16 { 1.0 } else { 0.0 });
        }
        for (i, &v) in t.values(Kind::Mother).iter().enumerate() {
            let expected = match i {
                0..=7 => 1.0,
                8..=15 => -1.0,
                _ => 0.0,
            };
            assert_eq!(v, expected, "index {i}");
        }
        for u in [0.0, 0.1, 0.49, 0.5, 0.99] {
            assert_eq!(t.value(Kind::Father, u), 1.0);
            assert_eq!(t.value(Kind::Mother, u), if u < 0.5 { 1.0 } else { -1.0 });
        }
        assert_eq!(t.value(Kind::Father, 1.0), 0.0);
        assert_eq!(t.value(Kind::Father, -0.01), 0.0);
    }

    #[test]
    fn table_length_matches_support() {
        for depth in 1..8 {
            let t = build_table(WaveletFamily::Daubechies(4), depth).unwrap();
            assert_eq!(t.values(Kind::Father).len(), 7 * (1 << depth) + 1);
        }
    }

    #[test]
    fn refinement_is_consistent_across_depths() {
        for family in [WaveletFamily::Daubechies(2), WaveletFamily::Symlet(5)] {
            let coarse = build_table(family, 7).unwrap();
            let fine = build_table(family, 8).unwrap();
            for kind in [Kind::Father, Kind::Mother] {
                for (m, &v) in coarse.values(kind).iter().enumerate() {
                    let w = fine.values(kind)[2 * m];
                    assert!((v - w).abs() < 1e-12, "{family} {kind:?} {m}");
                }
            }
        }
    }

    #[test]
    fn db2_integer_values_match_closed_form() {
        // phi(1) = (1 + sqrt 3) / 2, phi(2) = (1 - sqrt 3) / 2.
        let t = build_table(WaveletFamily::Daubechies(2), 3).unwrap();
        let s3 = 3f64.sqrt();
        assert!((t.value(Kind::Father, 1.0) - (1.0 + s3) / 2.0).abs() < 1e-12);
        assert!((t.value(Kind::Father, 2.0) - (1.0 - s3) / 2.0).abs() < 1e-12);
        assert_eq!(t.value(Kind::Father, 0.0), 0.0);
        assert_eq!(t.value(Kind::Father, 3.0), 0.0);
    }

    #[test]
    fn rejects_bad_depth_and_oversized_tables() {
        assert!(build_table(WaveletFamily::Haar, 0).is_err());
        assert!(matches!(
            build_table(WaveletFamily::Daubechies(10), 24),
            Err(Error::TableTooLarge { .. })
        ));
    }

    #[test]
    fn eval_1d_examples() {
        let haar = build_table(WaveletFamily::Haar, 4).unwrap();
        assert!((haar.eval_1d(Kind::Father, 1, 0, 0.3) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(haar.eval_1d(Kind::Mother, 0, 0, 0.75), -1.0);
        let db2 = build_table(WaveletFamily::Daubechies(2), 10).unwrap();
        assert_eq!(db2.eval_1d(Kind::Father, 0, 0, -0.5), 0.0);
        assert_eq!(db2.eval_1d(Kind::Father, 0, 0, 3.5), 0.0);
    }

    #[test]
    fn eval_tensor_examples() {
        let haar = build_table(WaveletFamily::Haar, 4).unwrap();
        let idx = |j, q| BasisIndex::new(j, vec![0, 0], q).unwrap();
        assert_eq!(haar.eval_tensor(&idx(0, 0), &[0.2, 0.7]).unwrap(), 1.0);
        assert_eq!(haar.eval_tensor(&idx(0, 3), &[0.25, 0.75]).unwrap(), -1.0);
        assert!((haar.eval_tensor(&idx(1, 0), &[0.3, 0.4]).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(
            haar.eval_tensor(&idx(0, 0), &[0.2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
