use std::ops::RangeInclusive;

/// Dense coefficients of one `(level, type)` pair over a box of translations,
/// stored row-major (last coordinate fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBlock {
    level: i32,
    kind: u32,
    origin: Vec<i64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<f64>,
}

fn strides_for(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    strides
}

impl CoefficientBlock {
    pub fn zeros(level: i32, kind: u32, ranges: &[RangeInclusive<i64>]) -> Self {
        let origin: Vec<i64> = ranges.iter().map(|r| *r.start()).collect();
        let shape: Vec<usize> = ranges
            .iter()
            .map(|r| (r.end() - r.start() + 1).max(0) as usize)
            .collect();
        let strides = strides_for(&shape);
        let len = shape.iter().product();
        CoefficientBlock {
            level,
            kind,
            origin,
            shape,
            strides,
            values: vec![0.0; len],
        }
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn kind(&self) -> u32 {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Inclusive translation range along `axis`.
    pub fn axis_range(&self, axis: usize) -> (i64, i64) {
        let lo = self.origin[axis];
        (lo, lo + self.shape[axis] as i64 - 1)
    }

    pub(crate) fn set_label(&mut self, level: i32, kind: u32) {
        self.level = level;
        self.kind = kind;
    }

    pub fn flat_index(&self, z: &[i64]) -> Option<usize> {
        if z.len() != self.dim() {
            return None;
        }
        let mut k = 0;
        for a in 0..self.dim() {
            let local = z[a] - self.origin[a];
            if local < 0 || local as usize >= self.shape[a] {
                return None;
            }
            k += local as usize * self.strides[a];
        }
        Some(k)
    }

    pub fn translation(&self, mut k: usize) -> Vec<i64> {
        let mut z = vec![0; self.dim()];
        for a in 0..self.dim() {
            z[a] = self.origin[a] + (k / self.strides[a]) as i64;
            k %= self.strides[a];
        }
        z
    }

    /// Visits the tensor products of per-axis windows `(z, value)` that fall
    /// inside the block, passing the flat index and the product.
    pub(crate) fn for_each_tensor<'w, W, F>(&self, window: W, local: &mut Vec<Vec<(usize, f64)>>, f: F)
    where
        W: Fn(usize) -> &'w Vec<(i64, f64)>,
        F: FnMut(usize, f64),
    {
        tensor_walk(&self.origin, &self.shape, &self.strides, window, local, f);
    }

    /// Adds `weight * prod_a window_a(z_a)` to every coefficient in range.
    pub(crate) fn accumulate_tensor(&mut self, windows: &[Vec<(i64, f64)>], weight: f64) {
        let mut local = Vec::new();
        let values = &mut self.values;
        tensor_walk(
            &self.origin,
            &self.shape,
            &self.strides,
            |a| &windows[a],
            &mut local,
            |k, v| values[k] += weight * v,
        );
    }

    /// One analysis step along `axis`: `out_z = sum_k taps_k in_{2z + k}` for
    /// `z` in `range`.
    pub(crate) fn filter_axis(&self, axis: usize, taps: &[f64], range: RangeInclusive<i64>) -> Self {
        let mut ranges: Vec<RangeInclusive<i64>> = (0..self.dim())
            .map(|a| {
                let (lo, hi) = self.axis_range(a);
                lo..=hi
            })
            .collect();
        ranges[axis] = range.clone();
        let mut out = CoefficientBlock::zeros(self.level - 1, self.kind, &ranges);
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let src_len = self.shape[axis];
        let dst_len = out.shape[axis];
        let src_origin = self.origin[axis];
        for (zi, z) in range.enumerate() {
            for (k, &tap) in taps.iter().enumerate() {
                let local = 2 * z + k as i64 - src_origin;
                if local < 0 || local as usize >= src_len {
                    continue;
                }
                let local = local as usize;
                for o in 0..outer {
                    let src = &self.values[(o * src_len + local) * inner..][..inner];
                    let dst = &mut out.values[(o * dst_len + zi) * inner..][..inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += tap * s;
                    }
                }
            }
        }
        out
    }

    /// Transpose of [`CoefficientBlock::filter_axis`]: adds
    /// `taps_k in_z` to `out_{2z + k}`, with `out` spanning `range` along `axis`.
    pub(crate) fn synthesize_axis(&self, axis: usize, taps: &[f64], range: RangeInclusive<i64>) -> Self {
        let mut ranges: Vec<RangeInclusive<i64>> = (0..self.dim())
            .map(|a| {
                let (lo, hi) = self.axis_range(a);
                lo..=hi
            })
            .collect();
        ranges[axis] = range.clone();
        let mut out = CoefficientBlock::zeros(self.level + 1, self.kind, &ranges);
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let src_len = self.shape[axis];
        let dst_len = out.shape[axis];
        let dst_origin = *range.start();
        for zi in 0..src_len {
            let z = self.origin[axis] + zi as i64;
            for (k, &tap) in taps.iter().enumerate() {
                let local = 2 * z + k as i64 - dst_origin;
                if local < 0 || local as usize >= dst_len {
                    continue;
                }
                let local = local as usize;
                for o in 0..outer {
                    let src = &self.values[(o * src_len + zi) * inner..][..inner];
                    let dst = &mut out.values[(o * dst_len + local) * inner..][..inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += tap * s;
                    }
                }
            }
        }
        out
    }

    /// Adds `other` into `self`; `other` must lie inside `self`'s range.
    pub(crate) fn add_block(&mut self, other: &CoefficientBlock) {
        for k in 0..other.len() {
            let v = other.values[k];
            if v != 0.0 {
                let dst = self
                    .flat_index(&other.translation(k))
                    .expect("target range covers source");
                self.values[dst] += v;
            }
        }
    }
}

fn tensor_walk<'w, W, F>(
    origin: &[i64],
    shape: &[usize],
    strides: &[usize],
    window: W,
    local: &mut Vec<Vec<(usize, f64)>>,
    mut f: F,
) where
    W: Fn(usize) -> &'w Vec<(i64, f64)>,
    F: FnMut(usize, f64),
{
    let d = shape.len();
    if local.len() != d {
        *local = vec![Vec::new(); d];
    }
    for a in 0..d {
        let buf = &mut local[a];
        buf.clear();
        for &(z, v) in window(a) {
            let k = z - origin[a];
            if v != 0.0 && k >= 0 && (k as usize) < shape[a] {
                buf.push((k as usize * strides[a], v));
            }
        }
        if buf.is_empty() {
            return;
        }
    }
    if d == 1 {
        for &(k, v) in &local[0] {
            f(k, v);
        }
        return;
    }
    if d == 2 {
        for &(k0, v0) in &local[0] {
            for &(k1, v1) in &local[1] {
                f(k0 + k1, v0 * v1);
            }
        }
        return;
    }
    let mut pos = vec![0usize; d];
    loop {
        let mut k = 0;
        let mut v = 1.0;
        for a in 0..d {
            let (ka, va) = local[a][pos[a]];
            k += ka;
            v *= va;
        }
        f(k, v);
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            pos[a] += 1;
            if pos[a] < local[a].len() {
                break;
            }
            pos[a] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_round_trips() {
        let b = CoefficientBlock::zeros(0, 1, &[-2..=1, 3..=5]);
        assert_eq!(b.len(), 12);
        for k in 0..b.len() {
            assert_eq!(b.flat_index(&b.translation(k)), Some(k));
        }
        assert_eq!(b.flat_index(&[2, 3]), None);
        assert_eq!(b.translation(0), vec![-2, 3]);
        assert_eq!(b.translation(1), vec![-2, 4]);
    }

    #[test]
    fn haar_filter_step() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut fine = CoefficientBlock::zeros(1, 0, &[0..=3]);
        fine.values_mut().copy_from_slice(&[1.0, 3.0, 2.0, 6.0]);
        let low = fine.filter_axis(0, &[s, s], 0..=1);
        let high = fine.filter_axis(0, &[s, -s], 0..=1);
        assert!((low.values()[0] - 4.0 * s).abs() < 1e-15);
        assert!((low.values()[1] - 8.0 * s).abs() < 1e-15);
        assert!((high.values()[0] + 2.0 * s).abs() < 1e-15);
        assert!((high.values()[1] + 4.0 * s).abs() < 1e-15);
        assert_eq!(low.level(), 0);
    }

    #[test]
    fn tensor_walk_three_dims() {
        let mut b = CoefficientBlock::zeros(0, 0, &[0..=1, 0..=1, 0..=1]);
        let w = vec![(0, 1.0), (1, 2.0), (5, 9.0)];
        b.accumulate_tensor(&[w.clone(), w.clone(), w], 0.5);
        assert_eq!(b.values()[0], 0.5);
        assert_eq!(b.values()[7], 4.0);
        assert_eq!(b.values().iter().sum::<f64>(), 0.5 * 27.0);
    }
}
