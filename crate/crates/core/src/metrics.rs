//! Hellinger distance and Bhattacharyya affinity by tensor midpoint quadrature,
//! and the Gaussian kernel baseline with likelihood cross-validated bandwidths.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{ModelFile, Scratch, SqrtDensityModel, Standardization};
use crate::geometry::SampleSet;
use crate::wavelet::BoundingBox;

/// A density that can be evaluated pointwise.
pub trait Density: Sync {
    fn dim(&self) -> usize;

    fn pdf(&self, x: &[f64]) -> f64;

    /// Box holding all but a negligible fraction of the mass.
    fn support_box(&self) -> BoundingBox;

    /// Values at every node of `grid`, in the grid's row-major order.
    fn eval_on_grid(&self, grid: &QuadratureGrid) -> Vec<f64> {
        let d = grid.dim();
        (0..grid.total_points())
            .into_par_iter()
            .map_init(
                || vec![0.0; d],
                |x, k| {
                    grid.node_into(k, x);
                    self.pdf(x)
                },
            )
            .collect()
    }
}

/// Midpoint nodes on a box, the same count on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    bbox: BoundingBox,
    nodes: usize,
}

impl QuadratureGrid {
    pub fn new(bbox: BoundingBox, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidParameter(
                "quadrature needs at least 2 nodes per axis".into(),
            ));
        }
        if (0..bbox.dim()).any(|a| !(bbox.width(a) > 0.0)) {
            return Err(Error::InvalidParameter("quadrature box has zero width".into()));
        }
        Ok(QuadratureGrid { bbox, nodes })
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    pub fn total_points(&self) -> usize {
        self.nodes.pow(self.dim() as u32)
    }

    pub fn step(&self, axis: usize) -> f64 {
        self.bbox.width(axis) / self.nodes as f64
    }

    /// Common weight of every node; the weights sum to the box volume.
    pub fn weight(&self) -> f64 {
        (0..self.dim()).map(|a| self.step(a)).product()
    }

    pub fn coordinate(&self, axis: usize, k: usize) -> f64 {
        self.bbox.lo[axis] + (k as f64 + 0.5) * self.step(axis)
    }

    pub fn node_into(&self, mut k: usize, x: &mut [f64]) {
        for a in (0..self.dim()).rev() {
            x[a] = self.coordinate(a, k % self.nodes);
            k /= self.nodes;
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.total_points() * d];
        for (k, x) in out.chunks_exact_mut(d).enumerate() {
            self.node_into(k, x);
        }
        out
    }

    /// The grid with half as many nodes per axis.
    pub fn coarse(&self) -> Self {
        QuadratureGrid {
            bbox: self.bbox.clone(),
            nodes: (self.nodes / 2).max(2),
        }
    }

    pub fn refined(&self) -> Self {
        QuadratureGrid {
            bbox: self.bbox.clone(),
            nodes: self.nodes * 2,
        }
    }
}

/// Node budget and tolerance for the quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub base_nodes: usize,
    pub max_nodes: usize,
    /// Largest accepted estimate `|Q_N - Q_(N/2)|`.
    pub tolerance: f64,
}

impl QuadratureOptions {
    pub fn for_dim(d: usize) -> Self {
        let (base_nodes, max_nodes) = match d {
            1 => (512, 1 << 16),
            2 => (512, 2048),
            3 => (128, 256),
            _ => (32, 64),
        };
        QuadratureOptions {
            base_nodes,
            max_nodes,
            tolerance: 1e-3,
        }
    }
}

/// Affinity and Hellinger distance computed from one set of node values.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity {
    pub bhattacharyya: f64,
    pub hellinger_sq: f64,
    /// `max |Q_N - Q_(N/2)|` over the two integrals.
    pub error: f64,
    pub nodes_per_axis: usize,
}

fn sums(p: &[f64], q: &[f64], w: f64) -> (f64, f64) {
    let mut b = 0.0;
    let mut h = 0.0;
    for (a, c) in p.iter().zip(q) {
        let (sa, sc) = (a.max(0.0).sqrt(), c.max(0.0).sqrt());
        b += sa * sc;
        h += (sa - sc) * (sa - sc);
    }
    (b * w, 0.5 * h * w)
}

fn check_dims(p: &dyn Density, q: &dyn Density, grid: &QuadratureGrid) -> Result<()> {
    for found in [p.dim(), q.dim()] {
        if found != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found,
            });
        }
    }
    Ok(())
}

/// `B = int sqrt(p q)` and `H^2 = (1/2) int (sqrt p - sqrt q)^2` on `grid`,
/// with the error estimated against the half-resolution grid.
pub fn affinity_on(p: &dyn Density, q: &dyn Density, grid: &QuadratureGrid) -> Result<Affinity> {
    check_dims(p, q, grid)?;
    let (b, h) = sums(&p.eval_on_grid(grid), &q.eval_on_grid(grid), grid.weight());
    let coarse = grid.coarse();
    let (bc, hc) = sums(&p.eval_on_grid(&coarse), &q.eval_on_grid(&coarse), coarse.weight());
    Ok(Affinity {
        bhattacharyya: b,
        hellinger_sq: h,
        error: (b - bc).abs().max((h - hc).abs()),
        nodes_per_axis: grid.nodes_per_axis(),
    })
}

/// Quadrature box covering both supports.
pub fn joint_box(p: &dyn Density, q: &dyn Density) -> BoundingBox {
    p.support_box().union(&q.support_box())
}

/// Doubles the node count from `opts.base_nodes` until the error estimate is
/// within tolerance; fails if `opts.max_nodes` is reached first.
pub fn affinity(p: &dyn Density, q: &dyn Density, opts: &QuadratureOptions) -> Result<Affinity> {
    affinity_in(p, q, joint_box(p, q), opts)
}

/// [`affinity`] over an explicit box.
pub fn affinity_in(p: &dyn Density, q: &dyn Density, bbox: BoundingBox, opts: &QuadratureOptions) -> Result<Affinity> {
    let mut grid = QuadratureGrid::new(bbox, opts.base_nodes)?;
    let mut a = affinity_on(p, q, &grid)?;
    loop {
        if a.error <= opts.tolerance {
            return Ok(a);
        }
        if grid.nodes_per_axis() * 2 > opts.max_nodes {
            return Err(Error::QuadratureTooCoarse {
                estimate: a.error,
                tolerance: opts.tolerance,
            });
        }
        grid = grid.refined();
        let (b, h) = sums(&p.eval_on_grid(&grid), &q.eval_on_grid(&grid), grid.weight());
        a = Affinity {
            bhattacharyya: b,
            hellinger_sq: h,
            error: (b - a.bhattacharyya).abs().max((h - a.hellinger_sq).abs()),
            nodes_per_axis: grid.nodes_per_axis(),
        };
    }
}

/// Affinity of a normalized estimate `p` with a density `q`, integrating only
/// over the overlap of their support boxes (where `sqrt(p q)` lives). Both
/// must integrate to one, so the squared Hellinger distance is reported as
/// `1 - B`.
pub fn affinity_on_support(p: &dyn Density, q: &dyn Density, opts: &QuadratureOptions) -> Result<Affinity> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let Some(bx) = p.support_box().intersection(&q.support_box()) else {
        return Ok(Affinity {
            bhattacharyya: 0.0,
            hellinger_sq: 1.0,
            error: 0.0,
            nodes_per_axis: 0,
        });
    };
    let mut grid = QuadratureGrid::new(bx, opts.base_nodes)?;
    let b_on = |g: &QuadratureGrid| sums(&p.eval_on_grid(g), &q.eval_on_grid(g), g.weight()).0;
    let mut prev = b_on(&grid.coarse());
    loop {
        let b = b_on(&grid);
        let error = (b - prev).abs();
        if error <= opts.tolerance {
            return Ok(Affinity {
                bhattacharyya: b,
                hellinger_sq: 1.0 - b,
                error,
                nodes_per_axis: grid.nodes_per_axis(),
            });
        }
        if grid.nodes_per_axis() * 2 > opts.max_nodes {
            return Err(Error::QuadratureTooCoarse {
                estimate: error,
                tolerance: opts.tolerance,
            });
        }
        prev = b;
        grid = grid.refined();
    }
}

pub fn hellinger_sq(p: &dyn Density, q: &dyn Density, grid: &QuadratureGrid) -> Result<f64> {
    let a = affinity_on(p, q, grid)?;
    check_tolerance(a.error, QuadratureOptions::for_dim(grid.dim()).tolerance)?;
    Ok(a.hellinger_sq)
}

pub fn bhattacharyya(p: &dyn Density, q: &dyn Density, grid: &QuadratureGrid) -> Result<f64> {
    let a = affinity_on(p, q, grid)?;
    check_tolerance(a.error, QuadratureOptions::for_dim(grid.dim()).tolerance)?;
    Ok(a.bhattacharyya)
}

fn check_tolerance(estimate: f64, tolerance: f64) -> Result<()> {
    if estimate > tolerance {
        return Err(Error::QuadratureTooCoarse { estimate, tolerance });
    }
    Ok(())
}

/// `int f` on `grid` with its half-resolution error estimate.
pub fn integrate(f: &dyn Density, grid: &QuadratureGrid) -> (f64, f64) {
    let full: f64 = f.eval_on_grid(grid).iter().sum::<f64>() * grid.weight();
    let coarse = grid.coarse();
    let half: f64 = f.eval_on_grid(&coarse).iter().sum::<f64>() * coarse.weight();
    (full, (full - half).abs())
}

/// `int |g| h` on `grid` for evaluable `g` and `h` given as node values.
pub(crate) fn integrate_product(g: &[f64], h: &[f64], w: f64) -> f64 {
    g.iter().zip(h).map(|(a, b)| a.abs() * b).sum::<f64>() * w
}

impl Density for SqrtDensityModel {
    fn dim(&self) -> usize {
        SqrtDensityModel::dim(self)
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        let mut scratch = Scratch::default();
        let v = self.evaluate_with(x, &mut scratch);
        v * v
    }

    fn support_box(&self) -> BoundingBox {
        SqrtDensityModel::support_box(self)
    }

    fn eval_on_grid(&self, grid: &QuadratureGrid) -> Vec<f64> {
        let values = sqrt_on_grid(self, grid);
        values.into_iter().map(|v| v * v).collect()
    }
}

/// A density expressed in transformed coordinates `u = (x - shift) / scale`.
pub struct Transformed<'a> {
    pub density: &'a dyn Density,
    pub transform: &'a Standardization,
}

impl Density for Transformed<'_> {
    fn dim(&self) -> usize {
        self.density.dim()
    }

    fn pdf(&self, u: &[f64]) -> f64 {
        self.density.pdf(&self.transform.invert(u)) / self.transform.jacobian()
    }

    fn support_box(&self) -> BoundingBox {
        let b = self.density.support_box();
        BoundingBox {
            lo: self.transform.apply(&b.lo),
            hi: self.transform.apply(&b.hi),
        }
    }
}

/// Values of the square-root model at every node of `grid`.
pub fn sqrt_on_grid(m: &SqrtDensityModel, grid: &QuadratureGrid) -> Vec<f64> {
    let single;
    let model = if m.is_single_level() {
        m
    } else {
        single = m.to_single_level().expect("synthesis of a valid model");
        &single
    };
    let d = grid.dim();
    (0..grid.total_points())
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], Scratch::default()),
            |(x, scratch), k| {
                grid.node_into(k, x);
                model.evaluate_with(x, scratch)
            },
        )
        .collect()
}

impl Density for ModelFile {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        self.density(x).unwrap_or(0.0)
    }

    /// The image of a midpoint grid under a per-axis affine map is the
    /// midpoint grid of the image box, with the same node order.
    fn eval_on_grid(&self, grid: &QuadratureGrid) -> Vec<f64> {
        let Some(t) = &self.transform else {
            return self.model.eval_on_grid(grid);
        };
        let b = grid.bbox();
        let mapped = QuadratureGrid::new(
            BoundingBox {
                lo: t.apply(&b.lo),
                hi: t.apply(&b.hi),
            },
            grid.nodes_per_axis(),
        )
        .expect("affine image of a valid box");
        let jac = t.jacobian();
        sqrt_on_grid(&self.model, &mapped)
            .into_iter()
            .map(|v| v * v * jac)
            .collect()
    }

    fn support_box(&self) -> BoundingBox {
        let b = self.model.support_box();
        match &self.transform {
            None => b,
            Some(t) => BoundingBox {
                lo: b
                    .lo
                    .iter()
                    .zip(t.shift.iter().zip(&t.scale))
                    .map(|(v, (m, s))| v * s + m)
                    .collect(),
                hi: b
                    .hi
                    .iter()
                    .zip(t.shift.iter().zip(&t.scale))
                    .map(|(v, (m, s))| v * s + m)
                    .collect(),
            },
        }
    }
}

const KDE_CUTOFF: f64 = 8.0;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian product-kernel density estimate with diagonal bandwidths.
#[derive(Debug, Clone)]
pub struct KdeModel {
    sample: SampleSet,
    bandwidths: Vec<f64>,
}

impl KdeModel {
    pub fn new(sample: SampleSet, bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.len() != sample.dim() {
            return Err(Error::DimensionMismatch {
                expected: sample.dim(),
                found: bandwidths.len(),
            });
        }
        if bandwidths.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidParameter("bandwidths must be positive".into()));
        }
        Ok(KdeModel { sample, bandwidths })
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn sample(&self) -> &SampleSet {
        &self.sample
    }
}

/// `(1/n) sum_i prod_a phi((x_a - X_ia) / h_a) / h_a`.
pub fn kde_eval(k: &KdeModel, x: &[f64]) -> f64 {
    let norm: f64 = k.bandwidths.iter().map(|h| INV_SQRT_2PI / h).product();
    let sum: f64 = k
        .sample
        .rows()
        .map(|xi| {
            let q: f64 = xi
                .iter()
                .zip(x)
                .zip(&k.bandwidths)
                .map(|((a, b), h)| ((a - b) / h).powi(2))
                .sum();
            (-0.5 * q).exp()
        })
        .sum();
    norm * sum / k.sample.len() as f64
}

impl Density for KdeModel {
    fn dim(&self) -> usize {
        self.sample.dim()
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        kde_eval(self, x)
    }

    fn support_box(&self) -> BoundingBox {
        let b = self.sample.bbox();
        BoundingBox {
            lo: b.lo.iter().zip(&self.bandwidths).map(|(v, h)| v - 4.0 * h).collect(),
            hi: b.hi.iter().zip(&self.bandwidths).map(|(v, h)| v + 4.0 * h).collect(),
        }
    }

    /// Separable evaluation: each observation touches only the nodes within
    /// `8 h` of it on every axis.
    fn eval_on_grid(&self, grid: &QuadratureGrid) -> Vec<f64> {
        let d = grid.dim();
        let m = grid.nodes_per_axis();
        let n = self.sample.len();
        // windows[i][a] = (first node, kernel values)
        let windows: Vec<Vec<(usize, Vec<f64>)>> = self
            .sample
            .rows()
            .map(|xi| {
                (0..d)
                    .map(|a| {
                        let h = self.bandwidths[a];
                        let step = grid.step(a);
                        let lo = grid.bbox().lo[a];
                        let first = ((xi[a] - KDE_CUTOFF * h - lo) / step - 0.5).ceil().max(0.0);
                        let last = ((xi[a] + KDE_CUTOFF * h - lo) / step - 0.5).floor().min((m - 1) as f64);
                        if first > last {
                            return (0, Vec::new());
                        }
                        let first = first as usize;
                        let vals = (first..=last as usize)
                            .map(|k| {
                                let u = (grid.coordinate(a, k) - xi[a]) / h;
                                INV_SQRT_2PI / h * (-0.5 * u * u).exp()
                            })
                            .collect();
                        (first, vals)
                    })
                    .collect()
            })
            .collect();
        let slab = m.pow(d as u32 - 1);
        let slabs: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|k0| {
                let mut out = vec![0.0; slab];
                for w in &windows {
                    let (f0, v0) = &w[0];
                    if k0 < *f0 || k0 >= f0 + v0.len() {
                        continue;
                    }
                    let base = v0[k0 - f0] / n as f64;
                    accumulate_rest(&mut out, &w[1..], m, base);
                }
                out
            })
            .collect();
        slabs.into_iter().flatten().collect()
    }
}

fn accumulate_rest(out: &mut [f64], windows: &[(usize, Vec<f64>)], m: usize, factor: f64) {
    match windows.split_first() {
        None => out[0] += factor,
        Some(((first, vals), rest)) => {
            let stride = m.pow(rest.len() as u32);
            for (k, v) in vals.iter().enumerate() {
                let idx = first + k;
                accumulate_rest(&mut out[idx * stride..(idx + 1) * stride], rest, m, factor * v);
            }
        }
    }
}

/// Leave-one-out log likelihood `sum_i log f_H^(-i)(X_i)` for diagonal `h`.
pub fn mlcv_objective(s: &SampleSet, h: &[f64]) -> f64 {
    let n = s.len();
    let d = s.dim();
    let log_norm = -(n as f64 - 1.0).ln()
        - h.iter().map(|v| v.ln()).sum::<f64>()
        - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln();
    let inv: Vec<f64> = h.iter().map(|v| 1.0 / v).collect();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |exps: &mut Vec<f64>, i| {
            let xi = s.row(i);
            exps.clear();
            let mut best = f64::NEG_INFINITY;
            for k in 0..n {
                if k == i {
                    continue;
                }
                let xk = s.row(k);
                let mut q = 0.0;
                for a in 0..d {
                    let u = (xi[a] - xk[a]) * inv[a];
                    q += u * u;
                }
                let e = -0.5 * q;
                best = best.max(e);
                exps.push(e);
            }
            let sum: f64 = exps.iter().map(|e| (e - best).exp()).sum();
            best + sum.ln() + log_norm
        })
        .collect();
    terms.iter().sum()
}

/// Normal-reference bandwidths `1.06 sigma_a n^(-1/5)`.
pub fn normal_reference_bandwidths(s: &SampleSet) -> Result<Vec<f64>> {
    let sd = s.std_dev();
    if let Some(a) = sd.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateCoordinate(a));
    }
    let factor = 1.06 * (s.len() as f64).powf(-0.2);
    Ok(sd.iter().map(|v| v * factor).collect())
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Diagonal bandwidths maximizing the leave-one-out likelihood, by
/// coordinate-wise search over `log h` in `[h0 / 50, 4 h0]` around the
/// normal-reference start `h0`: a coarse grid, then golden section.
pub fn kde_fit_mlcv(s: &SampleSet) -> Result<KdeModel> {
    if s.len() < 3 {
        return Err(Error::TooFewPoints { n: s.len(), min: 3 });
    }
    let h0 = normal_reference_bandwidths(s)?;
    let d = s.dim();
    let mut log_h: Vec<f64> = h0.iter().map(|v| v.ln()).collect();
    let bounds: Vec<(f64, f64)> = h0.iter().map(|v| ((v / 50.0).ln(), (v * 4.0).ln())).collect();
    let eval = |lh: &[f64]| {
        let h: Vec<f64> = lh.iter().map(|v| v.exp()).collect();
        mlcv_objective(s, &h)
    };
    const GRID: usize = 16;
    for sweep in 0..2 {
        for a in 0..d {
            let (lo, hi) = if sweep == 0 {
                bounds[a]
            } else {
                let w = 2.0 * (bounds[a].1 - bounds[a].0) / GRID as f64;
                ((log_h[a] - w).max(bounds[a].0), (log_h[a] + w).min(bounds[a].1))
            };
            let at = |v: f64| {
                let mut lh = log_h.clone();
                lh[a] = v;
                eval(&lh)
            };
            let nodes: Vec<f64> = (0..=GRID).map(|k| lo + (hi - lo) * k as f64 / GRID as f64).collect();
            let values: Vec<f64> = nodes.iter().map(|&v| at(v)).collect();
            let best = (0..values.len())
                .max_by(|&i, &j| values[i].total_cmp(&values[j]).then(j.cmp(&i)))
                .unwrap();
            let left = nodes[best.saturating_sub(1)];
            let right = nodes[(best + 1).min(GRID)];
            let (arg, val) = golden_max(at, left, right, 1e-4);
            log_h[a] = if val >= values[best] { arg } else { nodes[best] };
        }
    }
    KdeModel::new(s.clone(), log_h.iter().map(|v| v.exp()).collect())
}
