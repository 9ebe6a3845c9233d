//! Resolution selection by leave-one-out Hellinger-Bhattacharyya criteria.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{fit_single_level, LooEngine, SqrtDensityModel};
use crate::geometry::{NeighborTable, SampleSet};
use crate::metrics::{integrate_product, sqrt_on_grid, Density, QuadratureGrid, QuadratureOptions};
use crate::wavelet::BoundingBox;
use crate::wavelet::WaveletBasis;

/// Which leave-one-out criterion to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// `B-hat`: leave-one-out models normalized to unit coefficient norm.
    Normalized,
    /// `B-hat-circ`: unnormalized leave-one-out models minus half the squared norm.
    Unnormalized,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Normalized => "norm",
            Criterion::Unnormalized => "unnorm",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" | "normalized" => Ok(Criterion::Normalized),
            "unnorm" | "unnormalized" => Ok(Criterion::Unnormalized),
            _ => Err(Error::InvalidParameter(format!(
                "unknown criterion '{s}' (expected norm or unnorm)"
            ))),
        }
    }
}

/// Criterion values over a grid of integer candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCurve {
    candidates: Vec<i64>,
    values: Vec<f64>,
    argmax: i64,
}

impl CvCurve {
    /// The argmax is the lowest candidate among those attaining the maximum.
    pub fn new(candidates: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        if candidates.is_empty() || candidates.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "curve needs matching non-empty candidates and values ({} vs {})",
                candidates.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "criterion at candidate {} is not finite",
                candidates[k]
            )));
        }
        let mut best = 0;
        for k in 1..values.len() {
            let better = values[k] > values[best] || (values[k] == values[best] && candidates[k] < candidates[best]);
            if better {
                best = k;
            }
        }
        let argmax = candidates[best];
        Ok(CvCurve {
            candidates,
            values,
            argmax,
        })
    }

    pub fn candidates(&self) -> &[i64] {
        &self.candidates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn argmax(&self) -> i64 {
        self.argmax
    }

    pub fn max_value(&self) -> f64 {
        self.value_at(self.argmax).expect("argmax is a candidate")
    }

    pub fn value_at(&self, candidate: i64) -> Option<f64> {
        self.candidates
            .iter()
            .position(|&c| c == candidate)
            .map(|k| self.values[k])
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// CSV with header `candidate,criterion,is_argmax`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "candidate,criterion,is_argmax")?;
        for (c, v) in self.candidates.iter().zip(&self.values) {
            writeln!(out, "{c},{v},{}", u8::from(*c == self.argmax))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Bounds on the candidate resolutions: `C'^-1 n^eps <= 2^J <= C' n^(1 - eps)`,
/// with at most `C n^rho` candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionBounds {
    pub n: usize,
    pub epsilon: f64,
    pub c_prime: f64,
    pub c: f64,
    pub rho: f64,
}

impl ResolutionBounds {
    pub const DEFAULT_EPSILON: f64 = 0.2;
    pub const DEFAULT_C_PRIME: f64 = 1.0;

    pub fn new(n: usize) -> Self {
        ResolutionBounds {
            n,
            epsilon: Self::DEFAULT_EPSILON,
            c_prime: Self::DEFAULT_C_PRIME,
            c: 1.0,
            rho: 1.0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64, c_prime: f64) -> Self {
        self.epsilon = epsilon;
        self.c_prime = c_prime;
        self
    }

    pub fn candidates(&self) -> Result<Vec<i32>> {
        if !(self.c > 0.0 && self.rho > 0.0) {
            return Err(Error::InvalidParameter("C and rho must be positive".into()));
        }
        let list = candidate_resolutions(self.n, self.epsilon, self.c_prime)?;
        let cap = self.c * (self.n as f64).powf(self.rho);
        if list.len() as f64 > cap {
            return Err(Error::EmptyCandidates(format!(
                "{} candidates exceed the cap C n^rho = {cap}",
                list.len()
            )));
        }
        Ok(list)
    }
}

/// All `J` with `C'^-1 n^eps <= 2^J <= C' n^(1 - eps)`.
pub fn candidate_resolutions(n: usize, epsilon: f64, c_prime: f64) -> Result<Vec<i32>> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1/2), got {epsilon}"
        )));
    }
    if !(c_prime >= 1.0) {
        return Err(Error::InvalidParameter(format!("C' must be at least 1, got {c_prime}")));
    }
    if n < 2 {
        return Err(Error::TooFewPoints { n, min: 2 });
    }
    let ln = (n as f64).log2();
    let lo = epsilon * ln - c_prime.log2();
    let hi = (1.0 - epsilon) * ln + c_prime.log2();
    let first = (lo - 1e-12).ceil() as i32;
    let last = (hi + 1e-12).floor() as i32;
    if first > last {
        return Err(Error::EmptyCandidates(format!(
            "no J satisfies {:.4} <= 2^J <= {:.4}; lower epsilon or raise C'",
            2f64.powf(lo),
            2f64.powf(hi)
        )));
    }
    Ok((first..=last).collect())
}

/// Leave-one-out criterion of an arbitrary model layout.
pub fn criterion_value(
    s: &SampleSet,
    t: &NeighborTable,
    model: &SqrtDensityModel,
    criterion: Criterion,
) -> Result<f64> {
    let engine = LooEngine::new(s, t, model)?;
    Ok(criterion_from_engine(&engine, &model.values_flat(), criterion))
}

pub(crate) fn criterion_from_engine(engine: &LooEngine<'_>, c: &[f64], criterion: Criterion) -> f64 {
    let sumsq: f64 = c.iter().map(|v| v * v).sum();
    let scale = engine.scale();
    let terms: Vec<Option<f64>> = (0..engine.len())
        .into_par_iter()
        .map(|i| {
            let w = engine.weights()[i];
            if w == 0.0 {
                return Some(0.0);
            }
            let (v, m) = engine.held_out(i, c, sumsq);
            match criterion {
                Criterion::Normalized if m > 0.0 => Some(w * v.abs() / m.sqrt()),
                Criterion::Normalized => None,
                Criterion::Unnormalized => Some(w * scale * v.abs()),
            }
        })
        .collect();
    let zero = terms.iter().filter(|t| t.is_none()).count();
    if zero > 0 {
        log::warn!("{zero} leave-one-out model(s) have zero norm; their terms count as 0");
    }
    let sum: f64 = terms.iter().map(|t| t.unwrap_or(0.0)).sum();
    match criterion {
        Criterion::Normalized => sum,
        Criterion::Unnormalized => sum - 0.5 * sumsq,
    }
}

fn check_j0(basis: &WaveletBasis, j0: i32, j: i32) -> Result<()> {
    if j0 > j + 1 {
        return Err(Error::InvalidLevels(format!("j0 = {j0} exceeds J + 1 = {}", j + 1)));
    }
    basis.check_level(j + 1, j0)
}

/// `B-hat(J)`. The value does not depend on `j0`, which is only validated.
pub fn b_hat(s: &SampleSet, t: &NeighborTable, basis: &Arc<WaveletBasis>, j0: i32, j: i32) -> Result<f64> {
    check_j0(basis, j0, j)?;
    let m = fit_single_level(s, t, basis, j + 1)?;
    criterion_value(s, t, &m, Criterion::Normalized)
}

/// `B-hat-circ(J)`. The value does not depend on `j0`, which is only validated.
pub fn b_hat_circ(s: &SampleSet, t: &NeighborTable, basis: &Arc<WaveletBasis>, j0: i32, j: i32) -> Result<f64> {
    check_j0(basis, j0, j)?;
    let m = fit_single_level(s, t, basis, j + 1)?;
    criterion_value(s, t, &m, Criterion::Unnormalized)
}

/// Both criteria at every candidate `J`, sharing one fit per candidate.
pub fn resolution_curves(
    s: &SampleSet,
    t: &NeighborTable,
    basis: &Arc<WaveletBasis>,
    candidates: &[i32],
) -> Result<(CvCurve, CvCurve)> {
    let mut norm = Vec::with_capacity(candidates.len());
    let mut unnorm = Vec::with_capacity(candidates.len());
    for &j in candidates {
        let m = fit_single_level(s, t, basis, j + 1)?;
        let engine = LooEngine::new(s, t, &m)?;
        let c = m.values_flat();
        norm.push(criterion_from_engine(&engine, &c, Criterion::Normalized));
        unnorm.push(criterion_from_engine(&engine, &c, Criterion::Unnormalized));
    }
    let cands: Vec<i64> = candidates.iter().map(|&j| j as i64).collect();
    Ok((CvCurve::new(cands.clone(), norm)?, CvCurve::new(cands, unnorm)?))
}

/// Evaluates one criterion over the candidates from `bounds`.
pub fn select_resolution(
    s: &SampleSet,
    t: &NeighborTable,
    basis: &Arc<WaveletBasis>,
    bounds: &ResolutionBounds,
    criterion: Criterion,
) -> Result<CvCurve> {
    select_resolution_over(s, t, basis, &bounds.candidates()?, criterion)
}

/// Evaluates one criterion over an explicit candidate list.
pub fn select_resolution_over(
    s: &SampleSet,
    t: &NeighborTable,
    basis: &Arc<WaveletBasis>,
    candidates: &[i32],
    criterion: Criterion,
) -> Result<CvCurve> {
    let mut values = Vec::with_capacity(candidates.len());
    for &j in candidates {
        let m = fit_single_level(s, t, basis, j + 1)?;
        values.push(criterion_value(s, t, &m, criterion)?);
    }
    CvCurve::new(candidates.iter().map(|&j| j as i64).collect(), values)
}

/// True-affinity curves against a known density.
#[derive(Debug, Clone)]
pub struct OracleCurves {
    /// `B(J) = int |g_J| sqrt(f)` with `g_J` normalized.
    pub b: CvCurve,
    /// `B-circ(J) = int |g_J| sqrt(f) - 1/2 int g_J^2` with `g_J` unnormalized.
    pub b_circ: CvCurve,
    /// Quadrature error estimate of `int |g_J| sqrt(f)` per candidate.
    pub errors: Vec<f64>,
    pub nodes_per_axis: Vec<usize>,
}

impl OracleCurves {
    pub fn j_star(&self) -> i64 {
        self.b.argmax()
    }

    pub fn j_star_circ(&self) -> i64 {
        self.b_circ.argmax()
    }

    /// `H^2(J) = 1 - B(J)`, the squared Hellinger distance of the
    /// normalized estimate.
    pub fn hellinger_sq(&self) -> Vec<f64> {
        self.b.values().iter().map(|b| 1.0 - b).collect()
    }
}

struct OracleEstimate {
    nodes: usize,
    value: f64,
    error: f64,
}

fn abs_root_integral(
    m: &SqrtDensityModel,
    f_box: &BoundingBox,
    root_f: &dyn Fn(&QuadratureGrid) -> Vec<f64>,
    nodes: usize,
) -> Result<f64> {
    // The integrand vanishes outside either support; clipping to the overlap
    // also puts grid edges on discontinuities of boxed densities.
    let Some(bx) = m.support_box().intersection(f_box) else {
        return Ok(0.0);
    };
    let grid = QuadratureGrid::new(bx, nodes)?;
    let g = sqrt_on_grid(m, &grid);
    Ok(integrate_product(&g, &root_f(&grid), grid.weight()))
}

/// Oracle resolutions `J*` (for `B`) and `J*-circ` (for `B-circ`).
///
/// Each candidate is fitted at single level `J + 1` and integrated over the
/// overlap of its support box with that of the density. The squared-norm term uses the
/// coefficient norm (exact by orthonormality). Candidates whose error bars
/// reach the running maximum of either curve are refined by doubling the
/// nodes until their error is within `opts.tolerance`.
pub fn oracle_curves(
    density: &dyn Density,
    s: &SampleSet,
    t: &NeighborTable,
    basis: &Arc<WaveletBasis>,
    candidates: &[i32],
    opts: &QuadratureOptions,
) -> Result<OracleCurves> {
    if density.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: density.dim(),
        });
    }
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates("no resolution levels given".into()));
    }
    let f_box = density.support_box();
    let root_f = |grid: &QuadratureGrid| -> Vec<f64> {
        density
            .eval_on_grid(grid)
            .into_iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    };
    let models: Vec<SqrtDensityModel> = candidates
        .iter()
        .map(|&j| fit_single_level(s, t, basis, j + 1))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = models.iter().map(|m| m.coeff_norm()).collect();
    let mut est: Vec<OracleEstimate> = models
        .iter()
        .map(|m| {
            let half = abs_root_integral(m, &f_box, &root_f, opts.base_nodes / 2)?;
            let value = abs_root_integral(m, &f_box, &root_f, opts.base_nodes)?;
            Ok(OracleEstimate {
                nodes: opts.base_nodes,
                value,
                error: (value - half).abs(),
            })
        })
        .collect::<Result<_>>()?;

    let b_of = |e: &OracleEstimate, norm: f64| if norm > 0.0 { e.value / norm } else { 0.0 };
    let circ_of = |e: &OracleEstimate, norm: f64| e.value - 0.5 * norm * norm;
    loop {
        // Candidates that could still hold either maximum.
        let mut contender = vec![false; est.len()];
        for (curve, scale) in [(0, true), (1, false)] {
            let val = |k: usize| {
                if curve == 0 {
                    b_of(&est[k], norms[k])
                } else {
                    circ_of(&est[k], norms[k])
                }
            };
            let err = |k: usize| {
                if scale && norms[k] > 0.0 {
                    est[k].error / norms[k]
                } else {
                    est[k].error
                }
            };
            let floor = (0..est.len())
                .map(|k| val(k) - err(k))
                .fold(f64::NEG_INFINITY, f64::max);
            for k in 0..est.len() {
                if val(k) + err(k) >= floor {
                    contender[k] = true;
                }
            }
        }
        let pending: Vec<usize> = (0..est.len())
            .filter(|&k| contender[k] && est[k].error > opts.tolerance)
            .collect();
        if pending.is_empty() {
            break;
        }
        for k in pending {
            let e = &mut est[k];
            if e.nodes * 2 > opts.max_nodes {
                return Err(Error::QuadratureTooCoarse {
                    estimate: e.error,
                    tolerance: opts.tolerance,
                });
            }
            let value = abs_root_integral(&models[k], &f_box, &root_f, e.nodes * 2)?;
            e.error = (value - e.value).abs();
            e.value = value;
            e.nodes *= 2;
            log::debug!(
                "oracle J={} refined to {} nodes, error {:.2e}",
                candidates[k],
                e.nodes,
                e.error
            );
        }
    }

    let cands: Vec<i64> = candidates.iter().map(|&j| j as i64).collect();
    let b = est.iter().zip(&norms).map(|(e, &n)| b_of(e, n)).collect();
    let b_circ = est.iter().zip(&norms).map(|(e, &n)| circ_of(e, n)).collect();
    Ok(OracleCurves {
        b: CvCurve::new(cands.clone(), b)?,
        b_circ: CvCurve::new(cands, b_circ)?,
        errors: est.iter().map(|e| e.error).collect(),
        nodes_per_axis: est.iter().map(|e| e.nodes).collect(),
    })
}

/// `J*`: the candidate maximizing the true affinity `B(J)`.
pub fn oracle_resolution(
    density: &dyn Density,
    s: &SampleSet,
    t: &NeighborTable,
    basis: &Arc<WaveletBasis>,
    candidates: &[i32],
) -> Result<i64> {
    let opts = QuadratureOptions::for_dim(s.dim());
    Ok(oracle_curves(density, s, t, basis, candidates, &opts)?.j_star())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_examples() {
        assert_eq!(
            candidate_resolutions(1000, 0.2, 1.0).unwrap(),
            (2..=7).collect::<Vec<_>>()
        );
        assert_eq!(candidate_resolutions(8, 0.2, 1.0).unwrap(), vec![1, 2]);
        assert!(candidate_resolutions(1000, 0.5, 1.0).is_err());
        assert!(candidate_resolutions(1000, 0.2, 0.5).is_err());
        assert!(matches!(
            candidate_resolutions(3, 0.45, 1.0),
            Err(Error::EmptyCandidates(_))
        ));
        for n in [8, 1000] {
            let b = ResolutionBounds::new(n);
            assert!(b.candidates().unwrap().len() <= n);
        }
    }

    #[test]
    fn curve_argmax_prefers_lowest_candidate() {
        let c = CvCurve::new(vec![5, 2, 3], vec![0.7, 0.9, 0.9]).unwrap();
        assert_eq!(c.argmax(), 2);
        let single = CvCurve::new(vec![4], vec![-1.0]).unwrap();
        assert_eq!(single.argmax(), 4);
        assert!(CvCurve::new(vec![1, 2], vec![0.1, f64::NAN]).is_err());
        assert!(CvCurve::new(vec![], vec![]).is_err());
    }

    #[test]
    fn curve_csv_layout() {
        let c = CvCurve::new(vec![1, 2], vec![0.5, 0.25]).unwrap();
        assert_eq!(c.to_csv_string(), "candidate,criterion,is_argmax\n1,0.5,1\n2,0.25,0\n");
    }

    #[test]
    fn criterion_names() {
        assert_eq!("norm".parse::<Criterion>().unwrap(), Criterion::Normalized);
        assert_eq!(Criterion::Unnormalized.to_string(), "unnorm");
        assert!("both".parse::<Criterion>().is_err());
    }

    #[test]
    fn oracle_self_affinity_is_one() {
        use crate::densities::density_by_name;
        use crate::geometry::build_neighbors;
        use crate::wavelet::WaveletFamily;
        let s = density_by_name("std-normal").unwrap().sample(300, 4).unwrap();
        let t = build_neighbors(&s).unwrap();
        let basis = Arc::new(WaveletBasis::new(WaveletFamily::Daubechies(4), 10).unwrap());
        for j in [1, 3] {
            let own = fit_single_level(&s, &t, &basis, j + 1).unwrap().normalize().unwrap();
            let opts = QuadratureOptions::for_dim(1);
            let c = oracle_curves(&own, &s, &t, &basis, &[j], &opts).unwrap();
            assert!((c.b.values()[0] - 1.0).abs() < 1e-3, "J={j}: {}", c.b.values()[0]);
        }
    }

    #[test]
    fn oracle_checks_dimensions() {
        use crate::densities::density_by_name;
        use crate::geometry::build_neighbors;
        use crate::wavelet::WaveletFamily;
        let s = density_by_name("std-normal").unwrap().sample(50, 1).unwrap();
        let t = build_neighbors(&s).unwrap();
        let basis = Arc::new(WaveletBasis::new(WaveletFamily::Haar, 10).unwrap());
        let f2 = density_by_name("std-normal-2d").unwrap();
        assert!(oracle_resolution(&f2, &s, &t, &basis, &[1]).is_err());
        let f1 = density_by_name("std-normal").unwrap();
        assert!(oracle_resolution(&f1, &s, &t, &basis, &[]).is_err());
    }
}
