//! Analytic test densities with exact samplers.
//!
//! The catalog defines its own parameter sets for the named families used in
//! the simulation battery; parameters are frozen here and dumpable as JSON.
//! Samples are drawn with `ChaCha8Rng` seeded from `seed + replicate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::geometry::SampleSet;
use crate::metrics::Density;
use crate::wavelet::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    GaussianMixture,
    UniformBox,
    PyramidMixture,
    Comb,
    Claw,
}

/// Multivariate normal with precomputed Cholesky factor.
#[derive(Debug, Clone, Serialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    #[serde(skip)]
    chol: Vec<Vec<f64>>,
    #[serde(skip)]
    log_norm: f64,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: cov.len(),
            });
        }
        for i in 0..d {
            for j in 0..i {
                if (cov[i][j] - cov[j][i]).abs() > 1e-14 {
                    return Err(Error::InvalidParameter("covariance must be symmetric".into()));
                }
            }
        }
        let chol =
            cholesky(&cov).ok_or_else(|| Error::InvalidParameter("covariance must be positive definite".into()))?;
        let log_det: f64 = (0..d).map(|i| 2.0 * chol[i][i].ln()).sum();
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(GaussianComponent {
            weight,
            mean,
            cov,
            chol,
            log_norm,
        })
    }

    pub fn isotropic(weight: f64, mean: Vec<f64>, sd: f64) -> Result<Self> {
        let d = mean.len();
        let cov = (0..d)
            .map(|i| (0..d).map(|j| if i == j { sd * sd } else { 0.0 }).collect())
            .collect();
        Self::new(weight, mean, cov)
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        // Solve L y = x - mean.
        let d = self.mean.len();
        let mut y = vec![0.0; d];
        let mut q = 0.0;
        for i in 0..d {
            let mut v = x[i] - self.mean[i];
            for k in 0..i {
                v -= self.chol[i][k] * y[k];
            }
            y[i] = v / self.chol[i][i];
            q += y[i] * y[i];
        }
        (self.log_norm - 0.5 * q).exp()
    }

    fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.mean.len();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for i in 0..d {
            out[i] = self.mean[i] + (0..=i).map(|k| self.chol[i][k] * z[k]).sum::<f64>();
        }
    }

    fn sd(&self, axis: usize) -> f64 {
        self.cov[axis][axis].sqrt()
    }
}

fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = a.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if !(v > 0.0) {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Triangular density on `[lo, hi]` with peak at `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triangle {
    pub lo: f64,
    pub mode: f64,
    pub hi: f64,
}

impl Triangle {
    pub fn new(lo: f64, mode: f64, hi: f64) -> Result<Self> {
        if !(lo <= mode && mode <= hi && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "triangle needs lo <= mode <= hi, got ({lo}, {mode}, {hi})"
            )));
        }
        Ok(Triangle { lo, mode, hi })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let Triangle { lo, mode, hi } = *self;
        if x < lo || x > hi {
            0.0
        } else if x < mode {
            2.0 * (x - lo) / ((hi - lo) * (mode - lo))
        } else if x > mode {
            2.0 * (hi - x) / ((hi - lo) * (hi - mode))
        } else {
            2.0 / (hi - lo)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let Triangle { lo, mode, hi } = *self;
        if x <= lo {
            0.0
        } else if x >= hi {
            1.0
        } else if x <= mode {
            (x - lo).powi(2) / ((hi - lo) * (mode - lo))
        } else {
            1.0 - (hi - x).powi(2) / ((hi - lo) * (hi - mode))
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let Triangle { lo, mode, hi } = *self;
        let fc = (mode - lo) / (hi - lo);
        if u < fc {
            lo + (u * (hi - lo) * (mode - lo)).sqrt()
        } else {
            hi - ((1.0 - u) * (hi - lo) * (hi - mode)).sqrt()
        }
    }
}

/// Tensor product of triangles, one per axis.
#[derive(Debug, Clone, Serialize)]
pub struct PyramidComponent {
    pub weight: f64,
    pub axes: Vec<Triangle>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Parameters {
    Gaussian { components: Vec<GaussianComponent> },
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    Pyramid { components: Vec<PyramidComponent> },
}

/// A named density that can be evaluated and sampled exactly.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticDensity {
    pub name: String,
    pub kind: DensityKind,
    pub d: usize,
    pub parameters: Parameters,
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if !(w > 0.0) {
            return Err(Error::InvalidParameter("mixture weights must be positive".into()));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("mixture weights sum to {sum}, not 1")));
    }
    Ok(())
}

impl AnalyticDensity {
    pub fn gaussian_mixture(name: &str, kind: DensityKind, components: Vec<GaussianComponent>) -> Result<Self> {
        let d = components
            .first()
            .map(|c| c.mean.len())
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        if components.iter().any(|c| c.mean.len() != d) {
            return Err(Error::InvalidParameter("mixture components differ in dimension".into()));
        }
        check_weights(components.iter().map(|c| c.weight))?;
        Self::checked(AnalyticDensity {
            name: name.into(),
            kind,
            d,
            parameters: Parameters::Gaussian { components },
        })
    }

    pub fn uniform_box(name: &str, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let bbox = BoundingBox::new(lo.clone(), hi.clone())?;
        if !(bbox.volume() > 0.0) {
            return Err(Error::InvalidParameter("uniform box has zero volume".into()));
        }
        Self::checked(AnalyticDensity {
            name: name.into(),
            kind: DensityKind::UniformBox,
            d: lo.len(),
            parameters: Parameters::Uniform { lo, hi },
        })
    }

    pub fn pyramid_mixture(name: &str, components: Vec<PyramidComponent>) -> Result<Self> {
        let d = components
            .first()
            .map(|c| c.axes.len())
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        if components.iter().any(|c| c.axes.len() != d) {
            return Err(Error::InvalidParameter("mixture components differ in dimension".into()));
        }
        check_weights(components.iter().map(|c| c.weight))?;
        Self::checked(AnalyticDensity {
            name: name.into(),
            kind: DensityKind::PyramidMixture,
            d,
            parameters: Parameters::Pyramid { components },
        })
    }

    fn checked(self) -> Result<Self> {
        let err = (self.normalization() - 1.0).abs();
        if err > 1e-6 {
            return Err(Error::Numeric(format!(
                "density '{}' integrates to 1 only within {err:e}",
                self.name
            )));
        }
        Ok(self)
    }

    /// Integral by per-component quadrature: Gaussian components on
    /// `mean +- 12 sd` with 400 midpoint nodes per axis, pyramid components
    /// on nodes aligned with their breakpoints (exact for piecewise-linear
    /// factors).
    pub fn normalization(&self) -> f64 {
        match &self.parameters {
            Parameters::Uniform { .. } => 1.0,
            Parameters::Gaussian { components } => components
                .iter()
                .map(|c| {
                    let lo: Vec<f64> = (0..self.d).map(|a| c.mean[a] - 12.0 * c.sd(a)).collect();
                    let hi: Vec<f64> = (0..self.d).map(|a| c.mean[a] + 12.0 * c.sd(a)).collect();
                    c.weight * tensor_midpoint(&lo, &hi, 400, |x| c.pdf(x))
                })
                .sum(),
            Parameters::Pyramid { components } => components
                .iter()
                .map(|c| {
                    let per_axis: f64 = c
                        .axes
                        .iter()
                        .map(|t| {
                            let piece = |a: f64, b: f64| {
                                if b <= a {
                                    return 0.0;
                                }
                                let m = 64;
                                let h = (b - a) / m as f64;
                                (0..m).map(|k| t.pdf(a + (k as f64 + 0.5) * h)).sum::<f64>() * h
                            };
                            piece(t.lo, t.mode) + piece(t.mode, t.hi)
                        })
                        .product();
                    c.weight * per_axis
                })
                .sum(),
        }
    }

    pub fn density_eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        Ok(self.pdf_unchecked(x))
    }

    fn pdf_unchecked(&self, x: &[f64]) -> f64 {
        match &self.parameters {
            Parameters::Gaussian { components } => components.iter().map(|c| c.weight * c.pdf(x)).sum(),
            Parameters::Uniform { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| v >= l && v <= h);
                if inside {
                    1.0 / lo.iter().zip(hi).map(|(l, h)| h - l).product::<f64>()
                } else {
                    0.0
                }
            }
            Parameters::Pyramid { components } => components
                .iter()
                .map(|c| c.weight * c.axes.iter().zip(x).map(|(t, v)| t.pdf(*v)).product::<f64>())
                .sum(),
        }
    }

    /// Marginal distribution function along `axis`.
    pub fn marginal_cdf(&self, axis: usize, x: f64) -> f64 {
        match &self.parameters {
            Parameters::Gaussian { components } => components
                .iter()
                .map(|c| c.weight * std_normal_cdf((x - c.mean[axis]) / c.sd(axis)))
                .sum(),
            Parameters::Uniform { lo, hi } => ((x - lo[axis]) / (hi[axis] - lo[axis])).clamp(0.0, 1.0),
            Parameters::Pyramid { components } => components.iter().map(|c| c.weight * c.axes[axis].cdf(x)).sum(),
        }
    }

    /// `n` exact draws: mixture label first, then the component.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.d;
        let mut flat = vec![0.0; n * d];
        for row in flat.chunks_exact_mut(d) {
            match &self.parameters {
                Parameters::Gaussian { components } => {
                    let k = pick(&mut rng, components.iter().map(|c| c.weight));
                    components[k].sample(&mut rng, row);
                }
                Parameters::Uniform { lo, hi } => {
                    for a in 0..d {
                        row[a] = lo[a] + (hi[a] - lo[a]) * rng.random::<f64>();
                    }
                }
                Parameters::Pyramid { components } => {
                    let k = pick(&mut rng, components.iter().map(|c| c.weight));
                    for (a, t) in components[k].axes.iter().enumerate() {
                        row[a] = t.inverse_cdf(rng.random::<f64>());
                    }
                }
            }
        }
        SampleSet::new(flat, d)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn pick<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        acc += w;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

fn tensor_midpoint<F: Fn(&[f64]) -> f64>(lo: &[f64], hi: &[f64], nodes: usize, f: F) -> f64 {
    let d = lo.len();
    let steps: Vec<f64> = (0..d).map(|a| (hi[a] - lo[a]) / nodes as f64).collect();
    let total = nodes.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut sum = 0.0;
    for mut k in 0..total {
        for a in (0..d).rev() {
            x[a] = lo[a] + ((k % nodes) as f64 + 0.5) * steps[a];
            k /= nodes;
        }
        sum += f(&x);
    }
    sum * steps.iter().product::<f64>()
}

impl Density for AnalyticDensity {
    fn dim(&self) -> usize {
        self.d
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        self.pdf_unchecked(x)
    }

    /// Gaussian components contribute `mean +- 10 sd` per axis.
    fn support_box(&self) -> BoundingBox {
        match &self.parameters {
            Parameters::Gaussian { components } => {
                let lo = (0..self.d)
                    .map(|a| {
                        components
                            .iter()
                            .map(|c| c.mean[a] - 10.0 * c.sd(a))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                let hi = (0..self.d)
                    .map(|a| {
                        components
                            .iter()
                            .map(|c| c.mean[a] + 10.0 * c.sd(a))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect();
                BoundingBox { lo, hi }
            }
            Parameters::Uniform { lo, hi } => BoundingBox {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            Parameters::Pyramid { components } => {
                let lo = (0..self.d)
                    .map(|a| components.iter().map(|c| c.axes[a].lo).fold(f64::INFINITY, f64::min))
                    .collect();
                let hi = (0..self.d)
                    .map(|a| {
                        components
                            .iter()
                            .map(|c| c.axes[a].hi)
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect();
                BoundingBox { lo, hi }
            }
        }
    }
}

/// Names accepted by [`density_by_name`].
pub const CATALOG_NAMES: &[&str] = &[
    "std-normal",
    "std-normal-2d",
    "uniform",
    "uniform-2d",
    "2d-comb",
    "pyramids-mix",
    "2d-gauss-mix-1",
    "2d-gauss-mix-2",
    "kurtotic-mix-1",
    "mixture-2",
    "claw-2d",
    "smooth-comb-2d",
];

/// Every catalog density, in [`CATALOG_NAMES`] order.
pub fn catalog() -> Vec<AnalyticDensity> {
    CATALOG_NAMES
        .iter()
        .map(|n| density_by_name(n).expect("catalog entries are valid"))
        .collect()
}

fn g(weight: f64, mean: [f64; 2], cov: [[f64; 2]; 2]) -> GaussianComponent {
    GaussianComponent::new(weight, mean.to_vec(), cov.iter().map(|r| r.to_vec()).collect())
        .expect("catalog covariance is positive definite")
}

fn iso(weight: f64, mean: [f64; 2], sd: f64) -> GaussianComponent {
    GaussianComponent::isotropic(weight, mean.to_vec(), sd).expect("positive sd")
}

fn tri(lo: f64, mode: f64, hi: f64) -> Triangle {
    Triangle::new(lo, mode, hi).expect("ordered breakpoints")
}

/// Looks up a catalog density.
///
/// | name | definition |
/// |---|---|
/// | `std-normal`, `std-normal-2d` | N(0, I) |
/// | `uniform`, `uniform-2d` | U[0, 1]^d |
/// | `2d-comb` | 2/7 N((12l-15)/7 (1,1), (2/7)^2 I), l = 0..2; 1/21 N(2l/7 (1,1), (1/21)^2 I), l = 8..10 |
/// | `smooth-comb-2d` | 2^(5-l)/63 N(m_l (1,1), s_l^2 I), m_l = (65 - 96/2^l)/21, s_l = (32/63)/2^l, l = 0..5 |
/// | `claw-2d` | 1/2 N(0, I) + 1/10 N((l/2 - 1, 0), 0.1^2 I), l = 0..4 |
/// | `2d-gauss-mix-1` | .4 N((-1,-1), [[.5,.2],[.2,.5]]) + .4 N((1,1), [[.5,-.2],[-.2,.5]]) + .1 N((1.5,-1.5), .1^2 I) + .1 N((-1.5,1.5), .1^2 I) |
/// | `2d-gauss-mix-2` | 1/2 N((-1,0), [[1,.95],[.95,1]]) + 1/2 N((1,0), [[1,-.95],[-.95,1]]) |
/// | `kurtotic-mix-1` | .45 N((-1.2,-1.2), .6^2 I) + .35 N((1.2,1.2), .6^2 I) + .2 N((1.2,1.2), .15^2 I) |
/// | `mixture-2` | .4 N((-1,1), .5^2 I) + .3 N((1,1), diag(.3,.8)) + .3 N((0,-1), [[.8,.3],[.3,.4]]) |
/// | `pyramids-mix` | .5 T(-2,-1,0) x T(-2,-1,0) + .5 T(0,1,2.5) x T(-.5,1,2), T = triangle(lo, mode, hi) |
pub fn density_by_name(name: &str) -> Result<AnalyticDensity> {
    use DensityKind::*;
    let unknown = || Error::UnknownDensity(name.to_string());
    match name {
        "std-normal" => AnalyticDensity::gaussian_mixture(
            name,
            GaussianMixture,
            vec![GaussianComponent::isotropic(1.0, vec![0.0], 1.0)?],
        ),
        "std-normal-2d" => AnalyticDensity::gaussian_mixture(name, GaussianMixture, vec![iso(1.0, [0.0, 0.0], 1.0)]),
        "uniform" => AnalyticDensity::uniform_box(name, vec![0.0], vec![1.0]),
        "uniform-2d" => AnalyticDensity::uniform_box(name, vec![0.0, 0.0], vec![1.0, 1.0]),
        "2d-comb" => {
            let mut c: Vec<GaussianComponent> = (0..3)
                .map(|l| {
                    let m = (12.0 * l as f64 - 15.0) / 7.0;
                    iso(2.0 / 7.0, [m, m], 2.0 / 7.0)
                })
                .collect();
            c.extend((8..=10).map(|l| {
                let m = 2.0 * l as f64 / 7.0;
                iso(1.0 / 21.0, [m, m], 1.0 / 21.0)
            }));
            AnalyticDensity::gaussian_mixture(name, Comb, c)
        }
        "smooth-comb-2d" => {
            let c = (0..6)
                .map(|l| {
                    let p = 0.5f64.powi(l);
                    let m = (65.0 - 96.0 * p) / 21.0;
                    iso(2f64.powi(5 - l) / 63.0, [m, m], 32.0 / 63.0 * p)
                })
                .collect();
            AnalyticDensity::gaussian_mixture(name, Comb, c)
        }
        "claw-2d" => {
            let mut c = vec![iso(0.5, [0.0, 0.0], 1.0)];
            c.extend((0..5).map(|l| iso(0.1, [l as f64 / 2.0 - 1.0, 0.0], 0.1)));
            AnalyticDensity::gaussian_mixture(name, Claw, c)
        }
        "2d-gauss-mix-1" => AnalyticDensity::gaussian_mixture(
            name,
            GaussianMixture,
            vec![
                g(0.4, [-1.0, -1.0], [[0.5, 0.2], [0.2, 0.5]]),
                g(0.4, [1.0, 1.0], [[0.5, -0.2], [-0.2, 0.5]]),
                iso(0.1, [1.5, -1.5], 0.1),
                iso(0.1, [-1.5, 1.5], 0.1),
            ],
        ),
        "2d-gauss-mix-2" => AnalyticDensity::gaussian_mixture(
            name,
            GaussianMixture,
            vec![
                g(0.5, [-1.0, 0.0], [[1.0, 0.95], [0.95, 1.0]]),
                g(0.5, [1.0, 0.0], [[1.0, -0.95], [-0.95, 1.0]]),
            ],
        ),
        "kurtotic-mix-1" => AnalyticDensity::gaussian_mixture(
            name,
            GaussianMixture,
            vec![
                iso(0.45, [-1.2, -1.2], 0.6),
                iso(0.35, [1.2, 1.2], 0.6),
                iso(0.2, [1.2, 1.2], 0.15),
            ],
        ),
        "mixture-2" => AnalyticDensity::gaussian_mixture(
            name,
            GaussianMixture,
            vec![
                iso(0.4, [-1.0, 1.0], 0.5),
                g(0.3, [1.0, 1.0], [[0.3, 0.0], [0.0, 0.8]]),
                g(0.3, [0.0, -1.0], [[0.8, 0.3], [0.3, 0.4]]),
            ],
        ),
        "pyramids-mix" => AnalyticDensity::pyramid_mixture(
            name,
            vec![
                PyramidComponent {
                    weight: 0.5,
                    axes: vec![tri(-2.0, -1.0, 0.0), tri(-2.0, -1.0, 0.0)],
                },
                PyramidComponent {
                    weight: 0.5,
                    axes: vec![tri(0.0, 1.0, 2.5), tri(-0.5, 1.0, 2.0)],
                },
            ],
        ),
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_peak() {
        let f = density_by_name("std-normal").unwrap();
        assert!((f.density_eval(&[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!(f.density_eval(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn symmetric_mixture_point_is_component_average() {
        let f = AnalyticDensity::gaussian_mixture(
            "t",
            DensityKind::GaussianMixture,
            vec![
                GaussianComponent::isotropic(0.5, vec![-1.0], 1.0).unwrap(),
                GaussianComponent::isotropic(0.5, vec![1.0], 1.0).unwrap(),
            ],
        )
        .unwrap();
        let phi1 = 0.398_942_280_401_432_7 * (-0.5f64).exp();
        assert!((f.density_eval(&[0.0]).unwrap() - phi1).abs() < 1e-15);
    }

    #[test]
    fn pyramid_apex_value() {
        // Apex of T(-2,-1,0) x T(-2,-1,0) is (2/2)^2 = 1, weighted by 1/2;
        // the second component vanishes there.
        let f = density_by_name("pyramids-mix").unwrap();
        assert!((f.density_eval(&[-1.0, -1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn catalog_entries_integrate_to_one() {
        for f in catalog() {
            assert!((f.normalization() - 1.0).abs() < 1e-6, "{}", f.name);
        }
        assert!(matches!(density_by_name("banana"), Err(Error::UnknownDensity(_))));
    }

    #[test]
    fn kurtotic_mixture_structure() {
        let f = density_by_name("kurtotic-mix-1").unwrap();
        assert_eq!(f.d, 2);
        match &f.parameters {
            Parameters::Gaussian { components } => assert_eq!(components.len(), 3),
            _ => panic!("expected a Gaussian mixture"),
        }
        assert!(f.to_json().unwrap().contains("\"kind\": \"gaussian_mixture\""));
    }

    #[test]
    fn sampling_is_seeded() {
        let f = density_by_name("claw-2d").unwrap();
        let a = f.sample(50, 9).unwrap();
        let b = f.sample(50, 9).unwrap();
        let c = f.sample(50, 10).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
        assert_ne!(a.as_flat(), c.as_flat());
        assert!(f.sample(0, 1).is_err());
    }

    #[test]
    fn triangle_inverse_cdf_round_trips() {
        let t = tri(0.0, 1.0, 2.5);
        for k in 1..20 {
            let u = k as f64 / 20.0;
            assert!((t.cdf(t.inverse_cdf(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianComponent::new(1.0, vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(AnalyticDensity::gaussian_mixture(
            "w",
            DensityKind::GaussianMixture,
            vec![GaussianComponent::isotropic(0.7, vec![0.0], 1.0).unwrap()]
        )
        .is_err());
        assert!(Triangle::new(1.0, 0.0, 2.0).is_err());
    }
}
