//! End-to-end estimation: resolution selection, multilevel fit, optional
//! hard thresholding, normalization.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimator::{fit, LooEngine, ModelFile, SqrtDensityModel, Standardization};
use crate::geometry::{build_neighbors, NeighborTable, SampleSet};
use crate::metrics::{Density, QuadratureOptions, Transformed};
use crate::selection::{oracle_curves, resolution_curves, Criterion, CvCurve, OracleCurves, ResolutionBounds};
use crate::threshold::{
    jackknife_from_table, rank_coefficients, select_tau_with, thresholded_model, RuleKind, ThresholdReport,
    ThresholdRule,
};
use crate::wavelet::WaveletBasis;

/// Affine map applied to the data before fitting. Resolution levels refer to
/// the transformed coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// Bounding box onto `[0, 1]^d`.
    UnitCube,
    /// Zero mean, unit standard deviation per coordinate.
    ZScore,
    /// Raw coordinates.
    Identity,
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::UnitCube => "unit",
            Scaling::ZScore => "zscore",
            Scaling::Identity => "none",
        })
    }
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Scaling::UnitCube),
            "zscore" => Ok(Scaling::ZScore),
            "none" => Ok(Scaling::Identity),
            _ => Err(Error::InvalidParameter(format!(
                "unknown scaling '{s}' (expected unit, zscore or none)"
            ))),
        }
    }
}

impl Scaling {
    pub fn transform(&self, s: &SampleSet) -> Result<Option<Standardization>> {
        match self {
            Scaling::UnitCube => Standardization::unit_cube(s).map(Some),
            Scaling::ZScore => Standardization::from_sample(s).map(Some),
            Scaling::Identity => Ok(None),
        }
    }
}

/// Settings shared by every fit.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub basis: Arc<WaveletBasis>,
    pub scaling: Scaling,
    /// `J - j0`.
    pub delta_j: i32,
    pub criterion: Criterion,
    pub epsilon: f64,
    pub c_prime: f64,
}

impl PipelineConfig {
    pub fn new(basis: Arc<WaveletBasis>) -> Self {
        PipelineConfig {
            basis,
            scaling: Scaling::UnitCube,
            delta_j: 2,
            criterion: Criterion::Normalized,
            epsilon: ResolutionBounds::DEFAULT_EPSILON,
            c_prime: ResolutionBounds::DEFAULT_C_PRIME,
        }
    }
}

/// Resolution selected and the unthresholded multilevel fit, ready for any
/// number of thresholding rules.
pub struct Prepared {
    sample: SampleSet,
    transform: Option<Standardization>,
    neighbors: NeighborTable,
    config: PipelineConfig,
    /// `B-hat(J)` over the candidates.
    pub curve_norm: CvCurve,
    /// `B-hat-circ(J)` over the candidates.
    pub curve_unnorm: CvCurve,
    pub j_hat: i32,
    pub j0: i32,
    /// Unnormalized fit on levels `j0..=J-hat`.
    pub model: SqrtDensityModel,
}

/// Final estimate for one rule.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Normalized model, in transformed coordinates.
    pub model: SqrtDensityModel,
    pub transform: Option<Standardization>,
    pub j_hat: i32,
    pub j0: i32,
    pub rule: Option<RuleKind>,
    pub tau_curve: Option<CvCurve>,
    pub threshold: Option<ThresholdReport>,
}

impl FitOutcome {
    /// Nonzero coefficients (alphas and betas) in the final model.
    pub fn kept(&self) -> usize {
        self.model.kept_count()
    }

    /// Model plus transform; evaluates in data coordinates.
    pub fn model_file(&self) -> ModelFile {
        ModelFile::new(self.model.clone(), self.transform.clone())
    }
}

/// Transforms the data, selects `J-hat` with the configured criterion and
/// fits levels `J-hat - delta_j ..= J-hat`.
pub fn prepare(raw: &SampleSet, config: &PipelineConfig) -> Result<Prepared> {
    if raw.len() < 3 {
        return Err(Error::TooFewPoints { n: raw.len(), min: 3 });
    }
    if config.delta_j < 0 {
        return Err(Error::InvalidParameter(format!(
            "delta J must be >= 0, got {}",
            config.delta_j
        )));
    }
    let transform = config.scaling.transform(raw)?;
    let sample = match &transform {
        Some(t) => t.apply_sample(raw)?,
        None => raw.clone(),
    };
    let s = &sample;
    let neighbors = build_neighbors(s)?;
    let candidates = ResolutionBounds::new(s.len())
        .with_epsilon(config.epsilon, config.c_prime)
        .candidates()?;
    let (curve_norm, curve_unnorm) = resolution_curves(s, &neighbors, &config.basis, &candidates)?;
    let j_hat = match config.criterion {
        Criterion::Normalized => curve_norm.argmax(),
        Criterion::Unnormalized => curve_unnorm.argmax(),
    } as i32;
    let j0 = j_hat - config.delta_j;
    let model = fit(s, &neighbors, &config.basis, j0, j_hat)?;
    Ok(Prepared {
        sample,
        transform,
        neighbors,
        config: config.clone(),
        curve_norm,
        curve_unnorm,
        j_hat,
        j0,
        model,
    })
}

impl Prepared {
    /// The sample in transformed coordinates.
    pub fn sample(&self) -> &SampleSet {
        &self.sample
    }

    pub fn transform(&self) -> Option<&Standardization> {
        self.transform.as_ref()
    }

    pub fn neighbors(&self) -> &NeighborTable {
        &self.neighbors
    }

    pub fn basis(&self) -> &Arc<WaveletBasis> {
        &self.config.basis
    }

    /// The curve of the configured criterion.
    pub fn resolution_curve(&self) -> &CvCurve {
        match self.config.criterion {
            Criterion::Normalized => &self.curve_norm,
            Criterion::Unnormalized => &self.curve_unnorm,
        }
    }

    /// Oracle curves of `density` (given in data coordinates) over the same
    /// candidates as the empirical curves.
    pub fn oracle(&self, density: &dyn Density, opts: &QuadratureOptions) -> Result<OracleCurves> {
        let candidates: Vec<i32> = self.curve_norm.candidates().iter().map(|&j| j as i32).collect();
        match &self.transform {
            Some(t) => {
                let f = Transformed { density, transform: t };
                oracle_curves(&f, &self.sample, &self.neighbors, &self.config.basis, &candidates, opts)
            }
            None => oracle_curves(
                density,
                &self.sample,
                &self.neighbors,
                &self.config.basis,
                &candidates,
                opts,
            ),
        }
    }

    /// One outcome per rule (`None` keeps every coefficient), sharing the
    /// leave-one-out table across rules.
    pub fn finish(&self, rules: &[Option<RuleKind>]) -> Result<Vec<FitOutcome>> {
        let needs_scan = rules.iter().any(|r| r.is_some());
        let engine;
        let table;
        let loo = if needs_scan && !self.model.beta_ids().is_empty() {
            engine = LooEngine::new(&self.sample, &self.neighbors, &self.model)?;
            table = engine.table();
            Some((&engine, &table))
        } else {
            None
        };
        let n = self.sample.len();
        rules
            .iter()
            .map(|&rule| {
                let base = FitOutcome {
                    model: self.model.normalize()?,
                    transform: self.transform.clone(),
                    j_hat: self.j_hat,
                    j0: self.j0,
                    rule,
                    tau_curve: None,
                    threshold: None,
                };
                let (Some(kind), Some((engine, table))) = (rule, loo) else {
                    return Ok(base);
                };
                let rule = match kind {
                    RuleKind::Universal => ThresholdRule::Universal,
                    RuleKind::LevelDependent => ThresholdRule::LevelDependent,
                    RuleKind::Jackknife => ThresholdRule::Jackknife(jackknife_from_table(&self.model, table, n)),
                };
                let ranked = rank_coefficients(&self.model, &rule, n)?;
                let curve = select_tau_with(engine, table, &ranked, self.config.criterion)?;
                let tau = curve.argmax() as usize;
                let model = thresholded_model(&self.model, &ranked, tau)?.normalize()?;
                Ok(FitOutcome {
                    model,
                    threshold: Some(ThresholdReport::new(
                        kind,
                        &ranked,
                        tau,
                        format!("tau_curve_{kind}.csv"),
                    )),
                    tau_curve: Some(curve),
                    ..base
                })
            })
            .collect()
    }
}

/// [`prepare`] followed by a single rule.
pub fn fit_auto(s: &SampleSet, config: &PipelineConfig, rule: Option<RuleKind>) -> Result<FitOutcome> {
    let p = prepare(s, config)?;
    Ok(p.finish(&[rule])?.remove(0))
}
