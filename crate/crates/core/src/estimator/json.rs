use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::SqrtDensityModel;
use crate::error::{Error, Result};
use crate::geometry::SampleSet;
use crate::wavelet::{BasisIndex, WaveletBasis, WaveletFamily, DEFAULT_DEPTH};

/// Per-coordinate affine map `y = (x - shift) / scale` applied to the data
/// before fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Centers on the sample mean and divides by the sample standard deviation.
    pub fn from_sample(s: &SampleSet) -> Result<Self> {
        let scale = s.std_dev();
        if let Some(a) = scale.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::DegenerateCoordinate(a));
        }
        Ok(Standardization { shift: s.mean(), scale })
    }

    /// Maps the sample's bounding box onto `[0, 1]^d`.
    pub fn unit_cube(s: &SampleSet) -> Result<Self> {
        let b = s.bbox();
        let scale: Vec<f64> = (0..s.dim()).map(|a| b.width(a)).collect();
        if let Some(a) = scale.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::DegenerateCoordinate(a));
        }
        Ok(Standardization {
            shift: b.lo.clone(),
            scale,
        })
    }

    /// Inverse of [`Standardization::apply`].
    pub fn invert(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply_sample(&self, s: &SampleSet) -> Result<SampleSet> {
        let flat: Vec<f64> = s.rows().flat_map(|x| self.apply(x)).collect();
        SampleSet::new(flat, s.dim())
    }

    /// Factor converting a density in standardized units back to data units.
    pub fn jacobian(&self) -> f64 {
        1.0 / self.scale.iter().product::<f64>()
    }
}

#[derive(Serialize, Deserialize)]
struct CoefficientJson {
    j: i32,
    z: Vec<i64>,
    q: u32,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    basis: String,
    d: usize,
    j0: i32,
    #[serde(rename = "J")]
    j: i32,
    normalized: bool,
    coeff_norm: f64,
    #[serde(default = "default_depth")]
    depth: u32,
    coefficients: Vec<CoefficientJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transform: Option<Standardization>,
}

fn default_depth() -> u32 {
    DEFAULT_DEPTH
}

/// A model together with the data transform it was fitted under.
///
/// Only nonzero coefficients are written. Floats use the shortest decimal
/// representation that parses back to the same bits.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: SqrtDensityModel,
    pub transform: Option<Standardization>,
}

impl ModelFile {
    pub fn new(model: SqrtDensityModel, transform: Option<Standardization>) -> Self {
        ModelFile { model, transform }
    }

    pub fn to_json(&self) -> Result<String> {
        let m = &self.model;
        let coefficients = m
            .coefficients()
            .filter(|(_, v)| *v != 0.0)
            .map(|(idx, value)| CoefficientJson {
                j: idx.level,
                z: idx.translation,
                q: idx.kind,
                value,
            })
            .collect();
        let j = if m.is_single_level() {
            m.coarse_level() - 1
        } else {
            m.finest_level()
        };
        let doc = ModelJson {
            basis: m.basis().family().name(),
            d: m.dim(),
            j0: m.coarse_level(),
            j,
            normalized: m.is_normalized(),
            coeff_norm: m.coeff_norm(),
            depth: m.basis().depth(),
            coefficients,
            transform: self.transform.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelJson = serde_json::from_str(text)?;
        let family: WaveletFamily = doc.basis.parse()?;
        let basis = Arc::new(WaveletBasis::new(family, doc.depth)?);
        Self::from_doc(doc, basis)
    }

    /// Like [`ModelFile::from_json`] but reuses `basis` when the family and depth match.
    pub fn from_json_with_basis(text: &str, basis: &Arc<WaveletBasis>) -> Result<Self> {
        let doc: ModelJson = serde_json::from_str(text)?;
        let family: WaveletFamily = doc.basis.parse()?;
        if family != basis.family() || doc.depth != basis.depth() {
            return Self::from_json(text);
        }
        Self::from_doc(doc, basis.clone())
    }

    fn from_doc(doc: ModelJson, basis: Arc<WaveletBasis>) -> Result<Self> {
        if let Some(t) = &doc.transform {
            if t.shift.len() != doc.d || t.scale.len() != doc.d {
                return Err(Error::DimensionMismatch {
                    expected: doc.d,
                    found: t.shift.len().min(t.scale.len()),
                });
            }
        }
        let entries = doc
            .coefficients
            .into_iter()
            .map(|c| {
                if c.z.len() != doc.d {
                    return Err(Error::DimensionMismatch {
                        expected: doc.d,
                        found: c.z.len(),
                    });
                }
                Ok((BasisIndex::new(c.j, c.z, c.q)?, c.value))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = SqrtDensityModel::from_coefficients(basis, doc.d, doc.j0, doc.j, doc.normalized, &entries)?;
        Ok(ModelFile {
            model,
            transform: doc.transform,
        })
    }

    /// Density in data units.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        match &self.transform {
            None => self.model.density(x),
            Some(t) => Ok(self.model.density(&t.apply(x))? * t.jacobian()),
        }
    }
}
