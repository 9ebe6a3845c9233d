//! Hard thresholding of detail coefficients, with the cut chosen by the same
//! leave-one-out criteria as the resolution.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{LooEngine, LooTable, SqrtDensityModel};
use crate::geometry::{NeighborTable, SampleSet};
use crate::selection::{Criterion, CvCurve};
use crate::wavelet::BasisIndex;

/// Largest coefficient count scanned at every `tau`.
pub const FULL_SCAN_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Universal,
    LevelDependent,
    Jackknife,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Universal => "universal",
            RuleKind::LevelDependent => "level",
            RuleKind::Jackknife => "jackknife",
        })
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "universal" => Ok(RuleKind::Universal),
            "level" | "level-dependent" | "level_dependent" => Ok(RuleKind::LevelDependent),
            "jackknife" => Ok(RuleKind::Jackknife),
            _ => Err(Error::InvalidParameter(format!(
                "unknown threshold rule '{s}' (expected universal, level or jackknife)"
            ))),
        }
    }
}

/// Statistic used to rank detail coefficients.
#[derive(Debug, Clone)]
pub enum ThresholdRule {
    /// `sqrt(n) |beta|`.
    Universal,
    /// `sqrt(n) |beta| / sqrt(j - j0 + 1)`.
    LevelDependent,
    /// `|beta| / sigma_jack`.
    Jackknife(JackknifeVariance),
}

impl ThresholdRule {
    pub fn kind(&self) -> RuleKind {
        match self {
            ThresholdRule::Universal => RuleKind::Universal,
            ThresholdRule::LevelDependent => RuleKind::LevelDependent,
            ThresholdRule::Jackknife(_) => RuleKind::Jackknife,
        }
    }

    /// `gamma_j` of the universal and level-dependent rules.
    pub fn gamma(&self, level: i32, j0: i32) -> f64 {
        match self {
            ThresholdRule::LevelDependent => ((level - j0 + 1) as f64).sqrt(),
            _ => 1.0,
        }
    }
}

/// One ranked detail coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    /// Coefficient id in the model.
    pub id: usize,
    pub index: BasisIndex,
    pub value: f64,
    pub statistic: f64,
    /// Zero coefficient with zero jackknife spread; ranked after everything else.
    pub degenerate: bool,
}

/// Detail coefficients sorted by decreasing statistic.
#[derive(Debug, Clone)]
pub struct RankedCoefficients {
    entries: Vec<RankedEntry>,
}

impl RankedCoefficients {
    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    /// Number of ranked coefficients `T`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn statistics(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.statistic).collect()
    }

    /// Statistic of the first dropped coefficient, or 0 when nothing is dropped.
    pub fn kappa_at_cut(&self, tau: usize) -> f64 {
        self.entries.get(tau).map_or(0.0, |e| e.statistic)
    }
}

/// Statistic rounded to 36 mantissa bits. Ranking compares these keys so that
/// statistics equal up to rounding fall through to the index tiebreak.
pub fn tie_key(statistic: f64) -> f64 {
    if !statistic.is_finite() || statistic == 0.0 {
        return statistic;
    }
    const DROP: u32 = 16;
    let bits = statistic.to_bits();
    f64::from_bits((bits + (1 << (DROP - 1))) & !((1u64 << DROP) - 1))
}

fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    a.degenerate
        .cmp(&b.degenerate)
        .then(tie_key(b.statistic).total_cmp(&tie_key(a.statistic)))
        .then_with(|| a.index.sort_key().cmp(&b.index.sort_key()))
}

/// Ranks every detail coefficient of `m` by the statistic of `rule`.
pub fn rank_coefficients(m: &SqrtDensityModel, rule: &ThresholdRule, n: usize) -> Result<RankedCoefficients> {
    if m.is_normalized() {
        return Err(Error::InvalidParameter(
            "thresholding statistics use the unnormalized coefficients".into(),
        ));
    }
    let root_n = (n as f64).sqrt();
    let j0 = m.coarse_level();
    let mut entries: Vec<RankedEntry> = m
        .beta_ids()
        .into_par_iter()
        .map(|id| {
            let index = m.index_of(id);
            let value = m.value(id);
            let (statistic, degenerate) = match rule {
                ThresholdRule::Jackknife(jack) => {
                    let sigma = jack.sigma2(id).map(f64::sqrt).ok_or_else(|| {
                        Error::InvalidParameter(format!("no jackknife variance for coefficient {id}"))
                    })?;
                    if sigma > 0.0 {
                        (value.abs() / sigma, false)
                    } else if value != 0.0 {
                        (f64::INFINITY, false)
                    } else {
                        (0.0, true)
                    }
                }
                _ => (root_n * value.abs() / rule.gamma(index.level, j0), false),
            };
            Ok(RankedEntry {
                id,
                index,
                value,
                statistic,
                degenerate,
            })
        })
        .collect::<Result<_>>()?;
    entries.sort_by(rank_order);
    Ok(RankedCoefficients { entries })
}

/// Number of statistics strictly above `kappa`.
pub fn tau_of_kappa(r: &RankedCoefficients, kappa: f64) -> usize {
    r.entries.iter().filter(|e| e.statistic > kappa).count()
}

/// `m` with only its father coefficients and the first `tau` ranked details.
pub fn thresholded_model(m: &SqrtDensityModel, r: &RankedCoefficients, tau: usize) -> Result<SqrtDensityModel> {
    if tau > r.len() {
        return Err(Error::InvalidParameter(format!(
            "tau = {tau} exceeds the {} ranked coefficients",
            r.len()
        )));
    }
    if tau == r.len() {
        return Ok(m.clone());
    }
    let mut values = m.values_flat();
    for e in &r.entries[tau..] {
        values[e.id] = 0.0;
    }
    m.with_values(&values)
}

/// Jackknife spread of every detail coefficient.
///
/// Pseudo-values are `p_i = n beta - (n - 1) beta^(-i)`; `v^2` is their sample
/// variance (denominator `n - 1`) and `sigma^2 = v^2 / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JackknifeVariance {
    first_id: usize,
    mean: Vec<f64>,
    v2: Vec<f64>,
    n: usize,
}

impl JackknifeVariance {
    pub fn mean(&self, id: usize) -> Option<f64> {
        id.checked_sub(self.first_id).and_then(|k| self.mean.get(k).copied())
    }

    pub fn v2(&self, id: usize) -> Option<f64> {
        id.checked_sub(self.first_id).and_then(|k| self.v2.get(k).copied())
    }

    pub fn sigma2(&self, id: usize) -> Option<f64> {
        self.v2(id).map(|v| v / self.n as f64)
    }

    pub fn len(&self) -> usize {
        self.v2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v2.is_empty()
    }
}

/// Mean and sample variance of pseudo-values given every leave-one-out value.
pub fn pseudo_value_stats(full: f64, loo: &[f64]) -> (f64, f64) {
    let n = loo.len() as f64;
    let p: Vec<f64> = loo.iter().map(|b| n * full - (n - 1.0) * b).collect();
    let mean = p.iter().sum::<f64>() / n;
    let v2 = p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, v2)
}

/// Jackknife variances of all detail coefficients of `m`.
pub fn jackknife_variances(s: &SampleSet, t: &NeighborTable, m: &SqrtDensityModel) -> Result<JackknifeVariance> {
    let engine = LooEngine::new(s, t, m)?;
    Ok(jackknife_from_table(m, &engine.table(), s.len()))
}

/// Jackknife variances from a precomputed leave-one-out table.
///
/// Observations absent from a coefficient's row leave it unchanged up to the
/// factor `s`, so they share the pseudo-value `beta (n - (n - 1) s)`.
pub fn jackknife_from_table(m: &SqrtDensityModel, table: &LooTable, n: usize) -> JackknifeVariance {
    let nf = n as f64;
    let scale = (nf / (nf - 1.0)).sqrt();
    let ids = m.beta_ids();
    let stats: Vec<(f64, f64)> = ids
        .clone()
        .into_par_iter()
        .map(|id| {
            let beta = m.value(id);
            let base = beta * (nf - (nf - 1.0) * scale);
            let shift = (nf - 1.0) * scale;
            let mut present = 0usize;
            let mut sum_delta = 0.0;
            for e in table.row(id) {
                present += 1;
                sum_delta += e.delta;
            }
            let mean = base - shift * sum_delta / nf;
            let mut ss = (n - present) as f64 * (base - mean).powi(2);
            for e in table.row(id) {
                ss += (base - shift * e.delta - mean).powi(2);
            }
            (mean, ss / (nf - 1.0))
        })
        .collect();
    JackknifeVariance {
        first_id: ids.start,
        mean: stats.iter().map(|s| s.0).collect(),
        v2: stats.iter().map(|s| s.1).collect(),
        n,
    }
}

/// Candidate `tau` values: all of `0..=T` when `T` is small, otherwise every
/// `tau <= 64`, the halvings `floor(T 2^-k)` and an even stride of about
/// `T / 256`.
pub fn tau_grid(total: usize) -> Vec<usize> {
    if total <= FULL_SCAN_LIMIT {
        return (0..=total).collect();
    }
    let mut grid: Vec<usize> = (0..=64).collect();
    let mut k = total;
    while k > 64 {
        grid.push(k);
        k /= 2;
    }
    let stride = total.div_ceil(256);
    grid.extend((0..=total).step_by(stride));
    grid.push(total);
    grid.sort_unstable();
    grid.dedup();
    grid
}

struct ScanState<'a> {
    table: &'a LooTable,
    weights: &'a [f64],
    scale: f64,
    values: Vec<f64>,
    v: Vec<f64>,
    extra: Vec<f64>,
    global: f64,
}

impl<'a> ScanState<'a> {
    fn new(engine: &'a LooEngine<'_>, table: &'a LooTable) -> Self {
        let n = engine.len();
        ScanState {
            table,
            weights: engine.weights(),
            scale: engine.scale(),
            values: engine.model().values_flat(),
            v: vec![0.0; n],
            extra: vec![0.0; n],
            global: 0.0,
        }
    }

    fn add(&mut self, id: usize) {
        let c = self.values[id];
        self.global += c * c;
        for e in self.table.row(id) {
            self.v[e.point] += (c + e.delta) * e.basis_value;
            if e.delta != 0.0 {
                self.extra[e.point] += 2.0 * c * e.delta + e.delta * e.delta;
            }
        }
    }

    fn criterion(&self, criterion: Criterion) -> f64 {
        let terms: Vec<f64> = (0..self.v.len())
            .into_par_iter()
            .map(|i| {
                let w = self.weights[i];
                if w == 0.0 {
                    return 0.0;
                }
                match criterion {
                    Criterion::Normalized => {
                        let m = self.global + self.extra[i];
                        if m > 0.0 {
                            w * self.v[i].abs() / m.sqrt()
                        } else {
                            0.0
                        }
                    }
                    Criterion::Unnormalized => w * self.scale * self.v[i].abs(),
                }
            })
            .collect();
        let sum: f64 = terms.iter().sum();
        match criterion {
            Criterion::Normalized => sum,
            Criterion::Unnormalized => sum - 0.5 * self.global,
        }
    }
}

fn scan(
    engine: &LooEngine<'_>,
    table: &LooTable,
    r: &RankedCoefficients,
    criterion: Criterion,
    taus: &[usize],
) -> Vec<f64> {
    let mut state = ScanState::new(engine, table);
    for id in engine.model().alpha_ids() {
        state.add(id);
    }
    let mut out = Vec::with_capacity(taus.len());
    let mut added = 0;
    for &tau in taus {
        while added < tau {
            state.add(r.entries[added].id);
            added += 1;
        }
        out.push(state.criterion(criterion));
    }
    out
}

/// Scans the leave-one-out criterion over `tau` with a fixed ranking.
pub fn select_tau(
    s: &SampleSet,
    t: &NeighborTable,
    m: &SqrtDensityModel,
    r: &RankedCoefficients,
    criterion: Criterion,
) -> Result<CvCurve> {
    let engine = LooEngine::new(s, t, m)?;
    let table = engine.table();
    select_tau_with(&engine, &table, r, criterion)
}

/// [`select_tau`] reusing a leave-one-out engine and table.
pub fn select_tau_with(
    engine: &LooEngine<'_>,
    table: &LooTable,
    r: &RankedCoefficients,
    criterion: Criterion,
) -> Result<CvCurve> {
    let total = r.len();
    let grid = tau_grid(total);
    let mut values = scan(engine, table, r, criterion, &grid);
    let mut taus = grid.clone();
    if total > FULL_SCAN_LIMIT {
        let coarse = CvCurve::new(to_i64(&grid), values.clone())?;
        let k = grid.iter().position(|&g| g as i64 == coarse.argmax()).unwrap();
        let lo = if k == 0 { 0 } else { grid[k - 1] };
        let hi = grid.get(k + 1).copied().unwrap_or(total);
        let fine: Vec<usize> = (lo..=hi).filter(|x| grid.binary_search(x).is_err()).collect();
        if !fine.is_empty() {
            let extra = scan(engine, table, r, criterion, &fine);
            let mut merged: Vec<(usize, f64)> = grid
                .iter()
                .copied()
                .zip(values)
                .chain(fine.into_iter().zip(extra))
                .collect();
            merged.sort_by_key(|p| p.0);
            taus = merged.iter().map(|p| p.0).collect();
            values = merged.iter().map(|p| p.1).collect();
        }
    }
    CvCurve::new(to_i64(&taus), values)
}

fn to_i64(v: &[usize]) -> Vec<i64> {
    v.iter().map(|&x| x as i64).collect()
}

/// Summary of one thresholding run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub rule: String,
    pub tau: usize,
    pub kappa_at_cut: f64,
    /// Detail coefficients kept.
    pub kept: usize,
    /// Detail coefficients dropped.
    pub dropped: usize,
    pub curve_ref: String,
}

impl ThresholdReport {
    pub fn new(rule: RuleKind, r: &RankedCoefficients, tau: usize, curve_ref: impl Into<String>) -> Self {
        ThresholdReport {
            rule: rule.to_string(),
            tau,
            kappa_at_cut: r.kappa_at_cut(tau),
            kept: tau,
            dropped: r.len() - tau,
            curve_ref: curve_ref.into(),
        }
    }
}
