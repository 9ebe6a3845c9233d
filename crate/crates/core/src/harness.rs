//! File-level commands behind the `wavedens` binary: CSV input, model and
//! curve output, and the simulation battery.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{density_by_name, AnalyticDensity};
use crate::error::{Error, Result};
use crate::estimator::ModelFile;
use crate::geometry::{build_neighbors, SampleSet};
use crate::metrics::{affinity, affinity_on_support, kde_fit_mlcv, QuadratureOptions, Transformed};
use crate::pipeline::{prepare, FitOutcome, PipelineConfig, Scaling};
use crate::selection::{oracle_curves, resolution_curves, Criterion, CvCurve, ResolutionBounds};
use crate::threshold::RuleKind;
use crate::wavelet::{WaveletBasis, WaveletFamily, DEFAULT_DEPTH};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads one observation per row. A first row with any non-numeric cell is
/// taken as a header.
pub fn parse_points<R: Read>(input: R) -> Result<SampleSet> {
    let (flat, d) = parse_matrix(input)?;
    SampleSet::new(flat, d)
}

/// Row-major values and column count, without the sample-size check.
pub fn parse_matrix<R: Read>(input: R) -> Result<(Vec<f64>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut flat = Vec::new();
    let mut d = 0;
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        if first {
            first = false;
            if parsed.iter().any(|v| v.is_err()) {
                continue;
            }
        }
        if d == 0 {
            d = parsed.len();
        } else if parsed.len() != d {
            return Err(Error::Parse {
                line,
                message: format!("expected {d} columns, found {}", parsed.len()),
            });
        }
        for (col, v) in parsed.into_iter().enumerate() {
            match v {
                Ok(v) if v.is_finite() => flat.push(v),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("column {}: '{}' is not a finite number", col + 1, &record[col]),
                    })
                }
            }
        }
    }
    if flat.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no observations".into(),
        });
    }
    Ok((flat, d))
}

pub fn read_points(path: &Path) -> Result<SampleSet> {
    parse_points(File::open(path)?)
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(Q1, median, Q3)`.
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile7(&v, 0.25), quantile7(&v, 0.5), quantile7(&v, 0.75))
}

pub fn make_basis(family: WaveletFamily) -> Result<Arc<WaveletBasis>> {
    Ok(Arc::new(WaveletBasis::new(family, DEFAULT_DEPTH)?))
}

fn rule_name(rule: Option<RuleKind>) -> String {
    rule.map_or_else(|| "none".to_string(), |r| r.to_string())
}

/// Parses `universal`, `level`, `jackknife` or `none`.
pub fn parse_rule(s: &str) -> Result<Option<RuleKind>> {
    if s == "none" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Options of `fit` and `curve`.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub basis: WaveletFamily,
    pub delta_j: i32,
    pub criterion: Criterion,
    pub rule: Option<RuleKind>,
    pub scaling: Scaling,
}

impl FitOptions {
    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::new(make_basis(self.basis)?);
        cfg.delta_j = self.delta_j;
        cfg.criterion = self.criterion;
        cfg.scaling = self.scaling;
        Ok(cfg)
    }
}

/// Summary written by `fit`.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub n: usize,
    pub d: usize,
    pub basis: String,
    pub criterion: String,
    pub j_hat: i32,
    pub j0: i32,
    pub max_resolution_criterion: f64,
    pub rule: String,
    pub tau: Option<usize>,
    pub kappa_at_cut: Option<f64>,
    pub max_tau_criterion: Option<f64>,
    /// Nonzero coefficients in the saved model.
    pub kept: usize,
    /// Coefficients before thresholding.
    pub total: usize,
}

impl FitReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s += &format!("observations      {} (d = {})\n", self.n, self.d);
        s += &format!("basis             {}\n", self.basis);
        s += &format!("criterion         {}\n", self.criterion);
        s += &format!("J-hat             {}\n", self.j_hat);
        s += &format!("j0                {}\n", self.j0);
        s += &format!("max criterion (J) {}\n", fmt_f64(self.max_resolution_criterion));
        s += &format!("rule              {}\n", self.rule);
        if let (Some(tau), Some(kappa), Some(max)) = (self.tau, self.kappa_at_cut, self.max_tau_criterion) {
            s += &format!("tau-hat           {tau}\n");
            s += &format!("kappa at cut      {}\n", fmt_f64(kappa));
            s += &format!("max criterion (t) {}\n", fmt_f64(max));
        }
        s += &format!("kept / total      {} / {}\n", self.kept, self.total);
        s
    }
}

/// Fits `sample` and returns the outcome with its report.
pub fn run_fit(sample: &SampleSet, opts: &FitOptions) -> Result<(FitOutcome, CvCurve, FitReport)> {
    let cfg = opts.pipeline()?;
    let p = prepare(sample, &cfg)?;
    let outcome = p.finish(&[opts.rule])?.remove(0);
    let curve = p.resolution_curve().clone();
    let report = FitReport {
        n: sample.len(),
        d: sample.dim(),
        basis: opts.basis.to_string(),
        criterion: opts.criterion.to_string(),
        j_hat: p.j_hat,
        j0: p.j0,
        max_resolution_criterion: curve.max_value(),
        rule: rule_name(opts.rule),
        tau: outcome.threshold.as_ref().map(|t| t.tau),
        kappa_at_cut: outcome.threshold.as_ref().map(|t| t.kappa_at_cut),
        max_tau_criterion: outcome.tau_curve.as_ref().map(|c| c.max_value()),
        kept: outcome.kept(),
        total: p.model.num_coefficients(),
    };
    Ok((outcome, curve, report))
}

/// `fit`: writes `model.json`, `resolution_curve.csv`, `report.txt`,
/// `report.json` and, with a rule, `tau_curve_<rule>.csv` and
/// `threshold.json`.
pub fn cmd_fit(input: &Path, out: &Path, opts: &FitOptions) -> Result<FitReport> {
    let sample = read_points(input)?;
    let (outcome, curve, report) = run_fit(&sample, opts)?;
    create_dir(out)?;
    write_file(&out.join("model.json"), &outcome.model_file().to_json()?)?;
    write_file(&out.join("resolution_curve.csv"), &curve.to_csv_string())?;
    if let (Some(t), Some(c)) = (&outcome.threshold, &outcome.tau_curve) {
        write_file(&out.join(&t.curve_ref), &c.to_csv_string())?;
        write_file(&out.join("threshold.json"), &serde_json::to_string_pretty(t)?)?;
    }
    write_file(&out.join("report.txt"), &report.to_text())?;
    write_file(&out.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// `eval`: squared model values at each row of `points`.
pub fn cmd_eval(model: &Path, points: &Path, out: &Path, allow_unnormalized: bool) -> Result<usize> {
    let file = ModelFile::from_json(&fs::read_to_string(model)?)?;
    if !file.model.is_normalized() && !allow_unnormalized {
        return Err(Error::InvalidParameter(
            "model is not normalized; pass --unnormalized to evaluate it anyway".into(),
        ));
    }
    let x = parse_matrix(File::open(points)?)?;
    if x.1 != file.model.dim() {
        return Err(Error::DimensionMismatch {
            expected: file.model.dim(),
            found: x.1,
        });
    }
    let mut w = BufWriter::new(File::create(out)?);
    let header: Vec<String> = (1..=x.1).map(|a| format!("x{a}")).chain(["density".into()]).collect();
    writeln!(w, "{}", header.join(","))?;
    let rows = x.0.len() / x.1;
    for row in x.0.chunks_exact(x.1) {
        let v = file.density(row)?;
        let cells: Vec<String> = row.iter().map(|&c| fmt_f64(c)).chain([fmt_f64(v)]).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(rows)
}

/// Where `curve` takes its data from.
pub enum CurveSource<'a> {
    File(&'a Path),
    Simulated { density: &'a str, n: usize, seed: u64 },
}

/// One row of the `curve` output.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub candidate: i64,
    pub b_hat: f64,
    pub b_hat_circ: f64,
    pub argmax_b_hat: bool,
    pub argmax_b_hat_circ: bool,
    /// `(B, H^2 = 1 - B, B-circ)` of the true density.
    pub oracle: Option<(f64, f64, f64)>,
}

/// `curve`: both criteria over the candidates and, for a named density,
/// the oracle curves.
pub fn curve_rows(source: CurveSource<'_>, opts: &FitOptions, candidates: Option<&[i32]>) -> Result<Vec<CurveRow>> {
    let (raw, truth): (SampleSet, Option<AnalyticDensity>) = match source {
        CurveSource::File(p) => (read_points(p)?, None),
        CurveSource::Simulated { density, n, seed } => {
            let f = density_by_name(density)?;
            (f.sample(n, seed)?, Some(f))
        }
    };
    let transform = opts.scaling.transform(&raw)?;
    let s = match &transform {
        Some(t) => t.apply_sample(&raw)?,
        None => raw,
    };
    let t = build_neighbors(&s)?;
    let basis = make_basis(opts.basis)?;
    let cands = match candidates {
        Some(c) => c.to_vec(),
        None => ResolutionBounds::new(s.len()).candidates()?,
    };
    let (norm, unnorm) = resolution_curves(&s, &t, &basis, &cands)?;
    let oracle = match &truth {
        Some(f) => {
            let q = QuadratureOptions::for_dim(s.dim());
            Some(match &transform {
                Some(tr) => {
                    let g = Transformed {
                        density: f,
                        transform: tr,
                    };
                    oracle_curves(&g, &s, &t, &basis, &cands, &q)?
                }
                None => oracle_curves(f, &s, &t, &basis, &cands, &q)?,
            })
        }
        None => None,
    };
    Ok(norm
        .candidates()
        .iter()
        .enumerate()
        .map(|(k, &j)| CurveRow {
            candidate: j,
            b_hat: norm.values()[k],
            b_hat_circ: unnorm.values()[k],
            argmax_b_hat: j == norm.argmax(),
            argmax_b_hat_circ: j == unnorm.argmax(),
            oracle: oracle
                .as_ref()
                .map(|o| (o.b.values()[k], 1.0 - o.b.values()[k], o.b_circ.values()[k])),
        })
        .collect())
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let with_oracle = rows.iter().any(|r| r.oracle.is_some());
    let mut s = String::from("candidate,b_hat,b_hat_circ,argmax_b_hat,argmax_b_hat_circ");
    if with_oracle {
        s += ",oracle_b,oracle_hellinger_sq,oracle_b_circ";
    }
    s.push('\n');
    for r in rows {
        s += &format!(
            "{},{},{},{},{}",
            r.candidate,
            fmt_f64(r.b_hat),
            fmt_f64(r.b_hat_circ),
            r.argmax_b_hat as u8,
            r.argmax_b_hat_circ as u8
        );
        if let Some((b, h, c)) = r.oracle {
            s += &format!(",{},{},{}", fmt_f64(b), fmt_f64(h), fmt_f64(c));
        }
        s.push('\n');
    }
    s
}

/// KDE baseline of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeOutcome {
    pub bandwidths: Vec<f64>,
    pub hellinger_sq: f64,
}

/// MLCV Gaussian KDE on `sample`, scored against `truth`.
pub fn kde_against(sample: &SampleSet, truth: &AnalyticDensity) -> Result<KdeOutcome> {
    let k = kde_fit_mlcv(sample)?;
    let a = affinity(&k, truth, &QuadratureOptions::for_dim(sample.dim()))?;
    Ok(KdeOutcome {
        bandwidths: k.bandwidths().to_vec(),
        hellinger_sq: a.hellinger_sq,
    })
}

/// Seed of replicate `rep`.
pub fn replicate_seed(seed: u64, rep: usize) -> u64 {
    seed.wrapping_add(rep as u64)
}

/// `kde-baseline` rows: `(n, replicate, seed, outcome)`.
pub fn kde_baseline(
    density: &str,
    ns: &[usize],
    reps: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<(usize, usize, u64, KdeOutcome)>> {
    let f = density_by_name(density)?;
    let pool = thread_pool(jobs)?;
    let mut out = Vec::new();
    for &n in ns {
        let rows: Vec<Result<_>> = pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let s = replicate_seed(seed, rep);
                    let sample = f.sample(n, s)?;
                    Ok((n, rep, s, kde_against(&sample, &f)?))
                })
                .collect()
        });
        for (rep, r) in rows.into_iter().enumerate() {
            out.push(r.map_err(|e| Error::Replicate {
                index: rep,
                source: Box::new(e),
            })?);
        }
    }
    Ok(out)
}

pub fn kde_baseline_csv(density: &str, rows: &[(usize, usize, u64, KdeOutcome)]) -> String {
    let mut s = String::from("density,n,replicate,seed,hellinger_sq,bandwidths\n");
    for (n, rep, seed, k) in rows {
        let h: Vec<String> = k.bandwidths.iter().map(|&b| fmt_f64(b)).collect();
        s += &format!(
            "{density},{n},{rep},{seed},{},{}\n",
            fmt_f64(k.hellinger_sq),
            h.join(";")
        );
    }
    s
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {jobs} worker threads: {e}")))
}

/// A simulation battery: every combination of the listed settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub density: String,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub basis: WaveletFamily,
    pub delta_js: Vec<i32>,
    pub criteria: Vec<Criterion>,
    pub rules: Vec<Option<RuleKind>>,
    pub seed: u64,
    pub scaling: Scaling,
    /// Include the KDE baseline column.
    pub kde: bool,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
}

impl RunConfig {
    /// Desk-scale defaults: 30 replicates, n in {250, 1000, 2000}.
    pub fn desk(density: &str) -> Self {
        RunConfig {
            density: density.to_string(),
            ns: vec![250, 1000, 2000],
            reps: 30,
            basis: WaveletFamily::Daubechies(4),
            delta_js: vec![1, 2, 3],
            criteria: vec![Criterion::Normalized, Criterion::Unnormalized],
            rules: vec![
                Some(RuleKind::Universal),
                Some(RuleKind::LevelDependent),
                Some(RuleKind::Jackknife),
            ],
            seed: 1,
            scaling: Scaling::UnitCube,
            kde: true,
            jobs: 0,
        }
    }

    /// The large battery: 100 replicates up to n = 6000.
    pub fn full(density: &str) -> Self {
        RunConfig {
            ns: vec![250, 500, 1000, 2000, 4000, 6000],
            reps: 100,
            ..Self::desk(density)
        }
    }

    pub fn validate(&self) -> Result<()> {
        density_by_name(&self.density)?;
        if self.reps == 0 {
            return Err(Error::InvalidParameter("need at least one replicate".into()));
        }
        if self.ns.is_empty() || self.ns.iter().any(|&n| n < 3) {
            return Err(Error::InvalidParameter("every sample size must be at least 3".into()));
        }
        if self.delta_js.is_empty() || self.delta_js.iter().any(|d| !(1..=3).contains(d)) {
            return Err(Error::InvalidParameter("delta J must be in {1, 2, 3}".into()));
        }
        if self.criteria.is_empty() || self.rules.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one criterion and one rule".into(),
            ));
        }
        Ok(())
    }
}

/// One fitted replicate in one cell of the battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub density: String,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub basis: String,
    pub criterion: String,
    pub delta_j: i32,
    pub rule: String,
    pub j_hat: i32,
    pub j0: i32,
    pub tau: Option<usize>,
    pub kept: usize,
    pub hellinger_sq: f64,
    pub kde_hellinger_sq: Option<f64>,
}

/// Quartiles of one cell over its replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub density: String,
    pub n: usize,
    pub basis: String,
    pub criterion: String,
    pub delta_j: i32,
    pub rule: String,
    pub reps: usize,
    pub h2_q1: f64,
    pub h2_median: f64,
    pub h2_q3: f64,
    pub kept_median: f64,
    pub kde_q1: Option<f64>,
    pub kde_median: Option<f64>,
    pub kde_q3: Option<f64>,
}

const LONG_HEADER: &str =
    "density,n,replicate,seed,basis,criterion,delta_j,rule,j_hat,j0,tau,kept,hellinger_sq,kde_hellinger_sq";
const SUMMARY_HEADER: &str =
    "density,n,basis,criterion,delta_j,rule,reps,h2_q1,h2_median,h2_q3,kept_median,kde_q1,kde_median,kde_q3";

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl ResultRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.density,
            self.n,
            self.replicate,
            self.seed,
            self.basis,
            self.criterion,
            self.delta_j,
            self.rule,
            self.j_hat,
            self.j0,
            self.tau.map(|t| t.to_string()).unwrap_or_default(),
            self.kept,
            fmt_f64(self.hellinger_sq),
            opt_f64(self.kde_hellinger_sq)
        )
    }
}

impl SummaryRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.density,
            self.n,
            self.basis,
            self.criterion,
            self.delta_j,
            self.rule,
            self.reps,
            fmt_f64(self.h2_q1),
            fmt_f64(self.h2_median),
            fmt_f64(self.h2_q3),
            fmt_f64(self.kept_median),
            opt_f64(self.kde_q1),
            opt_f64(self.kde_median),
            opt_f64(self.kde_q3)
        )
    }
}

/// Rows of one replicate, in (criterion, delta J, rule) order.
fn simulate_replicate(cfg: &RunConfig, f: &AnalyticDensity, n: usize, rep: usize) -> Result<Vec<ResultRow>> {
    let seed = replicate_seed(cfg.seed, rep);
    let sample = f.sample(n, seed)?;
    let kde = if cfg.kde {
        Some(kde_against(&sample, f)?.hellinger_sq)
    } else {
        None
    };
    let q = QuadratureOptions::for_dim(f.d);
    let basis = make_basis(cfg.basis)?;
    let mut rows = Vec::new();
    for &criterion in &cfg.criteria {
        for &delta_j in &cfg.delta_js {
            let mut pc = PipelineConfig::new(basis.clone());
            pc.criterion = criterion;
            pc.delta_j = delta_j;
            pc.scaling = cfg.scaling;
            let p = prepare(&sample, &pc)?;
            for outcome in p.finish(&cfg.rules)? {
                let h2 = affinity_on_support(&outcome.model_file(), f, &q)?.hellinger_sq;
                rows.push(ResultRow {
                    density: cfg.density.clone(),
                    n,
                    replicate: rep,
                    seed,
                    basis: cfg.basis.to_string(),
                    criterion: criterion.to_string(),
                    delta_j,
                    rule: rule_name(outcome.rule),
                    j_hat: outcome.j_hat,
                    j0: outcome.j0,
                    tau: outcome.threshold.as_ref().map(|t| t.tau),
                    kept: outcome.kept(),
                    hellinger_sq: h2,
                    kde_hellinger_sq: kde,
                });
            }
        }
    }
    Ok(rows)
}

/// Runs the battery; rows are ordered by (n, replicate, criterion, delta J,
/// rule) regardless of thread scheduling.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let f = density_by_name(&cfg.density)?;
    let pool = thread_pool(cfg.jobs)?;
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let per_rep: Vec<Result<Vec<ResultRow>>> = pool.install(|| {
            (0..cfg.reps)
                .into_par_iter()
                .map(|rep| simulate_replicate(cfg, &f, n, rep))
                .collect()
        });
        for (rep, r) in per_rep.into_iter().enumerate() {
            rows.extend(r.map_err(|e| Error::Replicate {
                index: rep,
                source: Box::new(e),
            })?);
        }
        log::info!("{}: n = {n} done", cfg.density);
    }
    Ok(rows)
}

/// Groups rows by (n, criterion, delta J, rule) in first-seen order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, String, i32, String)> = Vec::new();
    for r in rows {
        let k = (r.n, r.criterion.clone(), r.delta_j, r.rule.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(n, criterion, delta_j, rule)| {
            let cell: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.n == n && r.criterion == criterion && r.delta_j == delta_j && r.rule == rule)
                .collect();
            let h2: Vec<f64> = cell.iter().map(|r| r.hellinger_sq).collect();
            let (q1, med, q3) = quartiles(&h2);
            let kept: Vec<f64> = cell.iter().map(|r| r.kept as f64).collect();
            let kde: Option<Vec<f64>> = cell.iter().map(|r| r.kde_hellinger_sq).collect();
            let kq = kde.map(|k| quartiles(&k));
            SummaryRow {
                density: cell[0].density.clone(),
                n,
                basis: cell[0].basis.clone(),
                criterion,
                delta_j,
                rule,
                reps: cell.len(),
                h2_q1: q1,
                h2_median: med,
                h2_q3: q3,
                kept_median: quartiles(&kept).1,
                kde_q1: kq.map(|k| k.0),
                kde_median: kq.map(|k| k.1),
                kde_q3: kq.map(|k| k.2),
            }
        })
        .collect()
}

pub fn long_csv(rows: &[ResultRow]) -> String {
    let mut s = format!("{LONG_HEADER}\n");
    for r in rows {
        s += &r.csv();
        s.push('\n');
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        s += &r.csv();
        s.push('\n');
    }
    s
}

/// Output files of `simulate`.
#[derive(Debug, Clone)]
pub struct SimulationFiles {
    pub long: PathBuf,
    pub summary: PathBuf,
    pub density: PathBuf,
}

/// `simulate`: runs the battery and writes `results_long.csv`,
/// `results_summary.csv` and the density parameters as JSON.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SimulationFiles> {
    let rows = simulate(cfg)?;
    create_dir(out)?;
    let files = SimulationFiles {
        long: out.join("results_long.csv"),
        summary: out.join("results_summary.csv"),
        density: out.join("density.json"),
    };
    write_file(&files.long, &long_csv(&rows))?;
    write_file(&files.summary, &summary_csv(&summarize(&rows)))?;
    write_file(&files.density, &density_by_name(&cfg.density)?.to_json()?)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_detection_and_errors() {
        let s = parse_points("a,b\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(s.as_flat(), &[1.0, 2.0, 3.0, 4.0]);
        let s = parse_points("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        match parse_points("x\n1\n2\nfoo\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        match parse_points("1,2\n3\n".as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("expected 2 columns"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_points("".as_bytes()), Err(Error::Parse { .. })));
        assert!(parse_points("1\nnan\n".as_bytes()).is_err());
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile7(&v, 0.5), 2.5);
        assert_eq!(quantile7(&v, 0.25), 1.75);
        assert_eq!(quantile7(&v, 0.75), 3.25);
        assert_eq!(quartiles(&[5.0]), (5.0, 5.0, 5.0));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::desk("kurtotic-mix-1");
        assert!(c.validate().is_ok());
        c.reps = 0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::desk("nope");
        assert!(c.validate().is_err());
        c.density = "uniform".into();
        c.delta_js = vec![4];
        assert!(c.validate().is_err());
    }
}
