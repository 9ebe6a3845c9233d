use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wavedens::harness::{
    cmd_eval, cmd_fit, cmd_simulate, curve_csv, curve_rows, kde_baseline, kde_baseline_csv, parse_rule, read_points,
    CurveSource, FitOptions, RunConfig,
};
use wavedens::metrics::kde_fit_mlcv;
use wavedens::selection::Criterion;
use wavedens::{Error, Result, WaveletFamily};

#[derive(Parser)]
#[command(name = "wavedens", version, about = "Shape-preserving wavelet density estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select J, threshold, normalize and save a model.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "fit_out")]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// universal, level, jackknife or none.
        #[arg(long, default_value = "jackknife")]
        rule: String,
    },
    /// Run a simulation battery against a catalog density.
    Simulate {
        #[arg(long)]
        density: String,
        /// Sample sizes (comma separated).
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value = "db4")]
        basis: String,
        #[arg(long = "delta-j", value_delimiter = ',')]
        delta_j: Option<Vec<i32>>,
        #[arg(long, value_delimiter = ',')]
        criterion: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        rule: Option<Vec<String>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "sim_out")]
        out: PathBuf,
        /// Worker threads (0: all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Large battery (100 replicates, n up to 6000).
        #[arg(long)]
        full: bool,
        /// Skip the KDE baseline column.
        #[arg(long = "no-kde")]
        no_kde: bool,
        /// unit, zscore or none.
        #[arg(long, default_value = "unit")]
        scale: String,
    },
    /// Evaluate a saved model at the rows of a CSV file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "densities.csv")]
        out: PathBuf,
        /// Allow models that were not normalized.
        #[arg(long)]
        unnormalized: bool,
    },
    /// Both resolution criteria per J, plus oracle curves for a named density.
    Curve {
        #[arg(long, conflicts_with = "density")]
        input: Option<PathBuf>,
        #[arg(long, requires = "n")]
        density: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
        /// Explicit J candidates (comma separated).
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<i32>>,
        #[arg(long, default_value = "curve.csv")]
        out: PathBuf,
    },
    /// MLCV Gaussian KDE: bandwidths of a CSV sample, or Hellinger distances
    /// over simulated replicates.
    #[command(name = "kde-baseline")]
    KdeBaseline {
        #[arg(long, conflicts_with = "density")]
        input: Option<PathBuf>,
        #[arg(long)]
        density: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "1000")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = "kde_baseline.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "db4")]
    basis: String,
    #[arg(long = "delta-j", default_value_t = 2)]
    delta_j: i32,
    /// norm or unnorm.
    #[arg(long, default_value = "norm")]
    criterion: String,
    /// unit, zscore or none.
    #[arg(long, default_value = "unit")]
    scale: String,
}

impl ModelArgs {
    fn options(&self, rule: Option<&str>) -> Result<FitOptions> {
        Ok(FitOptions {
            basis: self.basis.parse()?,
            delta_j: self.delta_j,
            criterion: self.criterion.parse()?,
            rule: rule.map(parse_rule).transpose()?.flatten(),
            scaling: self.scale.parse()?,
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            input,
            out,
            model,
            rule,
        } => {
            let report = cmd_fit(&input, &out, &model.options(Some(&rule))?)?;
            print!("{}", report.to_text());
            println!("wrote {}", out.display());
        }
        Command::Simulate {
            density,
            n,
            reps,
            basis,
            delta_j,
            criterion,
            rule,
            seed,
            out,
            jobs,
            full,
            no_kde,
            scale,
        } => {
            let mut cfg = if full {
                RunConfig::full(&density)
            } else {
                RunConfig::desk(&density)
            };
            if let Some(n) = n {
                cfg.ns = n;
            }
            if let Some(r) = reps {
                cfg.reps = r;
            }
            cfg.basis = basis.parse::<WaveletFamily>()?;
            if let Some(d) = delta_j {
                cfg.delta_js = d;
            }
            if let Some(c) = criterion {
                cfg.criteria = c.iter().map(|s| s.parse::<Criterion>()).collect::<Result<_>>()?;
            }
            if let Some(r) = rule {
                cfg.rules = r.iter().map(|s| parse_rule(s)).collect::<Result<_>>()?;
            }
            cfg.seed = seed;
            cfg.jobs = jobs;
            cfg.kde = !no_kde;
            cfg.scaling = scale.parse()?;
            let files = cmd_simulate(&cfg, &out)?;
            println!("wrote {} and {}", files.long.display(), files.summary.display());
        }
        Command::Eval {
            model,
            points,
            out,
            unnormalized,
        } => {
            let rows = cmd_eval(&model, &points, &out, unnormalized)?;
            println!("evaluated {rows} points into {}", out.display());
        }
        Command::Curve {
            input,
            density,
            n,
            seed,
            model,
            candidates,
            out,
        } => {
            let source = match (&input, &density, n) {
                (Some(p), _, _) => CurveSource::File(p),
                (None, Some(d), Some(n)) => CurveSource::Simulated { density: d, n, seed },
                _ => {
                    return Err(Error::InvalidParameter(
                        "curve needs --input or --density with --n".into(),
                    ))
                }
            };
            let rows = curve_rows(source, &model.options(None)?, candidates.as_deref())?;
            fs::write(&out, curve_csv(&rows))?;
            println!("wrote {} ({} candidates)", out.display(), rows.len());
        }
        Command::KdeBaseline {
            input,
            density,
            n,
            reps,
            seed,
            jobs,
            out,
        } => match (input, density) {
            (Some(p), _) => {
                let k = kde_fit_mlcv(&read_points(&p)?)?;
                let mut s = String::from("axis,bandwidth\n");
                for (a, h) in k.bandwidths().iter().enumerate() {
                    s += &format!("{},{}\n", a + 1, wavedens::harness::fmt_f64(*h));
                }
                fs::write(&out, s)?;
                println!("wrote {}", out.display());
            }
            (None, Some(d)) => {
                let rows = kde_baseline(&d, &n, reps, seed, jobs)?;
                fs::write(&out, kde_baseline_csv(&d, &rows))?;
                println!("wrote {} ({} replicates)", out.display(), rows.len());
            }
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "kde-baseline needs --input or --density".into(),
                ))
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
