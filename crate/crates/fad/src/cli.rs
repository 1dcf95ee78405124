//! `fad` subcommands.
//!
//! Exit codes: 0 on success, 1 on usage or runtime errors, 2 when a
//! benchmark finished with failed cells.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fad_core::detector::{DetectorConfig, DetectorKind, DetectorParams, FittedDetector};
use fad_core::featuremaps::{FeatureMap, MapKind};
use fad_core::integrated::BaseDepth;
use fad_core::metrics;
use fad_core::simulate::{self, AnomalyModel, NormalBase};
use fad_core::Grid;

use crate::bench::{self, AlphaRule, BenchConfig};
use crate::error::{FadError, Result};
use crate::io::{self, GridSource};
use crate::svg::{self, Series};

#[derive(Debug, Parser)]
#[command(name = "fad", version, about = "Anomaly detection benchmarks for functional data")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FAD_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a contaminated synthetic dataset.
    Simulate(SimulateArgs),
    /// Fit a detector and save the model as JSON.
    Fit(FitArgs),
    /// Score curves with a saved model.
    Score(ScoreArgs),
    /// Run every detector on every dataset of a JSON config.
    Bench(BenchArgs),
    /// Draw ROC/PR overlays or MS/FOM scatter plots.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaseKind {
    Smooth,
    Ar,
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let f: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(format!("fraction {f} must lie in (0, 1)"))
    }
}

fn parse_model(s: &str) -> std::result::Result<AnomalyModel, String> {
    s.parse::<AnomalyModel>().map_err(|e| e.to_string())
}

fn parse_detector(s: &str) -> std::result::Result<DetectorKind, String> {
    s.parse::<DetectorKind>().map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("'{s}' is not a positive integer")),
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// isolated, magnitude1, magnitude2 or shape
    #[arg(long, value_parser = parse_model)]
    pub model: AnomalyModel,
    #[arg(long, value_parser = parse_fraction)]
    pub fraction: f64,
    #[arg(long, default_value_t = 400, value_parser = parse_positive)]
    pub n: usize,
    #[arg(long, default_value_t = 512, value_parser = parse_positive)]
    pub p: usize,
    #[arg(long, value_enum, default_value_t = BaseKind::Smooth)]
    pub base: BaseKind,
    /// Output directory for curves.csv, labels.csv and provenance.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Curve file, one curve per row.
    #[arg(long)]
    pub data: PathBuf,
    /// `header` (first row is the grid), `uniform`, or a grid file path.
    #[arg(long, default_value = "header")]
    pub grid: String,
}

impl DataArgs {
    fn load(&self) -> Result<fad_core::FunctionalDataset> {
        io::read_curves(&self.data, &self.grid.parse::<GridSource>().expect("infallible"))
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Registry name, e.g. fT, ACH, FIF, FPCA+IF.
    #[arg(long, value_parser = parse_detector)]
    pub detector: DetectorKind,
    #[command(flatten)]
    pub data: DataArgs,
    /// Detector parameters as inline JSON, e.g. '{"n_trees": 50}'.
    #[arg(long)]
    pub params: Option<String>,
    /// Model document to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the training scores here.
    #[arg(long)]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Score CSV to write; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON benchmark config.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the threshold rule with a fixed flagged fraction.
    #[arg(long, value_parser = parse_fraction)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Roc,
    Pr,
    Ms,
    Fom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DepthArg {
    Tukey,
    Projection,
    AsymProjection,
}

impl From<DepthArg> for BaseDepth {
    fn from(d: DepthArg) -> Self {
        match d {
            DepthArg::Tukey => BaseDepth::Tukey,
            DepthArg::Projection => BaseDepth::Projection,
            DepthArg::AsymProjection => BaseDepth::AsymProjection,
        }
    }
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(value_enum)]
    pub kind: PlotKind,
    /// Label file (required for ROC/PR, optional for scatter plots).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Score files to overlay (ROC/PR); the file stem names the series.
    #[arg(long = "scores", num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// Curve file (MS/FOM).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "header")]
    pub grid: String,
    /// Pointwise depth of the MS/FOM map.
    #[arg(long, value_enum, default_value_t = DepthArg::Projection)]
    pub depth: DepthArg,
    /// SVG to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the scatter coordinates as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Outcome of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    PartialFailure,
}

/// Parses `args`, runs the command and maps the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::PartialFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<Status> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(FadError::Usage("--threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| FadError::Usage(format!("cannot start thread pool: {e}")))?;
    let seed = cli.seed;
    pool.install(|| match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, seed.unwrap_or(0)),
        Command::Fit(a) => cmd_fit(&a, seed.unwrap_or(0)),
        Command::Score(a) => cmd_score(&a),
        Command::Bench(a) => cmd_bench(&a, seed),
        Command::Plot(a) => cmd_plot(&a),
    })
}

fn cmd_simulate(a: &SimulateArgs, seed: u64) -> Result<Status> {
    let grid = Grid::uniform(a.p)?;
    let base = match a.base {
        BaseKind::Smooth => NormalBase::default(),
        BaseKind::Ar => NormalBase::default_ar_noise(),
    };
    let sim = simulate::simulate(a.n, &grid, &base, a.model, a.fraction, seed)?;
    io::write_curves(&a.out.join("curves.csv"), &sim.dataset, true)?;
    io::write_labels(&a.out.join("labels.csv"), &sim.labels)?;
    io::write_json(&a.out.join("provenance.json"), &sim.provenance)?;
    Ok(Status::Ok)
}

fn cmd_fit(a: &FitArgs, seed: u64) -> Result<Status> {
    let train = a.data.load()?;
    let mut cfg = DetectorConfig::new(a.detector, seed);
    if let Some(json) = &a.params {
        cfg.params =
            serde_json::from_str::<DetectorParams>(json).map_err(|e| FadError::Usage(format!("--params: {e}")))?;
    }
    let (fitted, scores) = FittedDetector::fit_score(&cfg, &train)?;
    io::write_json(&a.out, &fitted)?;
    if let Some(p) = &a.scores {
        io::write_text(p, &io::scores_to_csv(&scores))?;
    }
    Ok(Status::Ok)
}

fn cmd_score(a: &ScoreArgs) -> Result<Status> {
    let model: FittedDetector = io::read_json(&a.model)?;
    let ds = a.data.load()?;
    let scores = model.score(&ds)?;
    let text = io::scores_to_csv(&scores);
    match &a.out {
        Some(p) => io::write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(Status::Ok)
}

fn cmd_bench(a: &BenchArgs, seed: Option<u64>) -> Result<Status> {
    let mut cfg: BenchConfig = io::read_json(&a.config)?;
    let base_dir = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(out) = &a.out {
        cfg.output_dir = out.clone();
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = AlphaRule::Fixed(alpha);
    }
    let out_dir = if cfg.output_dir.is_absolute() || a.out.is_some() {
        cfg.output_dir.clone()
    } else {
        base_dir.join(&cfg.output_dir)
    };
    let outcome = match cfg.threads {
        // an explicit config bound applies unless --threads/FAD_THREADS set one
        Some(t) if t > 0 && std::env::var_os("FAD_THREADS").is_none() && rayon::current_num_threads() != t => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| FadError::Usage(format!("cannot start thread pool: {e}")))?
                .install(|| bench::run_bench(&cfg, &base_dir))?
        }
        _ => bench::run_bench(&cfg, &base_dir)?,
    };
    bench::write_outcome(&outcome, &out_dir)?;
    let failed = outcome.report.n_failed();
    for c in outcome.report.cells.iter().filter(|c| c.error.is_some()) {
        eprintln!(
            "cell {} / {} failed: {}",
            c.dataset,
            c.detector,
            c.error.as_deref().unwrap_or_default()
        );
    }
    Ok(if failed > 0 { Status::PartialFailure } else { Status::Ok })
}

fn series_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn cmd_plot(a: &PlotArgs) -> Result<Status> {
    let labels = a.labels.as_deref().map(io::read_labels).transpose()?;
    let svg_text = match a.kind {
        PlotKind::Roc | PlotKind::Pr => {
            let labels = labels.ok_or_else(|| FadError::Usage("ROC/PR plots need --labels".into()))?;
            if a.scores.is_empty() {
                return Err(FadError::Usage("ROC/PR plots need at least one --scores file".into()));
            }
            let mut series = Vec::new();
            for p in &a.scores {
                let scores = io::read_scores(p)?;
                let curve = if a.kind == PlotKind::Roc {
                    metrics::roc_curve(&scores, &labels)?
                } else {
                    metrics::pr_curve(&scores, &labels)?
                };
                series.push(Series {
                    name: series_name(p),
                    points: curve.points,
                });
            }
            if a.kind == PlotKind::Roc {
                svg::line_chart("ROC", "false positive rate", "true positive rate", &series, true)
            } else {
                svg::line_chart("Precision-recall", "recall", "precision", &series, false)
            }
        }
        PlotKind::Ms | PlotKind::Fom => {
            let data = a
                .data
                .as_ref()
                .ok_or_else(|| FadError::Usage("MS/FOM plots need --data".into()))?;
            let ds = io::read_curves(data, &a.grid.parse::<GridSource>().expect("infallible"))?;
            if let Some(l) = &labels {
                if l.len() != ds.n_curves() {
                    return Err(FadError::Usage(format!(
                        "{} labels for {} curves",
                        l.len(),
                        ds.n_curves()
                    )));
                }
            }
            let kind = if a.kind == PlotKind::Ms {
                MapKind::Ms
            } else {
                MapKind::Fom
            };
            let feats = FeatureMap::fit(&ds, kind, a.depth.into())?.features(&ds)?;
            let points: Vec<(f64, f64)> = feats.rows().map(|r| (r[0], r[1])).collect();
            if let Some(p) = &a.csv {
                io::write_text(p, &io::scatter_to_csv(&points, labels.as_ref()))?;
            }
            let groups = match &labels {
                Some(l) => {
                    let pick = |anomaly: bool| Series {
                        name: if anomaly { "anomaly" } else { "normal" }.into(),
                        points: points
                            .iter()
                            .zip(l.iter())
                            .filter(|(_, lab)| lab.is_anomaly() == anomaly)
                            .map(|(p, _)| *p)
                            .collect(),
                    };
                    vec![pick(false), pick(true)]
                }
                None => vec![Series {
                    name: "curves".into(),
                    points,
                }],
            };
            let (title, y) = if kind == MapKind::Ms {
                ("MS plot", "variance of outlyingness")
            } else {
                ("FOM plot", "relative dispersion of outlyingness")
            };
            svg::scatter_chart(title, "mean outlyingness", y, &groups)
        }
    };
    io::write_text(&a.out, &svg_text)?;
    Ok(Status::Ok)
}
