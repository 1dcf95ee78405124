//! Config-driven benchmark: every detector on every dataset, scored on the
//! training curves and evaluated against the labels.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fad_core::detector::{DetectorConfig, DetectorKind, DetectorParams, FittedDetector};
use fad_core::metrics::{self, EvalReport};
use fad_core::simulate::{self, AnomalyModel, NormalBase};
use fad_core::{rng, FunctionalDataset, Grid, LabelVector, ScoreVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FadError, Result};
use crate::io::{self, GridSource};
use crate::svg::{self, Series};

pub const OCSVM_NOTE: &str = "One-Class SVM rows are omitted: no OCSVM detector is implemented.";

/// Decision threshold for F1 and sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// Flag the true contamination rate of each dataset.
    #[default]
    TrueRate,
    Fixed(f64),
}

impl AlphaRule {
    pub fn describe(&self) -> String {
        match self {
            AlphaRule::TrueRate => {
                "top-fraction: flag the ceil(alpha * n) highest scores, alpha = labelled anomaly fraction; ties broken by input order".into()
            }
            AlphaRule::Fixed(a) => {
                format!("top-fraction: flag the ceil({a} * n) highest scores; ties broken by input order")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub model: AnomalyModel,
    pub fraction: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default)]
    pub base: NormalBase,
    /// Defaults to a seed derived from the benchmark seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_n() -> usize {
    400
}

fn default_p() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSpec {
    pub curves: PathBuf,
    pub labels: PathBuf,
    /// `uniform`, `header` or the path of a grid file.
    #[serde(default = "default_grid")]
    pub grid: String,
}

fn default_grid() -> String {
    "header".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Simulate(SimulateSpec),
    Csv(CsvSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorEntry {
    /// Column name in the report; defaults to the registry name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: DetectorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: DetectorParams,
}

impl DetectorEntry {
    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_owned())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DetectorEntryDoc {
    Name(DetectorKind),
    Full(Box<DetectorEntry>),
}

fn detectors_from_doc<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<DetectorEntry>, D::Error> {
    let docs: Vec<DetectorEntryDoc> = Deserialize::deserialize(d)?;
    Ok(docs
        .into_iter()
        .map(|doc| match doc {
            DetectorEntryDoc::Name(kind) => DetectorEntry {
                label: None,
                kind,
                seed: None,
                params: DetectorParams::default(),
            },
            DetectorEntryDoc::Full(e) => *e,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub alpha: AlphaRule,
    pub datasets: Vec<DatasetEntry>,
    #[serde(deserialize_with = "detectors_from_doc")]
    pub detectors: Vec<DetectorEntry>,
}

fn default_output() -> PathBuf {
    PathBuf::from("bench-out")
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.detectors.is_empty() {
            return Err(FadError::Usage(
                "a benchmark needs at least one dataset and one detector".into(),
            ));
        }
        let mut names: Vec<String> = self.datasets.iter().map(|d| d.name.clone()).collect();
        if let Some(dup) = first_duplicate(&mut names) {
            return Err(FadError::Usage(format!("duplicate dataset name '{dup}'")));
        }
        let mut names: Vec<String> = self.detectors.iter().map(DetectorEntry::name).collect();
        if let Some(dup) = first_duplicate(&mut names) {
            return Err(FadError::Usage(format!("duplicate detector name '{dup}'")));
        }
        if let AlphaRule::Fixed(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(FadError::Usage(format!("alpha {a} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

fn first_duplicate(names: &mut [String]) -> Option<String> {
    names.sort();
    names.windows(2).find(|w| w[0] == w[1]).map(|w| w[0].clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_curves: usize,
    pub n_points: usize,
    pub n_anomalies: usize,
    pub anomaly_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: String,
    pub detector: String,
    pub status: CellStatus,
    /// Parameters actually used (resolved defaults included).
    pub config: DetectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub library: String,
    pub version: String,
    pub threshold_rule: String,
    pub notes: Vec<String>,
    pub config: BenchConfig,
    pub datasets: Vec<DatasetSummary>,
    pub cells: Vec<Cell>,
    pub total_seconds: f64,
}

impl BenchmarkReport {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellStatus::Failed).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,detector,status,auc,ap,f1,p_c,alpha,n_flagged,seconds,error\n");
        for c in &self.cells {
            let m = c.metrics.as_ref();
            let num = |f: fn(&EvalReport) -> f64| m.map_or(String::new(), |m| f(m).to_string());
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&c.dataset),
                csv_field(&c.detector),
                if c.status == CellStatus::Ok { "ok" } else { "failed" },
                num(|m| m.auc),
                num(|m| m.ap),
                num(|m| m.f1),
                num(|m| m.p_c),
                num(|m| m.threshold_rule.alpha),
                m.map_or(String::new(), |m| m.threshold_rule.n_flagged.to_string()),
                c.seconds,
                csv_field(c.error.as_deref().unwrap_or(""))
            )
            .expect("writing to a String");
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// A labelled dataset ready for scoring.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: FunctionalDataset,
    pub labels: LabelVector,
    pub rounding: Option<String>,
}

/// Resolves relative CSV paths against `base_dir`.
pub fn load_dataset(entry: &DatasetEntry, index: usize, bench_seed: u64, base_dir: &Path) -> Result<LoadedDataset> {
    match &entry.source {
        DatasetSource::Simulate(s) => {
            let grid = Grid::uniform(s.p)?;
            let seed = s.seed.unwrap_or_else(|| rng::derive_seed(bench_seed, index as u64));
            let sim = simulate::simulate(s.n, &grid, &s.base, s.model, s.fraction, seed)?;
            Ok(LoadedDataset {
                dataset: sim.dataset,
                labels: sim.labels,
                rounding: Some(sim.provenance.rounding),
            })
        }
        DatasetSource::Csv(c) => {
            let resolve = |p: &Path| {
                if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base_dir.join(p)
                }
            };
            let grid = match c.grid.parse::<GridSource>().expect("infallible") {
                GridSource::File(p) => GridSource::File(resolve(&p)),
                g => g,
            };
            let dataset = io::read_curves(&resolve(&c.curves), &grid)?;
            let labels = io::read_labels(&resolve(&c.labels))?;
            if labels.len() != dataset.n_curves() {
                return Err(FadError::format(
                    resolve(&c.labels),
                    format!("{} labels for {} curves", labels.len(), dataset.n_curves()),
                ));
            }
            Ok(LoadedDataset {
                dataset,
                labels,
                rounding: None,
            })
        }
    }
}

/// Report plus the plots and curve tables to write next to it.
pub struct BenchOutcome {
    pub report: BenchmarkReport,
    /// `(file name, contents)`
    pub files: Vec<(String, String)>,
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

struct Scored {
    cell: Cell,
    scores: Option<ScoreVector>,
}

fn run_cell(cfg: &BenchConfig, di: usize, ki: usize, data: &std::result::Result<LoadedDataset, String>) -> Scored {
    let entry = &cfg.detectors[ki];
    let seed = entry
        .seed
        .unwrap_or_else(|| rng::derive_seed(cfg.seed, ((di as u64) << 32) | ki as u64));
    let mut det_cfg = DetectorConfig::new(entry.kind, seed);
    det_cfg.params = entry.params.clone();
    let start = Instant::now();
    let result = data.as_ref().map_err(Clone::clone).and_then(|d| {
        let (fitted, scores) = FittedDetector::fit_score(&det_cfg, &d.dataset).map_err(|e| e.to_string())?;
        let alpha = match cfg.alpha {
            AlphaRule::TrueRate => d.labels.n_anomalies() as f64 / d.labels.len() as f64,
            AlphaRule::Fixed(a) => a,
        };
        let m = metrics::evaluate(&scores, &d.labels, alpha).map_err(|e| e.to_string())?;
        Ok((fitted.config, scores, m))
    });
    let seconds = start.elapsed().as_secs_f64();
    let (dataset, detector) = (cfg.datasets[di].name.clone(), entry.name());
    match result {
        Ok((config, scores, m)) => Scored {
            cell: Cell {
                dataset,
                detector,
                status: CellStatus::Ok,
                config,
                metrics: Some(m),
                error: None,
                seconds,
            },
            scores: Some(scores),
        },
        Err(e) => Scored {
            cell: Cell {
                dataset,
                detector,
                status: CellStatus::Failed,
                config: det_cfg,
                metrics: None,
                error: Some(e),
                seconds,
            },
            scores: None,
        },
    }
}

/// Runs every cell on the current rayon pool.
pub fn run_bench(cfg: &BenchConfig, base_dir: &Path) -> Result<BenchOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let data: Vec<std::result::Result<LoadedDataset, String>> = cfg
        .datasets
        .par_iter()
        .enumerate()
        .map(|(i, d)| load_dataset(d, i, cfg.seed, base_dir).map_err(|e| e.to_string()))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..cfg.datasets.len())
        .flat_map(|d| (0..cfg.detectors.len()).map(move |k| (d, k)))
        .collect();
    let scored: Vec<Scored> = pairs.par_iter().map(|&(d, k)| run_cell(cfg, d, k, &data[d])).collect();

    let mut files = Vec::new();
    for (di, entry) in cfg.datasets.iter().enumerate() {
        let Ok(d) = &data[di] else { continue };
        let mut roc = Vec::new();
        let mut pr = Vec::new();
        let mut table = String::from("detector,curve,x,y\n");
        for s in scored.iter().filter(|s| s.cell.dataset == entry.name) {
            let Some(scores) = &s.scores else { continue };
            if let Ok(c) = metrics::roc_curve(scores, &d.labels) {
                for (x, y) in &c.points {
                    writeln!(table, "{},roc,{x},{y}", csv_field(&s.cell.detector)).expect("writing to a String");
                }
                roc.push(Series {
                    name: s.cell.detector.clone(),
                    points: c.points,
                });
            }
            if let Ok(c) = metrics::pr_curve(scores, &d.labels) {
                for (x, y) in &c.points {
                    writeln!(table, "{},pr,{x},{y}", csv_field(&s.cell.detector)).expect("writing to a String");
                }
                pr.push(Series {
                    name: s.cell.detector.clone(),
                    points: c.points,
                });
            }
        }
        let stem = file_stem(&entry.name);
        files.push((
            format!("roc_{stem}.svg"),
            svg::line_chart(
                &format!("ROC: {}", entry.name),
                "false positive rate",
                "true positive rate",
                &roc,
                true,
            ),
        ));
        files.push((
            format!("pr_{stem}.svg"),
            svg::line_chart(
                &format!("Precision-recall: {}", entry.name),
                "recall",
                "precision",
                &pr,
                false,
            ),
        ));
        files.push((format!("curves_{stem}.csv"), table));
    }

    let datasets = cfg
        .datasets
        .iter()
        .zip(&data)
        .filter_map(|(e, d)| {
            d.as_ref().ok().map(|d| DatasetSummary {
                name: e.name.clone(),
                n_curves: d.dataset.n_curves(),
                n_points: d.dataset.n_points(),
                n_anomalies: d.labels.n_anomalies(),
                anomaly_fraction: d.labels.n_anomalies() as f64 / d.labels.len().max(1) as f64,
                rounding: d.rounding.clone(),
            })
        })
        .collect();
    let report = BenchmarkReport {
        library: "fad".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        threshold_rule: cfg.alpha.describe(),
        notes: vec![OCSVM_NOTE.into()],
        config: cfg.clone(),
        datasets,
        cells: scored.into_iter().map(|s| s.cell).collect(),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(BenchOutcome { report, files })
}

/// Writes `report.json`, `report.csv`, the plots and curve tables.
pub fn write_outcome(outcome: &BenchOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        io::write_text(&p, text)?;
        written.push(p);
        Ok(())
    };
    put("report.json", &io::to_json(&outcome.report))?;
    put("report.csv", &outcome.report.to_csv())?;
    for (name, text) in &outcome.files {
        put(name, text)?;
    }
    Ok(written)
}
