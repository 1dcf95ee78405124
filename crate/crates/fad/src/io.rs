//! CSV and JSON files.
//!
//! Curves are stored one per row, comma separated. The sampling grid comes
//! from one of three places: an implicit uniform grid on `[0, 1]`, the first
//! row of the file, or a separate file listing the grid points.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fad_core::{FunctionalDataset, Grid, Label, LabelVector, ScoreVector};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{FadError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridSource {
    /// `t_j = j / (p - 1)`.
    Uniform,
    /// The first row holds the grid.
    Header,
    /// A separate file of grid points (commas or newlines).
    File(PathBuf),
}

impl FromStr for GridSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "uniform" => GridSource::Uniform,
            "header" => GridSource::Header,
            path => GridSource::File(PathBuf::from(path)),
        })
    }
}

impl std::fmt::Display for GridSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridSource::Uniform => f.write_str("uniform"),
            GridSource::Header => f.write_str("header"),
            GridSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| FadError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FadError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| FadError::io(path, e))
}

/// Numeric rows of a CSV file; blank lines are skipped and rows are
/// numbered from 1 as they appear in the file.
fn read_numeric_rows(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| FadError::format(path, e.to_string()))?;
        let line = rec.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| FadError::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    col: c + 1,
                    value: field.to_owned(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

/// Reads a curve file. Rows must all have the grid's length.
pub fn read_curves(path: &Path, grid: &GridSource) -> Result<FunctionalDataset> {
    let mut rows = read_numeric_rows(path)?;
    let grid = match grid {
        GridSource::Header => {
            if rows.is_empty() {
                return Err(FadError::format(path, "missing grid header row"));
            }
            Grid::new(rows.remove(0).1)?
        }
        GridSource::File(g) => Grid::new(read_numeric_rows(g)?.into_iter().flat_map(|(_, r)| r).collect())?,
        GridSource::Uniform => {
            let p = rows.first().map_or(0, |(_, r)| r.len());
            Grid::uniform(p)?
        }
    };
    if rows.is_empty() {
        return Err(FadError::format(path, "no curves"));
    }
    let p = grid.len();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != p) {
        return Err(FadError::format(
            path,
            format!("row {line} has {} values, expected {p}", r.len()),
        ));
    }
    let values: Vec<f64> = rows.into_iter().flat_map(|(_, r)| r).collect();
    Ok(FunctionalDataset::from_flat(grid, values)?)
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        // shortest representation that parses back to the same value
        write!(s, "{v}").expect("writing to a String");
    }
    s
}

/// Writes curves one per row, preceded by the grid row when `header`.
pub fn curves_to_csv(ds: &FunctionalDataset, header: bool) -> String {
    let mut out = String::new();
    if header {
        out += &join(ds.grid().points());
        out.push('\n');
    }
    for c in ds.curves() {
        out += &join(c);
        out.push('\n');
    }
    out
}

pub fn write_curves(path: &Path, ds: &FunctionalDataset, header: bool) -> Result<()> {
    write_text(path, &curves_to_csv(ds, header))
}

/// One label per line, `-1` normal and `1` anomaly; an optional first line
/// `label` is ignored.
pub fn read_labels(path: &Path) -> Result<LabelVector> {
    let text = read_text(path)?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() || (i == 0 && field.eq_ignore_ascii_case("label")) {
            continue;
        }
        let bad = || FadError::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            col: 1,
            value: field.to_owned(),
        };
        let v: i8 = field.parse().map_err(|_| bad())?;
        labels.push(Label::try_from(v).map_err(|_| bad())?);
    }
    Ok(LabelVector(labels))
}

pub fn labels_to_csv(labels: &LabelVector) -> String {
    let mut out = String::from("label\n");
    for l in labels.iter() {
        writeln!(out, "{}", i8::from(l)).expect("writing to a String");
    }
    out
}

pub fn write_labels(path: &Path, labels: &LabelVector) -> Result<()> {
    write_text(path, &labels_to_csv(labels))
}

pub fn scores_to_csv(scores: &ScoreVector) -> String {
    let mut out = String::from("index,score\n");
    for (i, s) in scores.as_slice().iter().enumerate() {
        writeln!(out, "{i},{s}").expect("writing to a String");
    }
    out
}

/// Reads the `index,score` format (the last column of each row).
pub fn read_scores(path: &Path) -> Result<ScoreVector> {
    let text = read_text(path)?;
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("index")) {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        let v: f64 = field.parse().map_err(|_| FadError::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            col: line.split(',').count(),
            value: field.to_owned(),
        })?;
        scores.push(v);
    }
    Ok(ScoreVector::new(scores)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| FadError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize to JSON");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

/// `id,x,y,label` rows for a 2-D scatter.
pub fn scatter_to_csv(points: &[(f64, f64)], labels: Option<&LabelVector>) -> String {
    let mut out = String::from("id,x,y,label\n");
    for (i, (x, y)) in points.iter().enumerate() {
        let l = labels
            .and_then(|l| l.0.get(i))
            .map_or(String::new(), |l| i8::from(*l).to_string());
        writeln!(out, "{i},{x},{y},{l}").expect("writing to a String");
    }
    out
}
