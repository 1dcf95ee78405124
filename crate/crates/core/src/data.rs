//! Grids, curve datasets, labels and scores.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Strictly increasing sampling points inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Dimension(format!(
                "a grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite grid point {bad}")));
        }
        if points[0] < 0.0 || points[points.len() - 1] > 1.0 {
            return Err(Error::InvalidGrid("grid must lie inside [0, 1]".into()));
        }
        if let Some(w) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "grid not strictly increasing at index {}",
                w + 1
            )));
        }
        Ok(Grid(points))
    }

    /// `p` equispaced points `t_j = j / (p - 1)`.
    pub fn uniform(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::Dimension(format!("a grid needs at least 2 points, got {p}")));
        }
        let last = (p - 1) as f64;
        Grid::new((0..p).map(|j| j as f64 / last).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.0[self.0.len() - 1] - self.0[0]
    }

    /// True when all spacings agree to within `1e-9` relative.
    pub fn is_uniform(&self) -> bool {
        let h = self.span() / (self.len() - 1) as f64;
        self.0
            .windows(2)
            .all(|w| crate::math::abs((w[1] - w[0]) - h) <= 1e-9 * h)
    }

    /// Trapezoid quadrature weights: `sum_j w_j f(t_j)` approximates the
    /// integral of `f` over `[t_0, t_{p-1}]`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let t = &self.0;
        let p = t.len();
        let mut w = alloc::vec![0.0; p];
        for j in 0..p - 1 {
            let half = 0.5 * (t[j + 1] - t[j]);
            w[j] += half;
            w[j + 1] += half;
        }
        w
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;
    fn try_from(points: Vec<f64>) -> Result<Self> {
        Grid::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

/// `n` curves sampled on a common grid, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetDoc", into = "DatasetDoc")]
pub struct FunctionalDataset {
    grid: Grid,
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DatasetDoc {
    grid: Grid,
    curves: Vec<Vec<f64>>,
}

impl TryFrom<DatasetDoc> for FunctionalDataset {
    type Error = Error;
    fn try_from(doc: DatasetDoc) -> Result<Self> {
        FunctionalDataset::from_rows(doc.grid, doc.curves)
    }
}

impl From<FunctionalDataset> for DatasetDoc {
    fn from(ds: FunctionalDataset) -> Self {
        DatasetDoc {
            curves: ds.curves().map(<[f64]>::to_vec).collect(),
            grid: ds.grid,
        }
    }
}

impl FunctionalDataset {
    /// Builds a dataset from a flat row-major buffer of `n * grid.len()` values.
    pub fn from_flat(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let p = grid.len();
        if values.is_empty() || values.len() % p != 0 {
            return Err(Error::Dimension(format!(
                "{} values do not form whole curves of length {p}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / p, col: k % p });
        }
        Ok(FunctionalDataset {
            n: values.len() / p,
            grid,
            values,
        })
    }

    pub fn from_rows(grid: Grid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = grid.len();
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Dimension(format!(
                "curve {i} has {} values, grid has {p}",
                rows[i].len()
            )));
        }
        Self::from_flat(grid, rows.into_iter().flatten().collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_curves(&self) -> usize {
        self.n
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        let p = self.n_points();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn curves(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_points())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values of every curve at grid index `j` (the time-stamp slice).
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.curves().map(|c| c[j]).collect()
    }

    /// Keeps the rows listed in `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(idx.len() * self.n_points());
        for &i in idx {
            if i >= self.n {
                return Err(Error::Dimension(format!("row {i} out of range")));
            }
            values.extend_from_slice(self.curve(i));
        }
        Self::from_flat(self.grid.clone(), values)
    }

    pub(crate) fn check_curve(&self, curve: &[f64]) -> Result<()> {
        if curve.len() != self.n_points() {
            return Err(Error::Dimension(format!(
                "curve has {} values, grid has {}",
                curve.len(),
                self.n_points()
            )));
        }
        Ok(())
    }

    /// Piecewise-linear interpolation of every curve onto `target`.
    pub fn resample_linear(&self, target: &Grid) -> Result<Self> {
        let src = self.grid.points();
        let (lo, hi) = (src[0], src[src.len() - 1]);
        if let Some(&t) = target.points().iter().find(|&&t| t < lo || t > hi) {
            return Err(Error::Extrapolation(t));
        }
        // (left index, weight of the right neighbour) per target point
        let stencil: Vec<(usize, f64)> = target
            .points()
            .iter()
            .map(|&t| {
                let k = src.partition_point(|&s| s <= t);
                if k >= src.len() {
                    (src.len() - 2, 1.0)
                } else {
                    let left = k - 1;
                    (left, (t - src[left]) / (src[left + 1] - src[left]))
                }
            })
            .collect();
        let mut values = Vec::with_capacity(self.n * target.len());
        for c in self.curves() {
            values.extend(stencil.iter().map(|&(k, w)| {
                if w == 0.0 {
                    c[k]
                } else if w == 1.0 {
                    c[k + 1]
                } else {
                    c[k] + w * (c[k + 1] - c[k])
                }
            }));
        }
        Self::from_flat(target.clone(), values)
    }

    /// Forward-difference first derivative of every curve (last slope
    /// repeated so the length stays `p`).
    pub fn derivative(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for c in self.curves() {
            values.extend(derivative_of(self.grid.points(), c));
        }
        FunctionalDataset {
            grid: self.grid.clone(),
            n: self.n,
            values,
        }
    }
}

/// Forward differences `(x_{j+1} - x_j) / (t_{j+1} - t_j)`, last value
/// replicated.
pub fn derivative_of(t: &[f64], x: &[f64]) -> Vec<f64> {
    let p = t.len();
    let mut d = Vec::with_capacity(p);
    for j in 0..p - 1 {
        d.push((x[j + 1] - x[j]) / (t[j + 1] - t[j]));
    }
    d.push(d[p - 2]);
    d
}

/// Ground truth: normal curves are `-1`, anomalies `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Normal,
    Anomaly,
}

impl Label {
    pub fn is_anomaly(self) -> bool {
        self == Label::Anomaly
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Label::Normal),
            1 => Ok(Label::Anomaly),
            other => Err(Error::Contract(format!("label must be -1 or +1, got {other}"))),
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Normal => -1,
            Label::Anomaly => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(pub Vec<Label>);

impl LabelVector {
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        signs
            .iter()
            .map(|&s| Label::try_from(s))
            .collect::<Result<Vec<_>>>()
            .map(LabelVector)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn n_anomalies(&self) -> usize {
        self.0.iter().filter(|l| l.is_anomaly()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        self.0.iter().copied()
    }
}

/// Per-curve anomaly scores, larger = more anomalous.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        Ok(ScoreVector(scores))
    }

    /// Converts depths in `[0, 1]` into scores `1 - D`.
    pub fn from_depths(depths: &[f64]) -> Result<Self> {
        if let Some(d) = depths.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::Contract(format!("depth {d} outside [0, 1]")));
        }
        Ok(ScoreVector(depths.iter().map(|d| 1.0 - d).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ScoreVector::new(v)
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(s: ScoreVector) -> Self {
        s.0
    }
}
