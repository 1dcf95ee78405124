//! Integrated functional depths: a univariate depth evaluated at every time
//! stamp against the slice of the sample at that time, then averaged over
//! the grid (fT, fSDO, fAO).

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::udepth::{RobustSummary, UnivariateSample};
use crate::{par, Error, FunctionalDataset, Grid, Result, ScoreVector};

/// Univariate depth applied per time stamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseDepth {
    /// Tukey (halfspace) depth; integrated version is fT.
    Tukey,
    /// Median/MAD projection depth; integrated version is fSDO.
    Projection,
    /// Asymmetric projection depth; integrated version is fAO.
    AsymProjection,
}

/// Quadrature used for the time integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    UniformMean,
    Trapezoid,
}

impl Weighting {
    /// Plain mean on uniform grids, trapezoid otherwise.
    pub fn for_grid(grid: &Grid) -> Self {
        if grid.is_uniform() {
            Weighting::UniformMean
        } else {
            Weighting::Trapezoid
        }
    }

    /// Normalized weights (sum to 1).
    pub fn weights(self, grid: &Grid) -> Vec<f64> {
        match self {
            Weighting::UniformMean => alloc::vec![1.0 / grid.len() as f64; grid.len()],
            Weighting::Trapezoid => {
                let span = grid.span();
                grid.trapezoid_weights().into_iter().map(|w| w / span).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratedDepthConfig {
    pub base: BaseDepth,
    pub weights: Weighting,
}

impl IntegratedDepthConfig {
    pub fn for_grid(base: BaseDepth, grid: &Grid) -> Self {
        IntegratedDepthConfig {
            base,
            weights: Weighting::for_grid(grid),
        }
    }
}

/// Per-time-stamp reference sample with its robust summary.
#[derive(Debug, Clone)]
pub(crate) struct Stamp {
    sample: UnivariateSample,
    summary: RobustSummary,
}

impl Stamp {
    fn depth(&self, base: BaseDepth, x: f64) -> f64 {
        match base {
            BaseDepth::Tukey => crate::udepth::tukey_depth_1d(x, &self.sample),
            BaseDepth::Projection => 1.0 / (1.0 + self.summary.stahel_donoho_outlyingness(x)),
            BaseDepth::AsymProjection => 1.0 / (1.0 + self.summary.adjusted_outlyingness(x)),
        }
    }
}

/// Pointwise depth of any curve against the time-stamp slices `C_n(t_j)` of
/// a reference dataset.
#[derive(Debug, Clone)]
pub struct PointwiseDepth {
    grid: Grid,
    base: BaseDepth,
    stamps: Vec<Stamp>,
}

impl PointwiseDepth {
    pub fn fit(reference: &FunctionalDataset, base: BaseDepth) -> Self {
        let stamps = par::map_indices(reference.n_points(), |j| {
            let sample = UnivariateSample::new(reference.column(j)).expect("dataset values are finite and n >= 1");
            // the medcouple is only needed for the asymmetric depth
            let summary = if base == BaseDepth::AsymProjection {
                sample.summary()
            } else {
                RobustSummary {
                    median: sample.median(),
                    mad: sample.mad(),
                    q25: 0.0,
                    q75: 0.0,
                    medcouple: 0.0,
                }
            };
            Stamp { sample, summary }
        });
        PointwiseDepth {
            grid: reference.grid().clone(),
            base,
            stamps,
        }
    }

    pub fn base(&self) -> BaseDepth {
        self.base
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Depth of `curve(t_j)` in `C_n(t_j)` for every `j`.
    pub fn depths(&self, curve: &[f64]) -> Result<Vec<f64>> {
        if curve.len() != self.stamps.len() {
            return Err(Error::Dimension(alloc::format!(
                "curve has {} values, grid has {}",
                curve.len(),
                self.stamps.len()
            )));
        }
        Ok(curve
            .iter()
            .zip(&self.stamps)
            .map(|(&x, s)| s.depth(self.base, x))
            .collect())
    }
}

/// Integrated depth model fitted on a reference sample.
#[derive(Debug, Clone)]
pub struct IntegratedDepth {
    pointwise: PointwiseDepth,
    weights: Vec<f64>,
}

impl IntegratedDepth {
    pub fn fit(reference: &FunctionalDataset, cfg: IntegratedDepthConfig) -> Self {
        IntegratedDepth {
            weights: cfg.weights.weights(reference.grid()),
            pointwise: PointwiseDepth::fit(reference, cfg.base),
        }
    }

    pub fn depth(&self, curve: &[f64]) -> Result<f64> {
        let d = self.pointwise.depths(curve)?;
        let v: f64 = d.iter().zip(&self.weights).map(|(d, w)| d * w).sum();
        Ok(v.clamp(0.0, 1.0))
    }

    /// Depths of every curve of `queries` (which must share the grid).
    pub fn depths(&self, queries: &FunctionalDataset) -> Result<Vec<f64>> {
        if queries.grid() != self.pointwise.grid() {
            return Err(Error::Dimension("query grid differs from the reference grid".into()));
        }
        par::map_indices(queries.n_curves(), |i| self.depth(queries.curve(i)))
            .into_iter()
            .collect()
    }

    pub fn scores(&self, queries: &FunctionalDataset) -> Result<ScoreVector> {
        depth_to_score(&self.depths(queries)?)
    }
}

/// `D(X | C_n)`: weighted time average of pointwise depths.
pub fn integrated_depth(curve: &[f64], dataset: &FunctionalDataset, cfg: IntegratedDepthConfig) -> Result<f64> {
    dataset.check_curve(curve)?;
    IntegratedDepth::fit(dataset, cfg).depth(curve)
}

/// Anomaly scores `1 - D`.
pub fn depth_to_score(depths: &[f64]) -> Result<ScoreVector> {
    ScoreVector::from_depths(depths)
}
