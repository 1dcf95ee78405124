//! MS-plot and FOM embeddings: each curve becomes a point built from the
//! mean and variance of its pointwise outlyingness `O = 1/D - 1`, followed
//! by an isolation forest in the plane.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::baselines::{IForestConfig, IsolationForest, MultivariateDataset};
use crate::integrated::{BaseDepth, PointwiseDepth};
use crate::{math, par, Error, FunctionalDataset, Grid, Result, ScoreVector};

/// Outlyingness assigned where the pointwise depth is zero.
pub const OUTLYINGNESS_CAP: f64 = 1e6;

/// `O(X_i(t_j) | C_n(t_j))` over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlyingnessSeries(Vec<f64>);

impl OutlyingnessSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("empty outlyingness series".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Contract("outlyingness must be finite and non-negative".into()));
        }
        Ok(OutlyingnessSeries(values))
    }

    pub fn from_depths(depths: &[f64]) -> Result<Self> {
        Self::new(depths.iter().map(|&d| outlyingness(d)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `(MO, VO)`: mean and variance (divisor `p`).
    pub fn mean_variance(&self) -> (f64, f64) {
        let v = &self.0;
        if v.iter().all(|&x| x == v[0]) {
            return (v[0], 0.0);
        }
        let p = v.len() as f64;
        let mo = v.iter().sum::<f64>() / p;
        let vo = v.iter().map(|x| (x - mo) * (x - mo)).sum::<f64>() / p;
        (mo, vo)
    }
}

/// `1/D - 1`, capped at [`OUTLYINGNESS_CAP`].
pub fn outlyingness(depth: f64) -> f64 {
    if depth <= 0.0 {
        return OUTLYINGNESS_CAP;
    }
    (1.0 / depth - 1.0).clamp(0.0, OUTLYINGNESS_CAP)
}

/// `(MO, VO) -> (MO, sqrt(VO) / (1 + MO))`.
pub fn fom_from_ms(mo: f64, vo: f64) -> (f64, f64) {
    (mo, math::sqrt(vo) / (1.0 + mo))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// `(MO, VO)`
    Ms,
    /// `(MO, sqrt(VO) / (1 + MO))`
    Fom,
}

/// Feature construction against the pointwise samples of a reference set.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    kind: MapKind,
    pointwise: PointwiseDepth,
}

impl FeatureMap {
    pub fn fit(reference: &FunctionalDataset, kind: MapKind, base: BaseDepth) -> Result<Self> {
        if reference.n_curves() < 2 {
            return Err(Error::Dimension("feature maps need at least two curves".into()));
        }
        Ok(FeatureMap {
            kind,
            pointwise: PointwiseDepth::fit(reference, base),
        })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        self.pointwise.grid()
    }

    pub fn outlyingness(&self, curve: &[f64]) -> Result<OutlyingnessSeries> {
        OutlyingnessSeries::from_depths(&self.pointwise.depths(curve)?)
    }

    pub fn features_of(&self, curve: &[f64]) -> Result<[f64; 2]> {
        let (mo, vo) = self.outlyingness(curve)?.mean_variance();
        Ok(match self.kind {
            MapKind::Ms => [mo, vo],
            MapKind::Fom => {
                let (a, b) = fom_from_ms(mo, vo);
                [a, b]
            }
        })
    }

    /// One feature row per curve of `ds`.
    pub fn features(&self, ds: &FunctionalDataset) -> Result<MultivariateDataset> {
        if ds.grid() != self.grid() {
            return Err(Error::Dimension(
                "dataset grid differs from the feature-map grid".into(),
            ));
        }
        let rows: Result<Vec<[f64; 2]>> = par::map_indices(ds.n_curves(), |i| self.features_of(ds.curve(i)))
            .into_iter()
            .collect();
        MultivariateDataset::new(rows?.concat(), 2)
    }
}

pub fn ms_features(ds: &FunctionalDataset, base: BaseDepth) -> Result<MultivariateDataset> {
    FeatureMap::fit(ds, MapKind::Ms, base)?.features(ds)
}

pub fn fom_features(ds: &FunctionalDataset, base: BaseDepth) -> Result<MultivariateDataset> {
    FeatureMap::fit(ds, MapKind::Fom, base)?.features(ds)
}

/// Feature map followed by an isolation forest fitted on the training
/// features.
#[derive(Debug, Clone)]
pub struct FeatureMapDetector {
    map: FeatureMap,
    forest: IsolationForest,
}

impl FeatureMapDetector {
    pub fn fit(train: &FunctionalDataset, kind: MapKind, base: BaseDepth, cfg: &IForestConfig) -> Result<Self> {
        let map = FeatureMap::fit(train, kind, base)?;
        let forest = IsolationForest::fit(&map.features(train)?, cfg)?;
        Ok(FeatureMapDetector { map, forest })
    }

    /// Reassembles a detector from a reference set and a stored forest.
    pub fn from_parts(
        train: &FunctionalDataset,
        kind: MapKind,
        base: BaseDepth,
        forest: IsolationForest,
    ) -> Result<Self> {
        if forest.dim() != 2 {
            return Err(Error::Dimension("feature-map forest must be two-dimensional".into()));
        }
        Ok(FeatureMapDetector {
            map: FeatureMap::fit(train, kind, base)?,
            forest,
        })
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn forest(&self) -> &IsolationForest {
        &self.forest
    }

    pub fn scores(&self, ds: &FunctionalDataset) -> Result<ScoreVector> {
        self.forest.scores(&self.map.features(ds)?)
    }
}

/// Fits on `train` and scores `train` itself.
pub fn featuremap_detector(
    train: &FunctionalDataset,
    kind: MapKind,
    base: BaseDepth,
    cfg: &IForestConfig,
) -> Result<ScoreVector> {
    FeatureMapDetector::fit(train, kind, base, cfg)?.scores(train)
}
