//! Named detector registry: one configuration type, one fitted model type
//! that can be persisted and used to score new curves.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ach::{AchConfig, AchDepth};
use crate::baselines::{IForestConfig, IsolationForest, LofModel, MultivariateDataset};
use crate::featuremaps::{FeatureMapDetector, MapKind};
use crate::fif::{DictionarySource, FiForest, FifConfig};
use crate::filtering::{FpcaModel, HaarBasis};
use crate::integrated::{BaseDepth, IntegratedDepth, IntegratedDepthConfig, Weighting};
use crate::{Error, FunctionalDataset, Grid, Result, ScoreVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "fT")]
    Ft,
    #[serde(rename = "fSDO")]
    Fsdo,
    #[serde(rename = "fAO")]
    Fao,
    #[serde(rename = "ACH")]
    Ach,
    #[serde(rename = "FIF")]
    Fif,
    #[serde(rename = "MS+IF")]
    MsIf,
    #[serde(rename = "FOM(fSDO)+IF")]
    FomSdoIf,
    #[serde(rename = "FOM(fAO)+IF")]
    FomAoIf,
    #[serde(rename = "FPCA+IF")]
    FpcaIf,
    #[serde(rename = "FPCA+LOF")]
    FpcaLof,
    #[serde(rename = "HAAR+IF")]
    HaarIf,
    #[serde(rename = "HAAR+LOF")]
    HaarLof,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 12] = [
        DetectorKind::Ft,
        DetectorKind::Fsdo,
        DetectorKind::Fao,
        DetectorKind::Ach,
        DetectorKind::Fif,
        DetectorKind::MsIf,
        DetectorKind::FomSdoIf,
        DetectorKind::FomAoIf,
        DetectorKind::FpcaIf,
        DetectorKind::FpcaLof,
        DetectorKind::HaarIf,
        DetectorKind::HaarLof,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Ft => "fT",
            DetectorKind::Fsdo => "fSDO",
            DetectorKind::Fao => "fAO",
            DetectorKind::Ach => "ACH",
            DetectorKind::Fif => "FIF",
            DetectorKind::MsIf => "MS+IF",
            DetectorKind::FomSdoIf => "FOM(fSDO)+IF",
            DetectorKind::FomAoIf => "FOM(fAO)+IF",
            DetectorKind::FpcaIf => "FPCA+IF",
            DetectorKind::FpcaLof => "FPCA+LOF",
            DetectorKind::HaarIf => "HAAR+IF",
            DetectorKind::HaarLof => "HAAR+LOF",
        }
    }

    /// Base depth of the integrated and feature-map detectors.
    pub fn base_depth(self) -> Option<BaseDepth> {
        match self {
            DetectorKind::Ft => Some(BaseDepth::Tukey),
            DetectorKind::Fsdo | DetectorKind::MsIf | DetectorKind::FomSdoIf => Some(BaseDepth::Projection),
            DetectorKind::Fao | DetectorKind::FomAoIf => Some(BaseDepth::AsymProjection),
            _ => None,
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(alloc::format!("unknown detector '{s}'")))
    }
}

/// Optional overrides; unset fields take sample-size dependent defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// Trees of an isolation forest (FIF or the IF stage).
    pub n_trees: Option<usize>,
    /// Subsample size `psi`.
    pub subsample: Option<usize>,
    /// FIF location/shape trade-off.
    pub alpha: Option<f64>,
    pub height_limit: Option<usize>,
    pub dictionary: Option<DictionarySource>,
    /// ACH subset size `J`.
    pub j: Option<usize>,
    pub n_subsets: Option<usize>,
    pub n_components: Option<usize>,
    pub haar_level: Option<u32>,
    pub lof_k: Option<usize>,
    pub weighting: Option<Weighting>,
}

pub const DEFAULT_FPCA_COMPONENTS: usize = 10;
pub const DEFAULT_LOF_K: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: DetectorParams,
}

impl DetectorConfig {
    pub fn new(kind: DetectorKind, seed: u64) -> Self {
        DetectorConfig {
            kind,
            seed,
            params: DetectorParams::default(),
        }
    }

    pub fn from_name(name: &str, seed: u64) -> Result<Self> {
        Ok(Self::new(name.parse()?, seed))
    }

    /// Fills every parameter the detector uses for a training set of `n`
    /// curves on `p` points.
    pub fn resolved(&self, n: usize, p: usize) -> DetectorConfig {
        let mut out = DetectorParams::default();
        let q = &self.params;
        let iforest = |out: &mut DetectorParams| {
            let d = IForestConfig::for_sample_size(n, self.seed);
            out.n_trees = Some(q.n_trees.unwrap_or(d.n_trees));
            out.subsample = Some(q.subsample.unwrap_or(d.subsample));
        };
        match self.kind {
            DetectorKind::Ft | DetectorKind::Fsdo | DetectorKind::Fao => {
                out.weighting = q.weighting;
            }
            DetectorKind::Ach => {
                let d = AchConfig::for_sample_size(n, self.seed);
                out.j = Some(q.j.unwrap_or(d.j));
                out.n_subsets = Some(q.n_subsets.unwrap_or(d.n_subsets));
            }
            DetectorKind::Fif => {
                let d = FifConfig::for_sample_size(n, self.seed);
                out.n_trees = Some(q.n_trees.unwrap_or(d.n_trees));
                let psi = q.subsample.unwrap_or(d.subsample);
                out.subsample = Some(psi);
                out.alpha = Some(q.alpha.unwrap_or(d.alpha));
                out.height_limit = Some(q.height_limit.unwrap_or(crate::fif::default_height_limit(psi)));
                out.dictionary = Some(q.dictionary.clone().unwrap_or_default());
            }
            DetectorKind::MsIf | DetectorKind::FomSdoIf | DetectorKind::FomAoIf => iforest(&mut out),
            DetectorKind::FpcaIf | DetectorKind::FpcaLof => {
                out.n_components = Some(q.n_components.unwrap_or(DEFAULT_FPCA_COMPONENTS.min(n).min(p)));
            }
            DetectorKind::HaarIf | DetectorKind::HaarLof => {
                out.haar_level = Some(q.haar_level.unwrap_or(HaarBasis::DEFAULT_LEVEL));
            }
        }
        match self.kind {
            DetectorKind::FpcaIf | DetectorKind::HaarIf => iforest(&mut out),
            DetectorKind::FpcaLof | DetectorKind::HaarLof => {
                out.lof_k = Some(q.lof_k.unwrap_or(DEFAULT_LOF_K.min(n.saturating_sub(1)).max(1)));
            }
            _ => {}
        }
        DetectorConfig {
            kind: self.kind,
            seed: self.seed,
            params: out,
        }
    }

    fn iforest_config(&self) -> IForestConfig {
        IForestConfig {
            n_trees: self.params.n_trees.unwrap_or(100),
            subsample: self.params.subsample.unwrap_or(256),
            seed: self.seed,
        }
    }
}

/// Model state needed to score new curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum FittedModel {
    /// Integrated depths and ACH keep the reference sample.
    Reference {
        reference: FunctionalDataset,
    },
    Fif {
        forest: FiForest,
    },
    FeatureMap {
        reference: FunctionalDataset,
        forest: IsolationForest,
    },
    FpcaIf {
        fpca: FpcaModel,
        forest: IsolationForest,
    },
    FpcaLof {
        fpca: FpcaModel,
        lof: LofModel,
    },
    HaarIf {
        grid: Grid,
        basis: HaarBasis,
        forest: IsolationForest,
    },
    HaarLof {
        grid: Grid,
        basis: HaarBasis,
        lof: LofModel,
    },
}

/// A fitted detector with its fully resolved configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedDetector {
    pub config: DetectorConfig,
    pub model: FittedModel,
}

fn integrated_config(cfg: &DetectorConfig, grid: &Grid) -> IntegratedDepthConfig {
    let base = cfg.kind.base_depth().expect("integrated detector has a base depth");
    IntegratedDepthConfig {
        base,
        weights: cfg.params.weighting.unwrap_or_else(|| Weighting::for_grid(grid)),
    }
}

fn ach_config(cfg: &DetectorConfig) -> AchConfig {
    AchConfig {
        j: cfg.params.j.unwrap_or(2),
        n_subsets: cfg.params.n_subsets.unwrap_or(1),
        seed: cfg.seed,
    }
}

fn map_kind(kind: DetectorKind) -> MapKind {
    if kind == DetectorKind::MsIf {
        MapKind::Ms
    } else {
        MapKind::Fom
    }
}

impl FittedDetector {
    /// Fits on `train` and returns the model with the training scores.
    pub fn fit_score(cfg: &DetectorConfig, train: &FunctionalDataset) -> Result<(Self, ScoreVector)> {
        let cfg = cfg.resolved(train.n_curves(), train.n_points());
        let p = &cfg.params;
        let (model, scores) = match cfg.kind {
            DetectorKind::Ft | DetectorKind::Fsdo | DetectorKind::Fao => {
                let d = IntegratedDepth::fit(train, integrated_config(&cfg, train.grid()));
                let s = d.scores(train)?;
                (
                    FittedModel::Reference {
                        reference: train.clone(),
                    },
                    s,
                )
            }
            DetectorKind::Ach => {
                let s = AchDepth::fit(train, ach_config(&cfg))?.member_scores()?;
                (
                    FittedModel::Reference {
                        reference: train.clone(),
                    },
                    s,
                )
            }
            DetectorKind::Fif => {
                let fc = FifConfig {
                    n_trees: p.n_trees.unwrap_or(100),
                    subsample: p.subsample.unwrap_or(2),
                    alpha: p.alpha.unwrap_or(0.5),
                    height_limit: p.height_limit.unwrap_or(1),
                    seed: cfg.seed,
                };
                let forest = FiForest::fit(
                    train,
                    p.dictionary.as_ref().unwrap_or(&DictionarySource::default()),
                    &fc,
                )?;
                let s = forest.scores(train)?;
                (FittedModel::Fif { forest }, s)
            }
            DetectorKind::MsIf | DetectorKind::FomSdoIf | DetectorKind::FomAoIf => {
                let base = cfg.kind.base_depth().expect("feature map has a base depth");
                let det = FeatureMapDetector::fit(train, map_kind(cfg.kind), base, &cfg.iforest_config())?;
                let s = det.scores(train)?;
                (
                    FittedModel::FeatureMap {
                        reference: train.clone(),
                        forest: det.forest().clone(),
                    },
                    s,
                )
            }
            DetectorKind::FpcaIf | DetectorKind::FpcaLof => {
                let fpca = FpcaModel::fit(train, p.n_components.unwrap_or(1))?;
                let feats = fpca.transform(train)?;
                multivariate_stage(&cfg, feats, |stage| match stage {
                    Stage::If(forest) => FittedModel::FpcaIf {
                        fpca: fpca.clone(),
                        forest,
                    },
                    Stage::Lof(lof) => FittedModel::FpcaLof {
                        fpca: fpca.clone(),
                        lof,
                    },
                })?
            }
            DetectorKind::HaarIf | DetectorKind::HaarLof => {
                let basis = HaarBasis {
                    level: p.haar_level.unwrap_or(HaarBasis::DEFAULT_LEVEL),
                };
                let feats = basis.project(train)?;
                let grid = train.grid().clone();
                multivariate_stage(&cfg, feats, |stage| match stage {
                    Stage::If(forest) => FittedModel::HaarIf {
                        grid: grid.clone(),
                        basis,
                        forest,
                    },
                    Stage::Lof(lof) => FittedModel::HaarLof {
                        grid: grid.clone(),
                        basis,
                        lof,
                    },
                })?
            }
        };
        Ok((FittedDetector { config: cfg, model }, scores))
    }

    pub fn fit(cfg: &DetectorConfig, train: &FunctionalDataset) -> Result<Self> {
        Ok(Self::fit_score(cfg, train)?.0)
    }

    pub fn kind(&self) -> DetectorKind {
        self.config.kind
    }

    /// Grid the model was fitted on.
    pub fn grid(&self) -> &Grid {
        match &self.model {
            FittedModel::Reference { reference } | FittedModel::FeatureMap { reference, .. } => reference.grid(),
            FittedModel::Fif { forest } => forest.grid(),
            FittedModel::FpcaIf { fpca, .. } | FittedModel::FpcaLof { fpca, .. } => &fpca.grid,
            FittedModel::HaarIf { grid, .. } | FittedModel::HaarLof { grid, .. } => grid,
        }
    }

    /// Scores curves that are not part of the training sample.
    pub fn score(&self, ds: &FunctionalDataset) -> Result<ScoreVector> {
        if ds.grid() != self.grid() {
            let msg = if ds.n_points() == self.grid().len() {
                alloc::format!(
                    "grid mismatch: dataset grid points differ from the {} fitted points",
                    ds.n_points()
                )
            } else {
                alloc::format!(
                    "grid mismatch: dataset has {} grid points, model was fitted on {}",
                    ds.n_points(),
                    self.grid().len()
                )
            };
            return Err(Error::Dimension(msg));
        }
        let cfg = &self.config;
        match &self.model {
            FittedModel::Reference { reference } => {
                if cfg.kind == DetectorKind::Ach {
                    ScoreVector::from_depths(&AchDepth::fit(reference, ach_config(cfg))?.depths(ds)?)
                } else {
                    IntegratedDepth::fit(reference, integrated_config(cfg, reference.grid())).scores(ds)
                }
            }
            FittedModel::Fif { forest } => forest.scores(ds),
            FittedModel::FeatureMap { reference, forest } => {
                let base = cfg.kind.base_depth().ok_or_else(|| mismatch(cfg.kind))?;
                FeatureMapDetector::from_parts(reference, map_kind(cfg.kind), base, forest.clone())?.scores(ds)
            }
            FittedModel::FpcaIf { fpca, forest } => forest.scores(&fpca.transform(ds)?),
            FittedModel::FpcaLof { fpca, lof } => lof.scores(&fpca.transform(ds)?),
            FittedModel::HaarIf { basis, forest, .. } => forest.scores(&basis.project(ds)?),
            FittedModel::HaarLof { basis, lof, .. } => lof.scores(&basis.project(ds)?),
        }
    }
}

fn mismatch(kind: DetectorKind) -> Error {
    Error::Config(alloc::format!("stored model does not match detector {kind}"))
}

enum Stage {
    If(IsolationForest),
    Lof(LofModel),
}

fn multivariate_stage(
    cfg: &DetectorConfig,
    feats: MultivariateDataset,
    wrap: impl Fn(Stage) -> FittedModel,
) -> Result<(FittedModel, ScoreVector)> {
    if let Some(k) = cfg.params.lof_k {
        let lof = LofModel::fit(&feats, k)?;
        let s = lof.training_scores()?;
        Ok((wrap(Stage::Lof(lof)), s))
    } else {
        let forest = IsolationForest::fit(&feats, &cfg.iforest_config())?;
        let s = forest.scores(&feats)?;
        Ok((wrap(Stage::If(forest)), s))
    }
}

/// Registry names in display order.
pub fn registry() -> Vec<String> {
    DetectorKind::ALL.iter().map(|k| String::from(k.name())).collect()
}

/// Fits `name` on `train` and scores the training curves.
pub fn fit_and_score(name: &str, train: &FunctionalDataset, seed: u64) -> Result<ScoreVector> {
    Ok(FittedDetector::fit_score(&DetectorConfig::from_name(name, seed)?, train)?.1)
}
