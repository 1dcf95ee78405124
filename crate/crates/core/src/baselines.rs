//! Multivariate detectors used after filtering or feature maps: isolation
//! forest with axis-aligned cuts and the local outlier factor.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::fif::{average_path_length, isolation_score};
use crate::{math, par, rng, Error, Result, ScoreVector};

/// `n x d` matrix of finite reals, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateDataset {
    dim: usize,
    values: Vec<f64>,
}

impl MultivariateDataset {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::Dimension(alloc::format!(
                "{} values do not form rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k / dim,
                col: k % dim,
            });
        }
        Ok(MultivariateDataset { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("rows have different lengths".into()));
        }
        Self::new(rows.concat(), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        MultivariateDataset {
            dim: self.dim,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IForestConfig {
    pub n_trees: usize,
    pub subsample: usize,
    pub seed: u64,
}

impl IForestConfig {
    /// 100 trees, `psi = min(256, n)`.
    pub fn for_sample_size(n: usize, seed: u64) -> Self {
        IForestConfig {
            n_trees: 100,
            subsample: n.clamp(1, 256),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum INode {
    Internal { feature: u32, threshold: f64, right: u32 },
    Leaf { size: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ITree {
    pub nodes: Vec<INode>,
}

/// Isolation forest with axis-aligned cuts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    dim: usize,
    subsample: usize,
    trees: Vec<ITree>,
}

struct ITreeBuilder<'a> {
    data: &'a MultivariateDataset,
    height_limit: usize,
    rng: rng::Rng,
    nodes: Vec<INode>,
}

impl ITreeBuilder<'_> {
    fn build(&mut self, idx: &mut [usize], depth: usize) {
        if idx.len() <= 1 || depth >= self.height_limit {
            self.nodes.push(INode::Leaf { size: idx.len() as u32 });
            return;
        }
        // coordinates that still vary inside the node; drawing uniformly
        // among them is resampling the coordinate until a split exists
        let d = self.data.dim();
        let ranges: Vec<(usize, f64, f64)> = (0..d)
            .filter_map(|f| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = self.data.row(i)[f];
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            self.nodes.push(INode::Leaf { size: idx.len() as u32 });
            return;
        }
        let (feature, lo, hi) = ranges[self.rng.gen_range(0..ranges.len())];
        let threshold = loop {
            let u: f64 = self.rng.gen();
            let c = lo + u * (hi - lo);
            if c > lo && c < hi {
                break c;
            }
        };
        idx.sort_by_key(|&i| self.data.row(i)[feature] >= threshold);
        let n_left = idx.iter().filter(|&&i| self.data.row(i)[feature] < threshold).count();
        let me = self.nodes.len();
        self.nodes.push(INode::Internal {
            feature: feature as u32,
            threshold,
            right: 0,
        });
        let (left, right) = idx.split_at_mut(n_left);
        self.build(left, depth + 1);
        let r = self.nodes.len() as u32;
        if let INode::Internal { right: slot, .. } = &mut self.nodes[me] {
            *slot = r;
        }
        self.build(right, depth + 1);
    }
}

impl IsolationForest {
    pub fn fit(data: &MultivariateDataset, cfg: &IForestConfig) -> Result<Self> {
        let n = data.len();
        if cfg.n_trees == 0 {
            return Err(Error::Config("n_trees must be positive".into()));
        }
        if cfg.subsample == 0 || cfg.subsample > n {
            return Err(Error::Config(alloc::format!(
                "subsample size {} must lie in [1, {n}]",
                cfg.subsample
            )));
        }
        let height_limit = crate::fif::default_height_limit(cfg.subsample.max(2));
        let trees = par::map_indices(cfg.n_trees, |k| {
            let mut rng = rng::stream(cfg.seed, k as u64);
            let mut idx = index::sample(&mut rng, n, cfg.subsample).into_vec();
            let mut b = ITreeBuilder {
                data,
                height_limit,
                rng,
                nodes: Vec::new(),
            };
            b.build(&mut idx, 0);
            ITree { nodes: b.nodes }
        });
        Ok(IsolationForest {
            dim: data.dim(),
            subsample: cfg.subsample,
            trees,
        })
    }

    pub fn trees(&self) -> &[ITree] {
        &self.trees
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean_path_length(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension(alloc::format!(
                "point has {} coordinates, forest expects {}",
                x.len(),
                self.dim
            )));
        }
        let mut total = 0.0;
        for t in &self.trees {
            let (mut k, mut depth) = (0usize, 0usize);
            loop {
                match t.nodes[k] {
                    INode::Leaf { size } => {
                        total += depth as f64 + average_path_length(size as usize);
                        break;
                    }
                    INode::Internal {
                        feature,
                        threshold,
                        right,
                    } => {
                        k = if x[feature as usize] < threshold {
                            k + 1
                        } else {
                            right as usize
                        };
                        depth += 1;
                    }
                }
            }
        }
        Ok(total / self.trees.len() as f64)
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(isolation_score(self.mean_path_length(x)?, self.subsample))
    }

    pub fn scores(&self, data: &MultivariateDataset) -> Result<ScoreVector> {
        let s: Result<Vec<f64>> = par::map_indices(data.len(), |i| self.score(data.row(i)))
            .into_iter()
            .collect();
        ScoreVector::new(s?)
    }
}

pub fn iforest_fit(data: &MultivariateDataset, cfg: &IForestConfig) -> Result<IsolationForest> {
    IsolationForest::fit(data, cfg)
}

pub fn iforest_score(model: &IsolationForest, point: &[f64]) -> Result<f64> {
    model.score(point)
}

/// Floor for the mean reachability distance of duplicated points.
pub const LRD_EPS: f64 = 1e-12;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Local outlier factor model: the reference points, their `k`-distances
/// and local reachability densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofModel {
    k: usize,
    data: MultivariateDataset,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
    /// training-set LOF values
    lof: Vec<f64>,
}

/// Neighbourhood `N_k`: every point within the `k`-distance (ties included).
fn neighbourhood(dist: &[(f64, usize)], k: usize) -> (&[(f64, usize)], f64) {
    let kd = dist[k - 1].0;
    let end = dist.partition_point(|&(d, _)| d <= kd);
    (&dist[..end], kd)
}

fn sorted_distances(data: &MultivariateDataset, x: &[f64], skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = data
        .rows()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .map(|(i, r)| (euclidean(x, r), i))
        .collect();
    d.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d
}

impl LofModel {
    pub fn fit(data: &MultivariateDataset, k: usize) -> Result<Self> {
        let n = data.len();
        if k == 0 || k >= n {
            return Err(Error::Config(alloc::format!(
                "LOF neighbourhood size k = {k} must lie in [1, {}]",
                n.saturating_sub(1)
            )));
        }
        let dists: Vec<Vec<(f64, usize)>> = par::map_indices(n, |i| sorted_distances(data, data.row(i), Some(i)));
        let k_distance: Vec<f64> = dists.iter().map(|d| neighbourhood(d, k).1).collect();
        let lrd: Vec<f64> = dists
            .iter()
            .map(|d| {
                let (nb, _) = neighbourhood(d, k);
                let reach: f64 = nb.iter().map(|&(dist, o)| dist.max(k_distance[o])).sum();
                1.0 / f64::max(reach / nb.len() as f64, LRD_EPS)
            })
            .collect();
        let lof = dists
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let (nb, _) = neighbourhood(d, k);
                nb.iter().map(|&(_, o)| lrd[o]).sum::<f64>() / nb.len() as f64 / lrd[i]
            })
            .collect();
        Ok(LofModel {
            k,
            data: data.clone(),
            k_distance,
            lrd,
            lof,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// LOF values of the reference points.
    pub fn training_scores(&self) -> Result<ScoreVector> {
        ScoreVector::new(self.lof.clone())
    }

    /// LOF of a new point relative to the reference set.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.data.dim() {
            return Err(Error::Dimension(alloc::format!(
                "point has {} coordinates, model expects {}",
                x.len(),
                self.data.dim()
            )));
        }
        let d = sorted_distances(&self.data, x, None);
        let (nb, _) = neighbourhood(&d, self.k);
        let reach: f64 = nb.iter().map(|&(dist, o)| dist.max(self.k_distance[o])).sum();
        let lrd_x = 1.0 / f64::max(reach / nb.len() as f64, LRD_EPS);
        Ok(nb.iter().map(|&(_, o)| self.lrd[o]).sum::<f64>() / nb.len() as f64 / lrd_x)
    }

    pub fn scores(&self, data: &MultivariateDataset) -> Result<ScoreVector> {
        let s: Result<Vec<f64>> = par::map_indices(data.len(), |i| self.score(data.row(i)))
            .into_iter()
            .collect();
        ScoreVector::new(s?)
    }
}

/// LOF of every point of `data` with Euclidean `k`-NN.
pub fn lof(data: &MultivariateDataset, k: usize) -> Result<ScoreVector> {
    LofModel::fit(data, k)?.training_scores()
}
